#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "bpec/queue_net.hpp"
#include "bpec/rng.hpp"

using namespace bpec;

namespace {

std::vector<std::vector<PacketVector>> random_sessions(SplitMix64& rng, const Gf& gf,
                                                       std::vector<int> sizes, int p) {
    std::vector<std::vector<PacketVector>> out;
    for (int d : sizes) {
        std::vector<PacketVector> session(d, PacketVector(p));
        for (auto& pkt : session)
            for (auto& x : pkt) x = rng.field_element(gf.m());
        out.push_back(std::move(session));
    }
    return out;
}

// Ground-truth check of the token identity s = sum_p b(p) p + c for every
// defined view of every stored packet.
void check_views_against_truth(const QueueNetwork& net,
                               const std::vector<std::vector<PacketVector>>& sessions) {
    const Gf& gf = net.field();
    auto check_packet = [&](const StoredPacket& pkt, mask_t members) {
        for (int u = 1; u <= net.n(); ++u) {
            const TokenView& view = pkt.views[u - 1];
            REQUIRE(view.defined == has_user(members, u));
            if (!view.defined) continue;
            PacketVector acc = view.c;
            acc.resize(pkt.payload.size(), 0);
            for (std::size_t p = 0; p < view.b.size(); ++p)
                axpy(gf, view.b[p], sessions[u - 1][p], acc);
            CHECK(acc == pkt.payload);
        }
    };
    for (mask_t S = 1; S < (mask_t(1) << net.n()); ++S)
        for (const StoredPacket& pkt : net.packets(S)) check_packet(pkt, S);
}

Recipe singleton(const QueueNetwork& net, mask_t S, std::size_t idx, fe a = 1) {
    Recipe r(net.packets(S).size(), 0);
    r[idx] = a;
    return r;
}

}  // namespace

TEST_CASE("initialize seeds singleton queues with identity views") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x11};
    auto sessions = random_sessions(rng, gf, {10, 10, 10}, 4);
    auto net = QueueNetwork::initialize(gf, sessions);

    for (int u = 1; u <= 3; ++u) {
        CHECK(net.k(user_bit(u), u) == 10);
        CHECK(net.k_delivered(u) == 0);
        CHECK(net.queue_size(user_bit(u)) == 10);
        const auto& basis = net.basis(user_bit(u), u);
        REQUIRE(basis.size() == 10);
        for (int j = 0; j < 10; ++j) {
            CoeffVector e(10, 0);
            e[j] = 1;
            CHECK(basis[j] == e);
        }
    }
    CHECK(net.k(0b011, 1) == 0);
    CHECK(net.k(0b111, 2) == 0);
    CHECK(net.queue_size(0b110) == 0);
    net.check_invariants();
    check_views_against_truth(net, sessions);
}

TEST_CASE("initialize handles one user one packet") {
    const Gf& gf = Gf::get(4);
    auto net = QueueNetwork::initialize(gf, {{{7, 7}}});
    CHECK(net.k(1, 1) == 1);
    CHECK(net.basis(1, 1) == std::vector<CoeffVector>{{1}});
    net.check_invariants();
}

TEST_CASE("small fields are rejected") {
    const Gf& gf = Gf::get(4);
    std::vector<int> sizes(16, 1);
    CHECK_THROWS_AS(QueueNetwork::initialize_counts(gf, sizes), FieldTooSmall);
    CHECK_NOTHROW(QueueNetwork::initialize_counts(gf, std::vector<int>(15, 1)));
}

TEST_CASE("form_combination of a single packet returns that packet") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x22};
    auto sessions = random_sessions(rng, gf, {3, 2}, 5);
    auto net = QueueNetwork::initialize(gf, sessions);

    auto combo = net.form_combination(user_bit(1), singleton(net, user_bit(1), 1));
    CHECK(combo.payload == sessions[0][1]);
    CHECK(combo.views[0].defined);
    CHECK(combo.views[0].b == CoeffVector{0, 1, 0});
    CHECK_FALSE(combo.views[1].defined);

    auto zero = net.form_combination(user_bit(1), Recipe(3, 0));
    CHECK(zero.payload == PacketVector(5, 0));
    CHECK(zero.views[0].b == CoeffVector(3, 0));
}

TEST_CASE("combined views satisfy the token identity") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x33};
    auto sessions = random_sessions(rng, gf, {4, 4}, 3);
    auto net = QueueNetwork::initialize(gf, sessions);

    Recipe r(4);
    for (auto& a : r) a = rng.field_element(8);
    auto combo = net.form_combination(user_bit(2), r);
    PacketVector acc = combo.views[1].c;
    for (int p = 0; p < 4; ++p) axpy(gf, combo.views[1].b[p], sessions[1][p], acc);
    CHECK(acc == combo.payload);
}

TEST_CASE("uncoded slot heard only by another user moves the packet up") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x44};
    auto sessions = random_sessions(rng, gf, {10, 10, 10}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);

    // Slot 1: the first packet reaches its own user and is delivered.
    auto first = net.form_combination(user_bit(1), singleton(net, user_bit(1), 0));
    net.apply_actfb1(user_bit(1), first, user_bit(1), 1);
    REQUIRE(net.k_delivered(1) == 1);

    // Slot 2: the second packet is heard only by user 2.
    auto sent = net.form_combination(user_bit(1), singleton(net, user_bit(1), 1));
    auto outcome = net.apply_actfb1(user_bit(1), sent, user_bit(2), 2);

    CHECK(outcome.advanced);
    CHECK(outcome.appended);
    CHECK(outcome.dest == 0b011);
    CHECK(outcome.moved == user_bit(1));
    CHECK(outcome.delivered == 0);
    CHECK(net.k(user_bit(1), 1) == 8);
    CHECK(net.k(0b011, 1) == 1);
    CHECK(net.queue_size(0b011) == 1);
    const auto& stored = net.packets(0b011).back();
    CHECK(stored.payload == sessions[0][1]);
    CHECK(stored.views[1].b == CoeffVector(10, 0));
    CHECK(stored.views[1].c == sessions[0][1]);
    net.check_invariants();
    check_views_against_truth(net, sessions);
}

TEST_CASE("no receiver means retransmission with no state change") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x55};
    auto sessions = random_sessions(rng, gf, {2, 2}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);
    auto sent = net.form_combination(user_bit(1), singleton(net, user_bit(1), 0));
    auto outcome = net.apply_actfb1(user_bit(1), sent, 0, 1);
    CHECK(outcome.retransmit());
    CHECK_FALSE(outcome.appended);
    CHECK(net.k(user_bit(1), 1) == 2);
    CHECK(net.queue_size(0b11) == 0);
    net.check_invariants();
}

TEST_CASE("delivery and upward move can happen on the same slot") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x66};
    auto sessions = random_sessions(rng, gf, {2, 2, 1}, 3);
    auto net = QueueNetwork::initialize(gf, sessions);

    // Stock Q_{1,2} with one packet per user.
    auto s1 = net.form_combination(0b001, singleton(net, 0b001, 0));
    net.apply_actfb1(0b001, s1, user_bit(2), 1);
    auto s2 = net.form_combination(0b010, singleton(net, 0b010, 0));
    net.apply_actfb1(0b010, s2, user_bit(1), 2);
    REQUIRE(net.k(0b011, 1) == 1);
    REQUIRE(net.k(0b011, 2) == 1);
    REQUIRE(net.queue_size(0b011) == 2);

    // Combine both and let users 2 and 3 hear it: user 2's token is
    // delivered, user 1's moves to the level-3 queue alongside the packet.
    Recipe r(2, 1);
    auto s3 = net.form_combination(0b011, r);
    auto outcome = net.apply_actfb1(0b011, s3, user_bit(2) | user_bit(3), 3);

    CHECK(outcome.advanced);
    CHECK(outcome.delivered == user_bit(2));
    CHECK(outcome.moved == user_bit(1));
    CHECK(outcome.dest == 0b111);
    CHECK(net.k(0b011, 1) == 0);
    CHECK(net.k(0b011, 2) == 0);
    CHECK(net.k(0b111, 1) == 1);
    CHECK(net.k_delivered(2) == 1);
    CHECK(net.queue_size(0b111) == 1);
    REQUIRE(net.delivered(2).size() == 1);
    CHECK(net.delivered(2)[0].payload == s3.payload);

    const auto& stored = net.packets(0b111)[0];
    CHECK(stored.views[0].defined);
    CHECK(stored.views[1].defined);
    CHECK(stored.views[2].defined);
    CHECK(stored.views[2].b == CoeffVector(1, 0));
    CHECK(stored.views[2].c == s3.payload);
    net.check_invariants();
    check_views_against_truth(net, sessions);
}

TEST_CASE("append happens even when no erased member still holds tokens") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x77};
    auto sessions = random_sessions(rng, gf, {1, 1, 1}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);

    auto s1 = net.form_combination(0b001, singleton(net, 0b001, 0));
    net.apply_actfb1(0b001, s1, user_bit(2), 1);
    REQUIRE(net.k(0b011, 1) == 1);

    // Only user 1 has an index here; it is delivered while user 3 freshly
    // hears the packet, so the packet is still added to Q_{1,2,3}.
    auto s2 = net.form_combination(0b011, singleton(net, 0b011, 0));
    auto outcome = net.apply_actfb1(0b011, s2, user_bit(1) | user_bit(3), 2);
    CHECK(outcome.delivered == user_bit(1));
    CHECK(outcome.moved == 0);
    CHECK(outcome.appended);
    CHECK(net.queue_size(0b111) == 1);
    CHECK(net.k(0b111, 2) == 0);
    net.check_invariants();
    check_views_against_truth(net, sessions);
}

TEST_CASE("index-only mode mirrors the index dynamics without contents") {
    const Gf& gf = Gf::get(8);
    auto net = QueueNetwork::initialize_counts(gf, {2, 2});
    auto outcome = net.apply_actfb1(0b01, Combination{}, 0b10, 1);
    CHECK(outcome.moved == user_bit(1));
    CHECK(net.k(0b01, 1) == 1);
    CHECK(net.k(0b11, 1) == 1);
    CHECK(net.queue_size(0b11) == 1);
    outcome = net.apply_actfb1(0b01, Combination{}, 0b01, 2);
    CHECK(outcome.delivered == user_bit(1));
    CHECK(net.k_delivered(1) == 1);
    CHECK_THROWS_AS(net.form_combination(0b01, Recipe{}), std::logic_error);
    net.check_invariants();
}

TEST_CASE("shadow mode tracks all coefficient views but only its own constants") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x88};
    auto sessions = random_sessions(rng, gf, {2, 2}, 3);
    auto full = QueueNetwork::initialize(gf, sessions);
    auto shadow = QueueNetwork::initialize_shadow(gf, {2, 2}, 3, 2);

    auto sent_full = full.form_combination(0b01, singleton(full, 0b01, 0));
    auto sent_sh = shadow.form_combination(0b01, singleton(shadow, 0b01, 0));
    CHECK(sent_sh.payload.empty());
    CHECK(sent_sh.views[0].b == sent_full.views[0].b);
    CHECK(sent_sh.views[0].c.empty());

    // User 2 heard the slot, so the replay side learns the payload.
    sent_sh.payload = sent_full.payload;
    full.apply_actfb1(0b01, sent_full, user_bit(2), 1);
    shadow.apply_actfb1(0b01, sent_sh, user_bit(2), 1);

    CHECK(shadow.k(0b11, 1) == full.k(0b11, 1));
    const auto& pkt = shadow.packets(0b11)[0];
    CHECK(pkt.views[1].c == sent_full.payload);
    CHECK(pkt.views[0].c.empty());
    CHECK(pkt.views[0].b == full.packets(0b11)[0].views[0].b);
    shadow.check_invariants();
}
