#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "bpec/encoder_code1.hpp"

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

CoeffVector unit(size_t d, size_t k) {
    CoeffVector e(d, 0);
    e[k] = 1;
    return e;
}

}  // namespace

TEST_CASE("recipes for a single-packet queue take any nonzero coefficient") {
    const Gf& gf = Gf::get(8);
    RecipeTarget t;
    t.packet_b = {unit(1, 0)};
    t.union_basis = {unit(1, 0)};
    t.bhat_pos = 0;
    SplitMix64 rng{9};
    for (int trial = 0; trial < 50; ++trial) {
        auto res = draw_recipe(gf, 1, {t}, rng);
        CHECK(res.recipe[0] != 0);
    }
}

TEST_CASE("recipe draw count matches the exact acceptance probability") {
    // Ten users, each with two packets: one already delivered (basis e2) and
    // one live in the shared queue (basis e1). The queue's second packet is
    // seen by user i as (i-1)*e1 + e2, so a draw (a1, a2) is accepted for
    // user i iff a1 + a2*(i-1) != 0. Over GF(16) exactly 105/256 draws pass
    // all ten users, so the mean number of draws is 256/105.
    const Gf& gf = Gf::get(4);
    std::vector<RecipeTarget> targets;
    for (int i = 0; i < 10; ++i) {
        RecipeTarget t;
        t.union_basis = {unit(2, 1), unit(2, 0)};
        t.bhat_pos = 1;
        t.packet_b = {unit(2, 0), CoeffVector{fe(i), 1}};
        targets.push_back(std::move(t));
    }
    SplitMix64 rng{0xfeed};
    long draws = 0;
    const int recipes = 10000;
    for (int r = 0; r < recipes; ++r) draws += draw_recipe(gf, 2, targets, rng).draws;
    const double mean = double(draws) / recipes;
    CHECK(mean == doctest::Approx(256.0 / 105.0).epsilon(0.05));
    // the union bound (1 - N/q)^{-1} = 8/3 caps it from above
    CHECK(mean < 8.0 / 3.0 * 1.05);
}

TEST_CASE("retry cap aborts impossible draws") {
    const Gf& gf = Gf::get(4);
    RecipeTarget t;
    t.packet_b = {CoeffVector{0, 0}};  // zero view can never complete a basis
    t.union_basis = {unit(2, 0), unit(2, 1)};
    t.bhat_pos = 0;
    SplitMix64 rng{1};
    CHECK_THROWS_AS(draw_recipe(gf, 1, {t}, rng, 100), std::runtime_error);
}

TEST_CASE("empty sessions terminate immediately") {
    const Gf& gf = Gf::get(8);
    auto net = QueueNetwork::initialize_counts(gf, {0, 0, 0});
    Encoder enc(std::move(net), 1, Algorithm::code1);
    CHECK(enc.done());
    CHECK(enc.slots_used() == 0);
}

TEST_CASE("single user completion time is geometric-sum distributed") {
    const Gf& gf = Gf::get(8);
    const double eps = 0.4;
    const int k = 40;
    auto model = ChannelModel::iid(1, eps);
    long total = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        auto net = QueueNetwork::initialize_counts(gf, {k});
        Encoder enc(std::move(net), 7, Algorithm::code1);
        PatternStream stream(model, child_seed(99, t));
        total += enc.run_to_completion(stream).total_slots;
    }
    const double mean = double(total) / trials;
    CHECK(mean == doctest::Approx(k / (1 - eps)).epsilon(0.02));
}

TEST_CASE("full run delivers everything and keeps every invariant") {
    const Gf& gf = Gf::get(4);
    SplitMix64 seeds{0xabcdef};
    for (int rep = 0; rep < 6; ++rep) {
        const std::uint64_t seed = seeds.next();
        SplitMix64 rng{child_seed(seed, 3)};
        auto sessions = random_sessions(rng, gf, {5, 4, 6}, 2);
        auto net = QueueNetwork::initialize(gf, sessions);
        EncoderOptions opts;
        opts.check_invariants = true;
        opts.keep_transcript = true;
        Encoder enc(std::move(net), child_seed(seed, 2), Algorithm::code1, opts);
        auto model = ChannelModel::joint(
            3, {0.1, 0.15, 0.1, 0.1, 0.15, 0.15, 0.1, 0.15});
        PatternStream stream(model, child_seed(seed, 1));
        auto stats = enc.run_to_completion(stream);

        REQUIRE(stats.completed);
        for (int u = 1; u <= 3; ++u) {
            CHECK(enc.net().k_delivered(u) == enc.net().session_size(u));
            CHECK(rank(gf, enc.net().basis_delivered(u)) == enc.net().session_size(u));
            // every delivered packet decodes against ground truth
            for (const StoredPacket& pkt : enc.net().delivered(u)) {
                PacketVector acc = pkt.views[u - 1].c;
                for (std::size_t p = 0; p < pkt.views[u - 1].b.size(); ++p)
                    axpy(gf, pkt.views[u - 1].b[p], sessions[u - 1][p], acc);
                CHECK(acc == pkt.payload);
            }
        }

        // slot accounting identities
        long sum = 0;
        for (const auto& qs : stats.queues) {
            long user_max = 0;
            for (long v : qs.user_slots) user_max = std::max(user_max, v);
            CHECK(qs.slots == user_max);
            sum += qs.slots;
        }
        CHECK(sum == stats.total_slots);
    }
}

TEST_CASE("same seed and trace reproduce the transcript bit for bit") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x1234};
    auto sessions = random_sessions(rng, gf, {4, 4, 4}, 2);
    auto model = ChannelModel::iid(3, 0.35);
    EncoderOptions opts;
    opts.keep_transcript = true;

    auto run = [&](NetMode mode) {
        QueueNetwork net =
            mode == NetMode::full
                ? QueueNetwork::initialize(gf, sessions)
                : QueueNetwork::initialize_counts(gf, {4, 4, 4});
        Encoder enc(std::move(net), 555, Algorithm::code1, opts);
        PatternStream stream(model, 777);
        return enc.run_to_completion(stream);
    };

    auto a = run(NetMode::full);
    auto b = run(NetMode::full);
    REQUIRE(a.transcript.size() == b.transcript.size());
    for (std::size_t i = 0; i < a.transcript.size(); ++i) {
        CHECK(a.transcript[i].source == b.transcript[i].source);
        CHECK(a.transcript[i].erased == b.transcript[i].erased);
        CHECK(a.transcript[i].recipe == b.transcript[i].recipe);
        CHECK(a.transcript[i].outcome.delivered == b.transcript[i].outcome.delivered);
    }

    // Index-only runs see the same patterns, so the slot dynamics agree
    // even though no coefficients are drawn.
    auto c = run(NetMode::index_only);
    CHECK(c.total_slots == a.total_slots);
    REQUIRE(c.transcript.size() == a.transcript.size());
    for (std::size_t i = 0; i < a.transcript.size(); ++i) {
        CHECK(c.transcript[i].source == a.transcript[i].source);
        CHECK(c.transcript[i].outcome.delivered == a.transcript[i].outcome.delivered);
        CHECK(c.transcript[i].outcome.moved == a.transcript[i].outcome.moved);
    }
}

TEST_CASE("all-erased slots retransmit the identical recipe") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x777};
    auto sessions = random_sessions(rng, gf, {2, 2}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);
    EncoderOptions opts;
    opts.keep_transcript = true;
    Encoder enc(std::move(net), 42, Algorithm::code1, opts);

    auto model = ChannelModel::scripted(
        2, std::vector<std::string>{"EE", "EE", "RR", "EE", "RR", "RR", "RR", "RR"});
    PatternStream stream(model, 0);
    auto stats = enc.run_to_completion(stream);
    REQUIRE(stats.completed);

    const auto& tr = stats.transcript;
    REQUIRE(tr.size() >= 3);
    CHECK(tr[0].outcome.retransmit());
    CHECK_FALSE(tr[0].retransmission);
    CHECK(tr[1].retransmission);
    CHECK(tr[0].recipe == tr[1].recipe);
    CHECK(tr[1].recipe == tr[2].recipe);
    CHECK_FALSE(tr[2].outcome.retransmit());
    CHECK(tr[3].recipe != tr[2].recipe);  // fresh draw after the advance
}

TEST_CASE("uncoded first phase sends each packet in queue order") {
    const Gf& gf = Gf::get(8);
    SplitMix64 rng{0x31};
    auto sessions = random_sessions(rng, gf, {3, 2}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);
    EncoderOptions opts;
    opts.uncoded_phase1 = true;
    opts.keep_transcript = true;
    Encoder enc(std::move(net), 4, Algorithm::code1, opts);

    auto model = ChannelModel::scripted(
        2, std::vector<std::string>{"RR", "RR", "RR", "RR", "RR"});
    PatternStream stream(model, 0);
    auto stats = enc.run_to_completion(stream);
    REQUIRE(stats.completed);
    REQUIRE(stats.total_slots == 5);
    for (int j = 0; j < 3; ++j) {
        CHECK(stats.transcript[j].source == user_bit(1));
        CHECK(stats.transcript[j].recipe == Recipe{j == 0, j == 1, j == 2});
    }
    CHECK(stats.recipe_draws == 0);
}

TEST_CASE("slot cap flags an unfinished run") {
    const Gf& gf = Gf::get(8);
    auto model = ChannelModel::iid(2, 0.5);
    EncoderOptions opts;
    opts.slot_cap = 3;
    auto net = QueueNetwork::initialize_counts(gf, {20, 20});
    Encoder enc(std::move(net), 5, Algorithm::code1, opts);
    PatternStream stream(model, 6);
    auto stats = enc.run_to_completion(stream);
    CHECK(stats.deadline_exceeded);
    CHECK_FALSE(stats.completed);
    CHECK(stats.total_slots == 3);
}
