#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <optional>
#include <string>
#include <vector>

#include "bpec/encoder_code1.hpp"
#include "bpec/encoder_code2.hpp"
#include "bpec/errors.hpp"
#include "bpec/rng.hpp"

using namespace bpec;

namespace {

std::vector<std::vector<PacketVector>> numbered_sessions(const Gf& gf,
                                                         const std::vector<int>& sizes,
                                                         int packet_len) {
    std::vector<std::vector<PacketVector>> sessions;
    fe val = 1;
    for (int count : sizes) {
        std::vector<PacketVector> s;
        for (int p = 0; p < count; ++p) {
            PacketVector v(static_cast<std::size_t>(packet_len));
            for (auto& x : v) x = val++ % gf.q();
            s.push_back(std::move(v));
        }
        sessions.push_back(std::move(s));
    }
    return sessions;
}

struct ScriptedRun {
    Classification cls;
    RunStats stats;
    std::vector<int> delivered;
};

// Drives a scripted trial with deterministic phase-1 routing and captures the
// classification snapshot at the moment the level-2 walk finishes.
ScriptedRun run_scripted(const std::vector<int>& sizes,
                         const std::vector<std::string>& trace,
                         std::uint64_t recipe_seed = 42) {
    const Gf& gf = Gf::get(4);
    auto sessions = numbered_sessions(gf, sizes, 2);

    EncoderOptions opts;
    opts.uncoded_phase1 = true;
    opts.keep_transcript = true;
    opts.check_invariants = true;
    Encoder enc(QueueNetwork::initialize(gf, sessions), recipe_seed,
                Algorithm::code2, opts);

    auto model = ChannelModel::scripted(3, trace);
    PatternStream stream(model, 0);

    std::optional<Classification> cls;
    while (!enc.done()) {
        enc.step(stream.next().erased);
        if (!cls && enc.stats().t2_slot >= 0) cls = classify_at_t2(enc.net());
    }

    ScriptedRun out;
    REQUIRE(cls.has_value());
    out.cls = *cls;
    out.stats = enc.stats();
    for (int u = 1; u <= 3; ++u) out.delivered.push_back(enc.net().k_delivered(u));
    return out;
}

long paired_slots(const RunStats& stats) {
    long n = 0;
    for (const auto& rec : stats.transcript) {
        if (rec.stage == 2) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("empty pair queues revert straight to joint processing") {
    // Every packet lands in the three-user queue; no level-2 survivors exist.
    auto run = run_scripted({1, 1, 1}, {"ERR", "RER", "RRE", "RRR", "RRR"});
    CHECK(run.cls.kind == BranchKind::revert_phase3);
    CHECK(run.cls.survivors == std::array<int, 3>{0, 0, 0});
    CHECK(run.cls.targets.empty());
    CHECK(run.stats.t2_slot == 3);
    CHECK(run.stats.total_slots == 4);
    CHECK(run.stats.completed);
    CHECK(paired_slots(run.stats) == 0);
    CHECK(run.delivered == std::vector<int>{1, 1, 1});
}

TEST_CASE("one survivor per user finishes level 2 plainly") {
    std::vector<std::string> trace = {
        "ERE", "ERE", "EER",  // user 1: two into {1,2}, one into {1,3}
        "REE", "EER", "EER",  // user 2: one into {1,2}, two into {2,3}
        "REE", "REE", "ERE",  // user 3: two into {1,3}, one into {2,3}
        "RRE", "RER", "ERR",  // level-2 walk stops each queue with one survivor
        "RRR", "RRR", "RRR",  // plain finish drains the leftovers
    };
    auto run = run_scripted({3, 3, 3}, trace);
    CHECK(run.cls.kind == BranchKind::finish_level2_plain);
    CHECK(run.cls.survivors == std::array<int, 3>{1, 1, 1});
    CHECK(run.stats.t2_slot == 12);
    CHECK(run.stats.total_slots == 15);
    CHECK(run.stats.completed);
    CHECK(paired_slots(run.stats) == 0);
    CHECK(run.delivered == std::vector<int>{3, 3, 3});
}

TEST_CASE("category a chains into a second scan") {
    std::vector<std::string> trace = {
        "ERE", "ERE", "EER", "EER",  // user 1: {1,2} x2, {1,3} x2
        "REE", "EER", "EER",         // user 2: {1,2} x1, {2,3} x2
        "REE", "ERE", "RRE",         // user 3: {1,3} x1, {2,3} x1, {1,2,3} x1
        "RRE", "RER", "ERR",         // survivors: 1 in {1,2}, 1 in {1,3}, 2 in {2,3}
        "RER",                       // pair {1,3}: deliver j=1 and istar=3 together
        "ERR",                       // pair {2,3}: deliver j=2
        "RRR",                       // rescan picks up {1,2}: deliver j=1
    };
    auto run = run_scripted({4, 3, 3}, trace);
    CHECK(run.cls.kind == BranchKind::paired_processing);
    CHECK(run.cls.category == 'a');
    CHECK(run.cls.survivors == std::array<int, 3>{2, 1, 0});
    REQUIRE(run.cls.targets.size() == 2);
    CHECK(run.cls.targets[0].pair == 0b101);
    CHECK(run.cls.targets[0].istar == 3);
    CHECK(run.cls.targets[0].j == 1);
    CHECK(run.cls.targets[1].pair == 0b110);
    CHECK(run.cls.targets[1].istar == 3);
    CHECK(run.cls.targets[1].j == 2);
    CHECK(run.stats.t2_slot == 13);
    CHECK(run.stats.total_slots == 16);
    CHECK(run.stats.completed);
    CHECK(paired_slots(run.stats) == 3);
    CHECK(run.delivered == std::vector<int>{4, 3, 3});

    // Slot 14 fires the pair delivery and the joint-queue delivery together.
    const auto& co = run.stats.transcript[13];
    CHECK(co.stage == 2);
    CHECK(co.source == 0b101);
    CHECK(co.source2 == 0b111);
    CHECK(co.outcome.delivered == 0b101);
}

TEST_CASE("category b frees the blocked pair after the survivor drains") {
    std::vector<std::string> trace = {
        "ERE", "ERE", "EER",  // user 1: {1,2} x2, {1,3} x1
        "REE", "EER", "EER",  // user 2: {1,2} x1, {2,3} x2
        "REE", "ERE",         // user 3: {1,3} x1, {2,3} x1
        "RRE", "RER", "ERR",  // stops: survivor 1 in {1,2}, none in {1,3}, 2 in {2,3}
        "ERR",                // pair {2,3}: deliver j=2
        "RRE",                // second scan: pair {1,2}, deliver j=1
    };
    auto run = run_scripted({3, 3, 2}, trace);
    CHECK(run.cls.kind == BranchKind::paired_processing);
    CHECK(run.cls.category == 'b');
    CHECK(run.cls.survivors == std::array<int, 3>{1, 1, 0});
    REQUIRE(run.cls.targets.size() == 1);
    CHECK(run.cls.targets[0].pair == 0b110);
    CHECK(run.cls.targets[0].istar == 3);
    CHECK(run.cls.targets[0].j == 2);
    CHECK(run.stats.t2_slot == 11);
    CHECK(run.stats.total_slots == 13);
    CHECK(run.stats.completed);
    CHECK(paired_slots(run.stats) == 2);
    CHECK(run.delivered == std::vector<int>{3, 3, 2});
}

TEST_CASE("category c counts a skipped lopsided queue as survival") {
    std::vector<std::string> trace = {
        "ERE", "ERE", "EER",  // user 1: {1,2} x2, {1,3} x1
        "REE",                // user 2: {1,2} x1
        "RRE",                // level 2 processes only {1,2}; {1,3} lacks user 3
        "RRR",                // pair {1,2}: deliver j=1
        "RRR",                // pair {1,3}: deliver j=1
    };
    auto run = run_scripted({3, 1, 0}, trace);
    CHECK(run.cls.kind == BranchKind::paired_processing);
    CHECK(run.cls.category == 'c');
    CHECK(run.cls.survivors == std::array<int, 3>{2, 0, 0});
    REQUIRE(run.cls.targets.size() == 2);
    CHECK(run.cls.targets[0].pair == 0b011);
    CHECK(run.cls.targets[0].istar == 2);
    CHECK(run.cls.targets[1].pair == 0b101);
    CHECK(run.cls.targets[1].istar == 3);
    CHECK(run.stats.t2_slot == 5);
    CHECK(run.stats.total_slots == 7);
    CHECK(run.stats.completed);
    CHECK(run.delivered == std::vector<int>{3, 1, 0});
}

TEST_CASE("category d moves a surviving token into the joint queue") {
    std::vector<std::string> trace = {
        "ERE", "ERE", "ERE",  // user 1: {1,2} x3
        "REE", "RER",         // user 2: {1,2} x1, {1,2,3} x1
        "RRE",                // level 2: queue {1,2} stops at (2,0)
        "EER",                // paired: j=1 erases, user 3 receives: token moves up
        "RER",                // j=1 receives: pair delivery
        "RRR",                // joint queue drains both leftovers
    };
    auto run = run_scripted({3, 2, 0}, trace);
    CHECK(run.cls.kind == BranchKind::paired_processing);
    CHECK(run.cls.category == 'd');
    CHECK(run.cls.survivors == std::array<int, 3>{1, 0, 0});
    REQUIRE(run.cls.targets.size() == 1);
    CHECK(run.cls.targets[0].pair == 0b011);
    CHECK(run.cls.targets[0].istar == 2);
    CHECK(run.cls.targets[0].j == 1);
    CHECK(run.stats.t2_slot == 6);
    CHECK(run.stats.total_slots == 9);
    CHECK(run.stats.completed);
    CHECK(run.delivered == std::vector<int>{3, 2, 0});

    const auto& up = run.stats.transcript[6];
    CHECK(up.stage == 2);
    CHECK(up.outcome.appended);
    CHECK(up.outcome.dest == 0b111);
    CHECK(up.outcome.moved == 0b001);
    CHECK(up.outcome.delivered == 0);

    const auto& joint = run.stats.transcript[8];
    CHECK(joint.stage == 1);
    CHECK(joint.source == 0b111);
    CHECK(joint.outcome.delivered == 0b011);
}

TEST_CASE("paired stage retransmits until someone useful listens") {
    std::vector<std::string> trace = {
        "ERE", "ERE",  // user 1: {1,2} x2
        "REE",         // user 2: {1,2} x1
        "RRE",         // level 2: queue {1,2} stops at (1,0)
        "EEE",         // everyone erases: retransmission
        "ERE",         // only istar=2 listens and its joint index is empty
        "EER",         // j erases, user 3 receives: move up instead
        "RRR",         // joint queue delivers the moved token
    };
    auto run = run_scripted({2, 1, 0}, trace);
    CHECK(run.cls.category == 'd');
    CHECK(run.stats.t2_slot == 4);
    CHECK(run.stats.total_slots == 8);
    CHECK(run.stats.completed);
    CHECK(run.delivered == std::vector<int>{2, 1, 0});

    const auto& t = run.stats.transcript;
    CHECK(t[4].outcome.retransmit());
    CHECK_FALSE(t[4].retransmission);
    CHECK(t[5].outcome.retransmit());
    CHECK(t[5].retransmission);
    CHECK(t[6].retransmission);
    CHECK_FALSE(t[6].outcome.retransmit());
    CHECK(t[4].recipe == t[5].recipe);
    CHECK(t[5].recipe == t[6].recipe);
}

TEST_CASE("double survival in one pair queue is rejected") {
    const Gf& gf = Gf::get(4);
    auto sessions = numbered_sessions(gf, {2, 2, 0}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);

    auto push = [&](mask_t from, int idx, mask_t heard) {
        Recipe r(static_cast<std::size_t>(net.queue_size(from)), fe(0));
        r[static_cast<std::size_t>(idx)] = 1;
        auto sent = net.form_combination(from, r);
        net.apply_actfb1(from, sent, heard, 0);
    };
    push(0b001, 0, 0b010);
    push(0b001, 1, 0b010);
    push(0b010, 0, 0b001);
    push(0b010, 1, 0b001);
    REQUIRE(net.k(0b011, 1) == 2);
    REQUIRE(net.k(0b011, 2) == 2);

    CHECK_THROWS_AS(classify_at_t2(net), InvalidSurvival);
    CHECK_THROWS_AS(scan_paired_targets(net), InvalidSurvival);
}

TEST_CASE("paired machinery requires exactly three users") {
    const Gf& gf = Gf::get(4);
    auto sessions = numbered_sessions(gf, {1, 1}, 2);
    auto net = QueueNetwork::initialize(gf, sessions);
    CHECK_THROWS_AS(classify_at_t2(net), UnsupportedN);
    CHECK_THROWS_AS(scan_paired_targets(net), UnsupportedN);
    CHECK_THROWS_AS(Encoder(QueueNetwork::initialize(gf, sessions), 1, Algorithm::code2),
                    UnsupportedN);
}

TEST_CASE("random trials complete with invariants held") {
    const Gf& gf = Gf::get(4);
    SplitMix64 meta(0xc0de2);
    for (int rep = 0; rep < 30; ++rep) {
        const std::uint64_t trial = child_seed(meta.next(), rep);
        SplitMix64 rng(child_seed(trial, 3));

        std::vector<int> sizes = {2 + int(rng.next() % 4), 2 + int(rng.next() % 4),
                                  2 + int(rng.next() % 4)};
        auto sessions = numbered_sessions(gf, sizes, 2);

        std::vector<double> probs(8);
        double sum = 0;
        for (auto& p : probs) {
            p = rng.unit() + 0.05;
            sum += p;
        }
        for (auto& p : probs) p /= sum;

        EncoderOptions opts;
        opts.check_invariants = true;
        opts.keep_transcript = true;
        Encoder enc(QueueNetwork::initialize(gf, sessions), child_seed(trial, 2),
                    Algorithm::code2, opts);
        PatternStream stream(ChannelModel::joint(3, probs), child_seed(trial, 1));
        enc.run_to_completion(stream);

        const auto& stats = enc.stats();
        REQUIRE(stats.completed);
        REQUIRE(stats.t2_slot >= 0);
        for (int u = 1; u <= 3; ++u) {
            REQUIRE(enc.net().k_delivered(u) == sizes[static_cast<std::size_t>(u - 1)]);
        }
        for (const auto& rec : stats.transcript) {
            if (rec.stage == 2) {
                CHECK(rec.slot > stats.t2_slot);
                CHECK(popcount(rec.source) == 2);
                CHECK(rec.source2 == 0b111);
            }
        }
    }
}

TEST_CASE("paired processing beats plain joint processing on average") {
    // Erasure table: singles 0.3 each, pairs 0.15 / 0.12 / 0.09, all 0.05.
    // Expected slots per session packet: 3.73524 without the paired stage,
    // 3.65767 with it.
    std::vector<double> probs(8);
    probs[0b000] = 0.41;
    probs[0b001] = 0.08;
    probs[0b010] = 0.11;
    probs[0b011] = 0.10;
    probs[0b100] = 0.14;
    probs[0b101] = 0.07;
    probs[0b110] = 0.04;
    probs[0b111] = 0.05;
    auto model = ChannelModel::joint(3, probs);

    const int k = 150;
    const int trials = 400;
    const Gf& gf = Gf::get(4);
    const std::vector<int> sizes = {k, k, k};

    double mean1 = 0, mean2 = 0;
    SplitMix64 meta(0xabcdef);
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t trial = child_seed(meta.next(), t);
        for (Algorithm alg : {Algorithm::code1, Algorithm::code2}) {
            Encoder enc(QueueNetwork::initialize_counts(gf, sizes), child_seed(trial, 2),
                        alg);
            PatternStream stream(model, child_seed(trial, 1));
            enc.run_to_completion(stream);
            REQUIRE(enc.stats().completed);
            (alg == Algorithm::code1 ? mean1 : mean2) += double(enc.stats().total_slots);
        }
    }
    mean1 /= trials;
    mean2 /= trials;
    CHECK(mean2 < mean1);
    CHECK(mean1 / k == doctest::Approx(3.73524).epsilon(0.02));
    CHECK(mean2 / k == doctest::Approx(3.65767).epsilon(0.02));
}
