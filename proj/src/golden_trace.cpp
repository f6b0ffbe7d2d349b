#include <array>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bpec/decoder.hpp"
#include "bpec/errors.hpp"
#include "bpec/harness.hpp"
#include "bpec/subset.hpp"

namespace bpec {

namespace {

// Hand-worked three-user walkthrough: ten packets per session, every slot's
// erasure pattern scripted, every queue and index value traced on paper.
// Phase 1 sends u1..u10, v1..v10, w1..w10 uncoded; X marks receptions that
// cannot change the queue state (the packet was already delivered).

const std::vector<std::string> kTrace = {
    // session 1 (slots 1-10)
    "RXX", "ERE", "ERR", "ERE", "EER", "ERR", "RXX", "EER", "RXX", "ERR",
    // session 2 (slots 11-20)
    "REE", "EER", "XRX", "REE", "EER", "XRX", "RER", "RER", "XRX", "EER",
    // session 3 (slots 21-30)
    "ERE", "REE", "REE", "XXR", "ERE", "XXR", "ERE", "ERE", "REE", "RRE",
    // pair queues (slots 31-40)
    "REE", "ERR", "RER", "ERE", "ERE", "ERE", "REE", "ERR", "ERR", "EER",
    // full queue (slots 41-47)
    "RRR", "RER", "RRR", "ERR", "RRE", "RER", "RRE"};

struct TokenSet {
    mask_t queue;
    int user;
    std::vector<int> indices;  // 1-based packet indices within the session
};

// End of phase 1: which original packets sit in which queue, per needing user.
const std::vector<TokenSet> kPhase1Tokens = {
    {0b011, 1, {2, 4}},        {0b011, 2, {1, 4}},
    {0b101, 1, {5, 8}},        {0b101, 3, {2, 3, 9}},
    {0b110, 2, {2, 5, 10}},    {0b110, 3, {1, 5, 7, 8}},
    {0b111, 1, {3, 6, 10}},    {0b111, 2, {7, 8}},
    {0b111, 3, {10}},
};

const std::array<std::vector<int>, 3> kPhase1Delivered = {
    std::vector<int>{1, 7, 9}, std::vector<int>{3, 6, 9}, std::vector<int>{4, 6}};

struct PairStep {
    mask_t queue;
    std::array<int, 2> k_after;  // users in ascending order
};

const std::array<PairStep, 10> kPhase2 = {{{0b011, {1, 2}},
                                           {0b011, {0, 1}},
                                           {0b011, {0, 0}},
                                           {0b101, {1, 2}},
                                           {0b101, {0, 1}},
                                           {0b101, {0, 0}},
                                           {0b110, {2, 3}},
                                           {0b110, {1, 2}},
                                           {0b110, {0, 1}},
                                           {0b110, {0, 0}}}};

const std::array<std::array<int, 3>, 7> kPhase3 = {{{5, 3, 4},
                                                    {4, 3, 3},
                                                    {3, 2, 2},
                                                    {3, 1, 1},
                                                    {2, 0, 1},
                                                    {1, 0, 0},
                                                    {0, 0, 0}}};

constexpr int kUsers = 3;
constexpr int kSessionSize = 10;
constexpr int kPacketLen = 2;
constexpr std::uint64_t kRecipeSeed = 42;

PacketVector tagged_packet(int user, int index) {
    return PacketVector{fe(user), fe(index)};
}

std::string join_ints(const std::vector<long>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << v[i];
    }
    return out.str();
}

// True when `rows` is independent and spans exactly the unit vectors at the
// given 1-based indices.
bool spans_units(const Gf& gf, const std::vector<CoeffVector>& rows,
                 const std::vector<int>& indices, int dim) {
    if (rows.size() != indices.size()) return false;
    if (rank(gf, rows) != int(rows.size())) return false;
    std::vector<CoeffVector> augmented = rows;
    for (int idx : indices) {
        CoeffVector e(std::size_t(dim), 0);
        e[std::size_t(idx - 1)] = 1;
        augmented.push_back(std::move(e));
    }
    return rank(gf, augmented) == int(rows.size());
}

}  // namespace

GoldenReport replay_golden(const std::string& name) {
    if (name != "walkthrough")
        throw ConfigError("unknown golden trace '" + name + "'");

    GoldenReport report;
    auto check = [&report](long slot, const std::string& what, bool ok,
                           const std::string& detail = "") {
        report.checks.push_back(GoldenCheck{slot, what, ok, ok ? "" : detail});
        if (!ok && report.first_divergence < 0) report.first_divergence = slot;
    };

    const Gf& gf = Gf::get(8);
    std::vector<std::vector<PacketVector>> sessions(kUsers);
    for (int u = 1; u <= kUsers; ++u)
        for (int j = 1; j <= kSessionSize; ++j)
            sessions[std::size_t(u - 1)].push_back(tagged_packet(u, j));
    const std::vector<int> sizes(kUsers, kSessionSize);

    EncoderOptions opts;
    opts.uncoded_phase1 = true;
    opts.check_invariants = true;
    Encoder enc(QueueNetwork::initialize(gf, sessions), kRecipeSeed,
                Algorithm::code1, opts);
    std::vector<std::unique_ptr<Receiver>> rx;
    for (int u = 1; u <= kUsers; ++u)
        rx.push_back(std::make_unique<Receiver>(u, gf, sizes, kPacketLen,
                                                kRecipeSeed, Algorithm::code1,
                                                opts));

    PatternStream stream(ChannelModel::scripted(kUsers, kTrace), 0);

    try {
        long slot = 0;
        while (!enc.done()) {
            if (slot >= long(kTrace.size())) {
                check(slot + 1, "trace length", false,
                      "transmitter still busy after the scripted slots");
                break;
            }
            const PacketVector sent = enc.pending().payload;
            ++slot;

            if (slot <= 30) {
                const int user = 1 + int((slot - 1) / kSessionSize);
                const int index = 1 + int((slot - 1) % kSessionSize);
                check(slot, "phase-1 payload",
                      sent == tagged_packet(user, index),
                      "expected session " + std::to_string(user) + " packet " +
                          std::to_string(index));
            }

            const ErasurePattern pat = stream.next();
            const SlotRecord rec = enc.step(pat.erased);
            for (int u = 1; u <= kUsers; ++u)
                rx[std::size_t(u - 1)]->replay_slot(
                    pat, has_user(pat.receivers(kUsers), u) ? &sent : nullptr);

            if (slot <= 30) {
                const mask_t want = user_bit(1 + int((slot - 1) / kSessionSize));
                check(slot, "phase-1 source queue", rec.source == want,
                      "processed queue " + std::to_string(rec.source));
                check(slot, "phase-1 no retransmission", !rec.retransmission,
                      "scripted phase-1 slots all reach someone");
            } else if (slot <= 40) {
                const PairStep& step = kPhase2[std::size_t(slot - 31)];
                check(slot, "pair-queue source", rec.source == step.queue,
                      "processed queue " + std::to_string(rec.source));
                const auto us = users_of(step.queue);
                const std::vector<long> got = {enc.net().k(step.queue, us[0]),
                                               enc.net().k(step.queue, us[1])};
                check(slot, "pair-queue indices",
                      got[0] == step.k_after[0] && got[1] == step.k_after[1],
                      "indices (" + join_ints(got) + ")");
            } else {
                const auto& want = kPhase3[std::size_t(slot - 41)];
                check(slot, "full-queue source", rec.source == 0b111,
                      "processed queue " + std::to_string(rec.source));
                const std::vector<long> got = {enc.net().k(0b111, 1),
                                               enc.net().k(0b111, 2),
                                               enc.net().k(0b111, 3)};
                check(slot, "full-queue indices",
                      got[0] == want[0] && got[1] == want[1] && got[2] == want[2],
                      "indices (" + join_ints(got) + ")");
            }

            if (slot == 30) {
                for (const TokenSet& ts : kPhase1Tokens) {
                    check(slot, "phase-1 index count",
                          enc.net().k(ts.queue, ts.user) == int(ts.indices.size()),
                          "queue " + std::to_string(ts.queue) + " user " +
                              std::to_string(ts.user));
                    check(slot, "phase-1 basis span",
                          spans_units(gf, enc.net().basis(ts.queue, ts.user),
                                      ts.indices, kSessionSize),
                          "queue " + std::to_string(ts.queue) + " user " +
                              std::to_string(ts.user));
                }
                for (mask_t q : {mask_t{0b011}, mask_t{0b101}, mask_t{0b110},
                                 mask_t{0b111}}) {
                    std::multiset<PacketVector> got, want;
                    for (const StoredPacket& pkt : enc.net().packets(q))
                        got.insert(pkt.payload);
                    for (const TokenSet& ts : kPhase1Tokens)
                        if (ts.queue == q)
                            for (int idx : ts.indices)
                                want.insert(tagged_packet(ts.user, idx));
                    check(slot, "phase-1 queue contents", got == want,
                          "queue " + std::to_string(q));
                }
                for (int u = 1; u <= kUsers; ++u) {
                    const auto& expect = kPhase1Delivered[std::size_t(u - 1)];
                    std::multiset<PacketVector> got, want;
                    for (const StoredPacket& pkt : enc.net().delivered(u))
                        got.insert(pkt.payload);
                    for (int idx : expect) want.insert(tagged_packet(u, idx));
                    check(slot, "phase-1 delivered set",
                          enc.net().k_delivered(u) == int(expect.size()) &&
                              got == want,
                          "user " + std::to_string(u));
                    check(slot, "phase-1 delivered span",
                          spans_units(gf, enc.net().basis_delivered(u), expect,
                                      kSessionSize),
                          "user " + std::to_string(u));
                }
            }
        }
        report.slots = enc.slots_used();
        check(report.slots, "run length", report.slots == 47,
              "finished after " + std::to_string(report.slots) + " slots");
        check(report.slots, "transmitter completed", enc.stats().completed, "");
        for (int u = 1; u <= kUsers; ++u) {
            bool ok = false;
            std::string detail;
            try {
                ok = rx[std::size_t(u - 1)]->decode() == sessions[std::size_t(u - 1)];
                if (!ok) detail = "decoded packets differ from the session";
            } catch (const std::exception& e) {
                detail = e.what();
            }
            check(report.slots, "receiver " + std::to_string(u) + " decode", ok,
                  detail);
        }
    } catch (const std::exception& e) {
        check(enc.slots_used() + 1, "replay", false, e.what());
        report.slots = enc.slots_used();
    }

    report.pass = report.first_divergence < 0;
    return report;
}

}  // namespace bpec
