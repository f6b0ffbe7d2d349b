#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bpec/channel.hpp"
#include "bpec/queue_net.hpp"
#include "bpec/rng.hpp"

namespace bpec {

enum class Algorithm { code1, code2 };

struct EncoderOptions {
    // Phase-1 policy: send each user's packets uncoded in queue order instead
    // of drawing random coefficients. Rate-equivalent; needed for trace replay.
    bool uncoded_phase1 = false;
    bool keep_transcript = false;
    bool check_invariants = false;
    long slot_cap = -1;  // <0 means unbounded
};

struct SlotRecord {
    long slot = 0;
    int stage = 1;      // 1: queue processing by level; 2: paired processing
    mask_t source = 0;  // queue under processing
    mask_t source2 = 0; // second mixing queue during paired processing
    mask_t erased = 0;
    mask_t received = 0;
    bool retransmission = false;
    ActionOutcome outcome;
    Recipe recipe;
};

struct QueueStats {
    mask_t queue = 0;
    int stage = 1;
    long slots = 0;                // processing slots spent on this queue
    std::vector<long> user_slots;  // per user: slots while it still held tokens here
    std::vector<int> k_entry;      // per user: index value when processing began
};

struct RunStats {
    long total_slots = 0;
    bool completed = false;
    bool deadline_exceeded = false;
    long t2_slot = -1;  // paired-classification boundary (code2 only)
    long recipe_draws = 0;
    long recipes_accepted = 0;
    std::vector<QueueStats> queues;
    std::vector<SlotRecord> transcript;
};

// Acceptance data for one protected user: the b-views of every candidate
// source packet, the user's full live basis, and where its replacement
// candidate sits in that basis.
struct RecipeTarget {
    std::vector<CoeffVector> packet_b;
    std::vector<CoeffVector> union_basis;
    std::size_t bhat_pos = 0;
};

struct RecipeResult {
    Recipe recipe;
    long draws = 0;
};

// Draws coefficient lists uniformly over GF(q) until every target accepts:
// replacing union_basis[bhat_pos] by the combined b-view must keep full rank.
// The draw sequence is fully determined by `rng`, so any party holding the
// same seed and history reproduces the same recipe.
RecipeResult draw_recipe(const Gf& gf, std::size_t len,
                         const std::vector<RecipeTarget>& targets, SplitMix64& rng,
                         long cap = 1000000);

// Transmitter state machine. One instance per trial; drive it either with
// run_to_completion or slot by slot (pending() to inspect the outgoing
// combination, then step() with the slot's erasure pattern). Receivers replay
// by running their own instance over a shadow network and feeding the same
// patterns plus the payloads they actually heard.
class Encoder {
  public:
    Encoder(QueueNetwork net, std::uint64_t recipe_seed, Algorithm alg,
            EncoderOptions opts = {});

    bool done() const { return done_; }
    long slots_used() const { return slot_; }
    Algorithm algorithm() const { return alg_; }
    const QueueNetwork& net() const { return net_; }
    const RunStats& stats() const { return stats_; }
    mask_t current_queue() const { return process_queue_; }
    int current_stage() const { return stage_ == Stage::paired ? 2 : 1; }

    const Combination& pending();
    SlotRecord step(mask_t erased, const PacketVector* observed = nullptr);
    RunStats run_to_completion(PatternStream& stream);

  private:
    enum class Stage { levels, paired };

    void ensure_position();
    void enter_queue(mask_t S, int stage);
    bool level_entry_ok(mask_t S) const;
    void build_pending();
    std::vector<std::pair<int, mask_t>> protect_set() const;
    void finalize_run();

    // Paired-stage control, defined next to the rest of that logic.
    void on_level2_boundary();
    bool refresh_paired_target();

    QueueNetwork net_;
    Algorithm alg_;
    EncoderOptions opts_;
    SplitMix64 rng_;
    std::vector<mask_t> order_;
    std::size_t order_idx_ = 0;

    Stage stage_ = Stage::levels;
    bool classified_ = false;
    bool finish_level2_plain_ = false;
    std::vector<Actfb2Context> paired_targets_;
    std::size_t paired_idx_ = 0;
    bool paired_entered_ = false;
    int scan_rounds_ = 0;
    Actfb2Context ctx_;

    bool have_pending_ = false;
    long pending_txs_ = 0;
    Combination pending_;
    Recipe recipe_;
    std::vector<mask_t> sources_;
    mask_t process_queue_ = 0;
    int current_stats_ = -1;

    long slot_ = 0;
    bool done_ = false;
    RunStats stats_;
};

}  // namespace bpec
