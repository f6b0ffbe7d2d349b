#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bpec/errors.hpp"
#include "bpec/rng.hpp"
#include "bpec/subset.hpp"

namespace bpec {

// Per-slot joint erasure outcome. Bit i-1 set means user i erased the slot.
struct ErasurePattern {
    mask_t erased = 0;

    mask_t receivers(int n) const { return full_mask(n) & ~erased; }
    bool operator==(const ErasurePattern&) const = default;
};

enum class ChannelKind { symmetric, independent, joint, scripted };

// Memoryless broadcast erasure channel over n users. Immutable once built;
// sampling state lives in PatternStream so trials can run concurrently.
class ChannelModel {
  public:
    // eps_tilde[k-1] = probability that a fixed set of k users all erase.
    // Builds the exchangeable joint distribution; rejects infeasible vectors.
    static ChannelModel symmetric(int n, const std::vector<double>& eps_tilde);

    // Per-user marginals, erasures independent across users.
    static ChannelModel independent(int n, const std::vector<double>& eps);

    // Same marginal for every user, independent across users.
    static ChannelModel iid(int n, double eps);

    // Full joint table indexed by erased-mask (size 2^n).
    static ChannelModel joint(int n, std::vector<double> pattern_probs);

    // Fixed trace; each slot string has one char per user, 'E' = erased,
    // 'R' or 'X' = received.
    static ChannelModel scripted(int n, const std::vector<std::string>& slots);
    static ChannelModel scripted(int n, std::vector<mask_t> erased_masks);

    int n() const { return n_; }
    ChannelKind kind() const { return kind_; }
    bool has_stats() const { return kind_ != ChannelKind::scripted; }

    // eps(I) = Pr(every user in I erases); eps(0) = 1. For scripted models
    // this is the empirical frequency over the trace.
    double epsilon(mask_t subset) const;

    const std::vector<double>& pattern_probs() const { return probs_; }
    std::size_t trace_length() const { return trace_.size(); }
    mask_t trace_at(std::size_t pos) const { return trace_[pos]; }

  private:
    ChannelModel(int n, ChannelKind kind, std::vector<double> probs,
                 std::vector<mask_t> trace);

    int n_;
    ChannelKind kind_;
    std::vector<double> probs_;  // indexed by erased-mask
    std::vector<double> eps_;    // superset sums of probs_
    std::vector<mask_t> trace_;
};

ErasurePattern sample_pattern(const ChannelModel& model, SplitMix64& rng);

// Per-trial draw stream: holds its own copy of the model plus the RNG for
// stochastic sampling and the cursor for scripted traces.
class PatternStream {
  public:
    PatternStream(ChannelModel model, std::uint64_t seed)
        : model_(std::move(model)), rng_{seed} {}

    ErasurePattern next();
    std::size_t position() const { return pos_; }
    const ChannelModel& model() const { return model_; }

  private:
    ChannelModel model_;
    SplitMix64 rng_;
    std::size_t pos_ = 0;
};

}  // namespace bpec
