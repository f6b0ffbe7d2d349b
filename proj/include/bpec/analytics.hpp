#pragma once

#include <array>
#include <string>
#include <vector>

#include "bpec/channel.hpp"
#include "bpec/encoder_code2.hpp"
#include "bpec/subset.hpp"

namespace bpec {

// Closed-form counterparts of the simulated quantities: reception
// probabilities, per-queue slot costs, asymptotic workloads and the rate
// regions they carve out. Everything here is pure double arithmetic;
// alternating inclusion-exclusion sums go through pairwise summation and are
// compared at 1e-9 tolerance.

inline constexpr int kSubsetUserCap = 16;       // 2^N subset enumeration
inline constexpr int kPermutationUserCap = 8;   // N! permutation enumeration

using RateVector = std::vector<double>;

// Probability that every user in `erased` misses a slot while every user in
// `received` gets it (no constraint on the rest). Masks must be disjoint.
double erase_receive_prob(const ChannelModel& model, mask_t erased,
                          mask_t received);

// Probability that a slot is received by exactly the users in `received`.
double exact_reception_prob(const ChannelModel& model, mask_t received);

// Asymptotic slots this queue demands per unit of `user`'s rate: the region
// constraint is sum over queues of max_i slot_cost(S,i) * R_i <= L. Computed
// as the closed-form alternating sum; slot_cost_recursive solves the
// token-flow recursion instead and must agree (used as an internal oracle).
double slot_cost(const ChannelModel& model, mask_t queue, int user);
double slot_cost_recursive(const ChannelModel& model, mask_t queue, int user);

struct QueueLoad {
    mask_t queue = 0;
    int slowest_user = 0;  // user attaining the max below
    double slots = 0.0;    // max_{i in queue} slot_cost(queue,i) * R_i
};

// Fluid-limit forecast for the level-ordered scheme: per-queue slot loads,
// their total, and the token counts each queue holds when its processing
// starts (per unit blocklength).
struct Code1Forecast {
    int n = 0;
    double total = 0.0;
    std::vector<QueueLoad> queues;  // level order, ascending mask within level
    std::vector<double> k_values;   // [queue * n + user - 1]

    double k_entry(mask_t queue, int user) const {
        return k_values[std::size_t(queue) * n + user - 1];
    }
};

Code1Forecast forecast_code1(const ChannelModel& model, const RateVector& rates);

enum class RegionFlavor {
    no_feedback,     // timesharing bound, no feedback used
    outer,           // intersection over all user orderings
    code1_pub,       // queue-load total <= L
    code1_pri,       // queue-load total <= feedback-adjusted budget
    ordered_budget,  // waterfilling budget under the witnessed order
    ordered,         // a single priority order wins every queue
    fair,            // eps_i * R_i non-increasing when sorted by eps_i
};

// Margin semantics: budget flavors report bits of slack (L - load), the
// ordered flavor reports the smallest winner-vs-runner-up gap across queues,
// and fair reports the smallest step of the eps*R chain. member <=> margin
// >= 0 in all cases.
struct RegionVerdict {
    bool member = false;
    std::string binding_constraint;
    double margin = 0.0;
    std::vector<int> order;  // witness/binding user order where applicable
};

RegionVerdict region_membership(const ChannelModel& model,
                                const RateVector& rates, double l_bits,
                                RegionFlavor flavor, int permutation_cap = 8);

// Slot budget left for queue work once per-slot feedback packets are paid
// for: (L-1) / (1 + n^2 / ((L-2)(1-eps_max))). Throws PacketTooSmall when
// l_bits < n+2 and DegenerateChannel when some user erases almost surely.
double feedback_adjusted_budget(const ChannelModel& model, double l_bits);

// For rates admitting a consistent priority order, the per-queue max-sum
// collapses to a waterfilling sum along that order. Returns whether both
// sides, computed independently, agree to 1e-9. Throws ConfigError when the
// precondition (ordered membership) fails.
bool ordered_identity_holds(const ChannelModel& model, const RateVector& rates);

struct PairLoad {
    mask_t queue = 0;
    std::array<int, 2> users{};       // ascending
    std::array<double, 2> rate_gap{}; // clipped cost-gap r, aligned with users
    std::array<double, 2> k_entry_t2{};
    int survivor = 0;                 // user id, 0 when the pair ties
};

// Fluid-limit forecast for the three-user pairing scheme: pair-queue end
// states, survival numbers and the branch they select, the full-queue token
// counts at the phase boundaries, and the total slot count.
struct Code2Forecast {
    std::array<PairLoad, 3> pairs{};            // masks 011, 101, 110
    std::array<int, 3> survival{};
    BranchKind branch = BranchKind::revert_phase3;
    std::array<std::array<int, 3>, 3> dominance{};  // +1 row beats col
    bool order_transitive = true;
    std::array<double, 3> k_full_t2{};
    std::array<double, 3> k_full_t3{};
    double level1 = 0.0;  // singleton queues
    double level2 = 0.0;  // pair queues
    double level3 = 0.0;  // full queue
    double total = 0.0;
};

Code2Forecast forecast_code2(const ChannelModel& model, const RateVector& rates);

// Full-queue token counts at phase-3 entry under a forced branch; the
// forecast above selects the branch from the survival numbers. Exposed so
// the branch arms stay individually testable.
std::array<double, 3> code2_k_full_at_phase3(const ChannelModel& model,
                                             const RateVector& rates,
                                             BranchKind branch);

}  // namespace bpec
