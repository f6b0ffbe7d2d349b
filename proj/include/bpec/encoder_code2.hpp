#pragma once

#include <array>
#include <vector>

#include "bpec/queue_net.hpp"

namespace bpec {

enum class BranchKind { revert_phase3, finish_level2_plain, paired_processing };

struct Classification {
    std::array<int, 3> survivors{};  // per user: level-2 queues still holding its tokens
    BranchKind kind = BranchKind::revert_phase3;
    char category = 0;  // 'a'..'d' when paired processing applies
    std::vector<Actfb2Context> targets;
};

// Validates the level-2 stopping state (at most one member of each pair
// queue may still hold tokens) and picks the continuation branch.
Classification classify_at_t2(const QueueNetwork& net);

// Pair queues eligible for paired processing, in ascending mask order: the
// survivor j still holds tokens there while the other member has no
// remaining level-2 survivals at all.
std::vector<Actfb2Context> scan_paired_targets(const QueueNetwork& net);

}  // namespace bpec
