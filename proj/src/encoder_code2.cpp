#include "bpec/encoder_code2.hpp"

#include <algorithm>
#include <stdexcept>

#include "bpec/encoder_code1.hpp"

namespace bpec {

namespace {

std::array<int, 3> survival_counts(const QueueNetwork& net) {
    std::array<int, 3> su{};
    for (mask_t S : {mask_t(0b011), mask_t(0b101), mask_t(0b110)}) {
        const auto members = users_of(S);
        const bool a = net.k(S, members[0]) > 0;
        const bool b = net.k(S, members[1]) > 0;
        if (a && b)
            throw InvalidSurvival("pair queue stopped with two surviving members");
        if (a) ++su[members[0] - 1];
        if (b) ++su[members[1] - 1];
    }
    return su;
}

}  // namespace

std::vector<Actfb2Context> scan_paired_targets(const QueueNetwork& net) {
    if (net.n() != 3) throw UnsupportedN("paired processing is defined for 3 users");
    const auto su = survival_counts(net);
    std::vector<Actfb2Context> targets;
    for (mask_t S : {mask_t(0b011), mask_t(0b101), mask_t(0b110)}) {
        const auto members = users_of(S);
        int j = 0, other = 0;
        if (net.k(S, members[0]) > 0) {
            j = members[0];
            other = members[1];
        } else if (net.k(S, members[1]) > 0) {
            j = members[1];
            other = members[0];
        } else {
            continue;
        }
        if (su[other - 1] == 0) targets.push_back({S, other, j});
    }
    return targets;
}

Classification classify_at_t2(const QueueNetwork& net) {
    if (net.n() != 3) throw UnsupportedN("paired processing is defined for 3 users");
    Classification cls;
    cls.survivors = survival_counts(net);

    std::array<int, 3> sorted = cls.survivors;
    std::sort(sorted.begin(), sorted.end());
    if (sorted == std::array<int, 3>{0, 0, 0}) {
        cls.kind = BranchKind::revert_phase3;
    } else if (sorted == std::array<int, 3>{1, 1, 1}) {
        cls.kind = BranchKind::finish_level2_plain;
    } else if (sorted == std::array<int, 3>{0, 1, 2}) {
        cls.kind = BranchKind::paired_processing;
        cls.category = 'a';
    } else if (sorted == std::array<int, 3>{0, 1, 1}) {
        cls.kind = BranchKind::paired_processing;
        cls.category = 'b';
    } else if (sorted == std::array<int, 3>{0, 0, 2}) {
        cls.kind = BranchKind::paired_processing;
        cls.category = 'c';
    } else if (sorted == std::array<int, 3>{0, 0, 1}) {
        cls.kind = BranchKind::paired_processing;
        cls.category = 'd';
    } else {
        throw InvalidSurvival("unreachable survival profile");
    }
    if (cls.kind == BranchKind::paired_processing) {
        cls.targets = scan_paired_targets(net);
        if (cls.targets.empty())
            throw InvalidSurvival("paired branch selected but no eligible queue");
    }
    return cls;
}

ActionOutcome QueueNetwork::apply_actfb2(const Actfb2Context& ctx, const Combination& sent,
                                         mask_t G, int slot) {
    if (n_ != 3) throw UnsupportedN("paired processing is defined for 3 users");
    ActionOutcome out;
    const mask_t all = full_mask(n_);
    const mask_t third = all & ~ctx.pair;
    const mask_t jbit = user_bit(ctx.j);
    const mask_t ibit = user_bit(ctx.istar);
    if (k_[ctx.pair][ctx.istar - 1] != 0)
        throw std::logic_error("paired transmitter still holds tokens in the pair queue");

    const bool j_rx = (G & jbit) != 0;
    const bool i_rx = (G & ibit) != 0;
    const bool third_rx = (G & third) != 0;
    const bool j_has = k_[ctx.pair][ctx.j - 1] > 0;
    const bool i_has = k_[all][ctx.istar - 1] > 0;

    if (j_rx && j_has) {
        deliver_to(ctx.j, ctx.pair, sent, slot);
        out.delivered |= jbit;
    }
    if (i_rx && i_has) {
        deliver_to(ctx.istar, all, sent, slot);
        out.delivered |= ibit;
    }
    if (!j_rx && third_rx && j_has) {
        move_index(ctx.j, ctx.pair, all, sent);
        append_packet(all, sent, ctx.pair, third, slot);
        out.moved |= jbit;
        out.appended = true;
        out.dest = all;
    }
    out.advanced = (out.delivered | out.moved) != 0;
    return out;
}

void Encoder::on_level2_boundary() {
    auto cls = classify_at_t2(net_);
    classified_ = true;
    stats_.t2_slot = slot_;
    switch (cls.kind) {
        case BranchKind::revert_phase3:
            return;
        case BranchKind::finish_level2_plain:
            finish_level2_plain_ = true;
            for (std::size_t i = 0; i < order_.size(); ++i)
                if (popcount(order_[i]) == 2) {
                    order_idx_ = i;
                    break;
                }
            return;
        case BranchKind::paired_processing:
            stage_ = Stage::paired;
            paired_targets_ = std::move(cls.targets);
            paired_idx_ = 0;
            paired_entered_ = false;
            scan_rounds_ = 1;
            return;
    }
}

bool Encoder::refresh_paired_target() {
    for (;;) {
        while (paired_idx_ < paired_targets_.size()) {
            const Actfb2Context& t = paired_targets_[paired_idx_];
            if (net_.k(t.pair, t.j) > 0) {
                if (!paired_entered_) {
                    ctx_ = t;
                    process_queue_ = t.pair;
                    sources_ = {t.pair, full_mask(net_.n())};
                    enter_queue(t.pair, 2);
                    paired_entered_ = true;
                }
                return true;
            }
            ++paired_idx_;
            paired_entered_ = false;
        }
        if (++scan_rounds_ > 6)
            throw std::logic_error("paired scan failed to settle");
        paired_targets_ = scan_paired_targets(net_);
        paired_idx_ = 0;
        paired_entered_ = false;
        if (paired_targets_.empty()) {
            for (mask_t S : {mask_t(0b011), mask_t(0b101), mask_t(0b110)})
                if (net_.active_users(S) != 0)
                    throw std::logic_error("tokens stranded in a pair queue");
            return false;
        }
    }
}

}  // namespace bpec
