#include "bpec/encoder_code1.hpp"

#include <stdexcept>
#include <string>

namespace bpec {

RecipeResult draw_recipe(const Gf& gf, std::size_t len,
                         const std::vector<RecipeTarget>& targets, SplitMix64& rng,
                         long cap) {
    if (targets.empty()) throw std::invalid_argument("no users to protect");
    for (const auto& t : targets) {
        if (t.packet_b.size() != len)
            throw std::invalid_argument("target b-views do not cover the sources");
        if (t.bhat_pos >= t.union_basis.size())
            throw std::invalid_argument("replacement position outside the basis");
    }

    RecipeResult res;
    res.recipe.resize(len);
    std::vector<CoeffVector> candidate;
    for (res.draws = 1;; ++res.draws) {
        if (res.draws > cap)
            throw std::runtime_error(
                "recipe retries exceeded " + std::to_string(cap) + " for " +
                std::to_string(targets.size()) + " users over " +
                std::to_string(len) + " packets");
        for (auto& a : res.recipe) a = rng.field_element(gf.m());

        bool ok = true;
        for (const auto& t : targets) {
            CoeffVector b_s(t.union_basis.size(), 0);
            for (std::size_t p = 0; p < len; ++p)
                axpy(gf, res.recipe[p], t.packet_b[p], b_s);
            candidate = t.union_basis;
            candidate[t.bhat_pos] = std::move(b_s);
            if (rank(gf, candidate) != int(candidate.size())) {
                ok = false;
                break;
            }
        }
        if (ok) return res;
    }
}

Encoder::Encoder(QueueNetwork net, std::uint64_t recipe_seed, Algorithm alg,
                 EncoderOptions opts)
    : net_(std::move(net)),
      alg_(alg),
      opts_(opts),
      rng_{recipe_seed},
      order_(masks_by_level(net_.n())) {
    if (alg_ == Algorithm::code2 && net_.n() != 3)
        throw UnsupportedN("paired-queue processing is defined for 3 users");
    stats_.queues.reserve(order_.size());
    ensure_position();
}

bool Encoder::level_entry_ok(mask_t S) const {
    if (alg_ == Algorithm::code2 && popcount(S) == 2 && !classified_ &&
        !finish_level2_plain_)
        return net_.active_users(S) == S;  // run only while every member holds tokens
    return net_.active_users(S) != 0;
}

void Encoder::enter_queue(mask_t S, int stage) {
    QueueStats qs;
    qs.queue = S;
    qs.stage = stage;
    qs.user_slots.assign(net_.n(), 0);
    qs.k_entry.assign(net_.n(), 0);
    for (int u = 1; u <= net_.n(); ++u) qs.k_entry[u - 1] = net_.k(S, u);
    stats_.queues.push_back(std::move(qs));
    current_stats_ = int(stats_.queues.size()) - 1;
    have_pending_ = false;
}

void Encoder::ensure_position() {
    if (done_) return;
    for (;;) {
        if (stage_ == Stage::paired) {
            if (refresh_paired_target()) return;
            stage_ = Stage::levels;
            continue;
        }
        if (order_idx_ >= order_.size()) {
            finalize_run();
            return;
        }
        const mask_t S = order_[order_idx_];
        if (alg_ == Algorithm::code2 && !classified_ && popcount(S) == net_.n()) {
            on_level2_boundary();
            continue;
        }
        if (!level_entry_ok(S)) {
            ++order_idx_;
            continue;
        }
        if (process_queue_ != S || current_stats_ < 0 ||
            stats_.queues[current_stats_].queue != S) {
            process_queue_ = S;
            sources_ = {S};
            enter_queue(S, 1);
        }
        return;
    }
}

void Encoder::finalize_run() {
    done_ = true;
    stats_.total_slots = slot_;
    stats_.completed = true;
    for (int u = 1; u <= net_.n(); ++u)
        if (net_.k_delivered(u) != net_.session_size(u))
            throw std::logic_error("run finished with undelivered tokens");
}

std::vector<std::pair<int, mask_t>> Encoder::protect_set() const {
    std::vector<std::pair<int, mask_t>> protect;
    if (stage_ == Stage::levels) {
        for (int u : users_of(net_.active_users(process_queue_)))
            protect.emplace_back(u, process_queue_);
    } else {
        protect.emplace_back(ctx_.j, ctx_.pair);
        const mask_t all = full_mask(net_.n());
        if (net_.k(all, ctx_.istar) > 0) protect.emplace_back(ctx_.istar, all);
    }
    return protect;
}

void Encoder::build_pending() {
    const bool uncoded = opts_.uncoded_phase1 && stage_ == Stage::levels &&
                         popcount(process_queue_) == 1;
    if (uncoded) {
        const int u = users_of(process_queue_)[0];
        const int idx = net_.session_size(u) - net_.k(process_queue_, u);
        recipe_.assign(net_.queue_size(process_queue_), 0);
        recipe_[idx] = 1;
        ++stats_.recipes_accepted;
    } else if (net_.mode() == NetMode::index_only) {
        recipe_.clear();  // coefficients do not influence index dynamics
    } else {
        std::size_t len = 0;
        for (mask_t src : sources_) len += net_.packets(src).size();

        std::vector<RecipeTarget> targets;
        for (const auto& [u, bq] : protect_set()) {
            RecipeTarget t;
            t.packet_b.reserve(len);
            for (mask_t src : sources_)
                for (const StoredPacket& pkt : net_.packets(src))
                    t.packet_b.push_back(pkt.views[u - 1].b);

            const auto& del = net_.basis_delivered(u);
            t.union_basis.insert(t.union_basis.end(), del.begin(), del.end());
            for (mask_t I = 1; I <= full_mask(net_.n()); ++I) {
                if (net_.k(I, u) == 0) continue;
                if (I == bq) t.bhat_pos = t.union_basis.size();
                const auto& part = net_.basis(I, u);
                t.union_basis.insert(t.union_basis.end(), part.begin(), part.end());
            }
            targets.push_back(std::move(t));
        }
        auto res = draw_recipe(net_.field(), len, targets, rng_);
        recipe_ = std::move(res.recipe);
        stats_.recipe_draws += res.draws;
        ++stats_.recipes_accepted;
    }

    if (net_.mode() != NetMode::index_only)
        pending_ = net_.form_combination(sources_, recipe_);
    else
        pending_ = Combination{};
    have_pending_ = true;
    pending_txs_ = 0;
}

const Combination& Encoder::pending() {
    if (done_) throw std::logic_error("run already finished");
    if (!have_pending_) build_pending();
    return pending_;
}

SlotRecord Encoder::step(mask_t erased, const PacketVector* observed) {
    if (done_) throw std::logic_error("run already finished");
    if (!have_pending_) build_pending();
    ++slot_;

    const mask_t G = full_mask(net_.n()) & ~erased;
    if (observed && net_.mode() == NetMode::shadow && !observed->empty())
        pending_.payload = *observed;

    QueueStats& qs = stats_.queues[current_stats_];
    ++qs.slots;
    for (int u : users_of(process_queue_))
        if (net_.k(process_queue_, u) > 0) ++qs.user_slots[u - 1];

    SlotRecord rec;
    rec.slot = slot_;
    rec.stage = stage_ == Stage::paired ? 2 : 1;
    rec.source = process_queue_;
    rec.source2 = stage_ == Stage::paired ? full_mask(net_.n()) : 0;
    rec.erased = erased;
    rec.received = G;
    rec.retransmission = pending_txs_ > 0;
    ++pending_txs_;

    rec.outcome = stage_ == Stage::paired
                      ? net_.apply_actfb2(ctx_, pending_, G, int(slot_))
                      : net_.apply_actfb1(process_queue_, pending_, G, int(slot_));
    if (rec.outcome.appended && rec.outcome.retransmit())
        throw std::logic_error("packet stored while the slot counted as a retransmission");
    if (rec.outcome.advanced) have_pending_ = false;

    if (opts_.check_invariants) net_.check_invariants();
    if (opts_.keep_transcript) {
        rec.recipe = recipe_;
        stats_.transcript.push_back(rec);
    }
    ensure_position();
    return rec;
}

RunStats Encoder::run_to_completion(PatternStream& stream) {
    while (!done_) {
        if (opts_.slot_cap >= 0 && slot_ >= opts_.slot_cap) {
            stats_.deadline_exceeded = true;
            break;
        }
        step(stream.next().erased);
    }
    stats_.total_slots = slot_;
    return stats_;
}

}  // namespace bpec
