#include "bpec/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "bpec/errors.hpp"

namespace bpec {
namespace {

constexpr double kTol = 1e-9;
constexpr double kDenomFloor = 1e-12;

double pairwise_sum(const double* data, std::size_t count) {
    if (count <= 8) {
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) acc += data[i];
        return acc;
    }
    std::size_t half = count / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, count - half);
}

double pairwise_sum(const std::vector<double>& terms) {
    return pairwise_sum(terms.data(), terms.size());
}

double safe_inv(const ChannelModel& model, mask_t subset) {
    double denom = 1.0 - model.epsilon(subset);
    if (denom < kDenomFloor)
        throw DegenerateChannel("erasure probability of a user set is 1");
    return 1.0 / denom;
}

void check_rates(const ChannelModel& model, const RateVector& rates,
                 bool strictly_positive) {
    if (static_cast<int>(rates.size()) != model.n())
        throw ConfigError("rate vector size does not match user count");
    for (double r : rates) {
        if (!std::isfinite(r) || r < 0.0)
            throw ConfigError("rates must be finite and non-negative");
        if (strictly_positive && r == 0.0)
            throw ConfigError("rates must be strictly positive");
    }
}

void check_queue_user(const ChannelModel& model, mask_t queue, int user) {
    model.epsilon(queue);
    if (user < 1 || user > model.n() || !has_user(queue, user))
        throw ConfigError("user does not belong to the queue");
}

std::string mask_string(mask_t m) {
    std::ostringstream out;
    out << '{';
    bool first = true;
    for (int u : users_of(m)) {
        if (!first) out << ',';
        out << u;
        first = false;
    }
    out << '}';
    return out.str();
}

std::string order_string(const std::vector<int>& order) {
    std::ostringstream out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i) out << '>';
        out << order[i];
    }
    return out.str();
}

double waterfill_load(const ChannelModel& model, const RateVector& rates,
                      const std::vector<int>& order) {
    std::vector<double> terms;
    terms.reserve(order.size());
    mask_t prefix = 0;
    for (int u : order) {
        prefix |= user_bit(u);
        terms.push_back(rates[u - 1] * safe_inv(model, prefix));
    }
    return pairwise_sum(terms);
}

}  // namespace

double erase_receive_prob(const ChannelModel& model, mask_t erased,
                          mask_t received) {
    if (erased & received)
        throw OverlapError("erased and received user sets intersect");
    model.epsilon(erased | received);
    std::vector<double> terms;
    terms.reserve(std::size_t(1) << popcount(received));
    for_each_subset(received, [&](mask_t h) {
        double eps = model.epsilon(erased | h);
        terms.push_back(popcount(h) % 2 == 0 ? eps : -eps);
    });
    return std::clamp(pairwise_sum(terms), 0.0, 1.0);
}

double exact_reception_prob(const ChannelModel& model, mask_t received) {
    model.epsilon(received);
    return erase_receive_prob(model, full_mask(model.n()) & ~received, received);
}

double slot_cost(const ChannelModel& model, mask_t queue, int user) {
    check_queue_user(model, queue, user);
    mask_t everyone = full_mask(model.n());
    mask_t others = queue & ~user_bit(user);
    int level = popcount(queue);
    std::vector<double> terms;
    terms.reserve(std::size_t(1) << popcount(others));
    for_each_subset(others, [&](mask_t h) {
        double inv = safe_inv(model, everyone & ~h);
        terms.push_back((level - popcount(h) - 1) % 2 == 0 ? inv : -inv);
    });
    return pairwise_sum(terms);
}

double slot_cost_recursive(const ChannelModel& model, mask_t queue, int user) {
    check_queue_user(model, queue, user);
    mask_t everyone = full_mask(model.n());
    mask_t me = user_bit(user);
    std::vector<double> memo(std::size_t(queue) + 1, 0.0);
    for (mask_t s = me; s <= queue; ++s) {
        if ((s & queue) != s || !(s & me)) continue;
        if (s == me) {
            memo[s] = safe_inv(model, everyone);
            continue;
        }
        mask_t absent = everyone & ~(s & ~me);
        std::vector<double> terms;
        for_each_proper_subset(s, [&](mask_t sub) {
            if (!(sub & me)) return;
            terms.push_back(memo[sub] *
                            erase_receive_prob(model, absent, s & ~sub));
        });
        memo[s] = safe_inv(model, absent) * pairwise_sum(terms);
    }
    return memo[queue];
}

Code1Forecast forecast_code1(const ChannelModel& model,
                             const RateVector& rates) {
    int n = model.n();
    if (n > kSubsetUserCap)
        throw TooManyUsers("subset enumeration supports at most 16 users");
    check_rates(model, rates, false);
    mask_t everyone = full_mask(n);

    Code1Forecast out;
    out.n = n;
    out.k_values.assign((std::size_t(1) << n) * std::size_t(n), 0.0);
    auto k_at = [&](mask_t s, int user) -> double& {
        return out.k_values[std::size_t(s) * n + user - 1];
    };

    std::vector<double> load_terms;
    for (mask_t queue : masks_by_level(n)) {
        QueueLoad load;
        load.queue = queue;
        load.slots = -1.0;
        for (int user : users_of(queue)) {
            mask_t me = user_bit(user);
            if (queue == me) {
                k_at(queue, user) = rates[user - 1];
            } else {
                mask_t absent = everyone & ~(queue & ~me);
                std::vector<double> terms;
                for_each_proper_subset(queue, [&](mask_t sub) {
                    if (!(sub & me)) return;
                    mask_t drained = everyone & ~(sub & ~me);
                    terms.push_back(
                        k_at(sub, user) * safe_inv(model, drained) *
                        erase_receive_prob(model, absent, queue & ~sub));
                });
                k_at(queue, user) = pairwise_sum(terms);
            }
            double cost = slot_cost(model, queue, user) * rates[user - 1];
            if (cost > load.slots) {
                load.slots = cost;
                load.slowest_user = user;
            }
        }
        out.queues.push_back(load);
        load_terms.push_back(load.slots);
    }
    out.total = pairwise_sum(load_terms);
    return out;
}

double feedback_adjusted_budget(const ChannelModel& model, double l_bits) {
    const int n = model.n();
    if (l_bits < n + 2)
        throw PacketTooSmall("feedback packets need at least n+2 bits");
    double eps_max = 0.0;
    for (int u = 1; u <= n; ++u)
        eps_max = std::max(eps_max, model.epsilon(user_bit(u)));
    double denom = 1.0 - eps_max;
    if (denom < kDenomFloor)
        throw DegenerateChannel("erasure probability of a user is 1");
    return (l_bits - 1.0) / (1.0 + double(n) * n / ((l_bits - 2.0) * denom));
}

RegionVerdict region_membership(const ChannelModel& model,
                                const RateVector& rates, double l_bits,
                                RegionFlavor flavor, int permutation_cap) {
    int n = model.n();
    check_rates(model, rates, false);

    bool needs_budget =
        flavor == RegionFlavor::no_feedback || flavor == RegionFlavor::outer ||
        flavor == RegionFlavor::code1_pub || flavor == RegionFlavor::code1_pri ||
        flavor == RegionFlavor::ordered_budget;
    if (needs_budget && !(l_bits > 0.0))
        throw ConfigError("packet budget must be positive");

    double scale = std::max(1.0, std::abs(l_bits));
    for (double r : rates) scale = std::max(scale, r);
    double tol = kTol * scale;

    RegionVerdict verdict;
    auto settle = [&](double margin) {
        verdict.member = margin >= -tol;
        verdict.margin = (verdict.member && margin < 0.0) ? 0.0 : margin;
    };

    switch (flavor) {
        case RegionFlavor::no_feedback: {
            std::vector<double> terms;
            terms.reserve(n);
            for (int u = 1; u <= n; ++u)
                terms.push_back(rates[u - 1] * safe_inv(model, user_bit(u)));
            settle(l_bits - pairwise_sum(terms));
            verdict.binding_constraint = "timesharing budget";
            break;
        }
        case RegionFlavor::outer: {
            if (n > permutation_cap)
                throw TooManyUsers("permutation enumeration cap exceeded");
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 1);
            double worst = -std::numeric_limits<double>::infinity();
            std::vector<int> worst_perm;
            do {
                double lhs = waterfill_load(model, rates, perm);
                if (lhs > worst) {
                    worst = lhs;
                    worst_perm = perm;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            settle(l_bits - worst);
            verdict.order = worst_perm;
            verdict.binding_constraint =
                "degraded order " + order_string(worst_perm);
            break;
        }
        case RegionFlavor::code1_pub: {
            settle(l_bits - forecast_code1(model, rates).total);
            verdict.binding_constraint = "aggregate queue load";
            break;
        }
        case RegionFlavor::code1_pri: {
            double budget = feedback_adjusted_budget(model, l_bits);
            settle(budget - forecast_code1(model, rates).total);
            verdict.binding_constraint =
                "aggregate queue load under feedback overhead";
            break;
        }
        case RegionFlavor::ordered_budget: {
            RegionVerdict ord = region_membership(model, rates, l_bits,
                                                  RegionFlavor::ordered,
                                                  permutation_cap);
            if (!ord.member) {
                verdict = std::move(ord);
                verdict.binding_constraint = "no consistent processing order";
                break;
            }
            settle(l_bits - waterfill_load(model, rates, ord.order));
            verdict.order = ord.order;
            verdict.binding_constraint =
                "waterfill under " + order_string(ord.order);
            break;
        }
        case RegionFlavor::ordered: {
            if (n > permutation_cap)
                throw TooManyUsers("permutation enumeration cap exceeded");
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 1);
            if (n < 2) {
                verdict.member = true;
                verdict.margin = 0.0;
                verdict.order = perm;
                verdict.binding_constraint = "no contested queues";
                break;
            }
            std::vector<mask_t> contested;
            std::vector<std::vector<double>> cost(std::size_t(1) << n);
            for (mask_t m : masks_by_level(n)) {
                if (popcount(m) < 2) continue;
                contested.push_back(m);
                cost[m].assign(n, 0.0);
                for (int u : users_of(m))
                    cost[m][u - 1] = slot_cost(model, m, u) * rates[u - 1];
            }
            double best = -std::numeric_limits<double>::infinity();
            std::vector<int> best_perm;
            mask_t best_mask = 0;
            do {
                double score = std::numeric_limits<double>::infinity();
                mask_t tight = 0;
                for (mask_t m : contested) {
                    int winner = 0;
                    for (int u : perm)
                        if (has_user(m, u)) {
                            winner = u;
                            break;
                        }
                    double runner_up =
                        -std::numeric_limits<double>::infinity();
                    for (int u : users_of(m))
                        if (u != winner)
                            runner_up = std::max(runner_up, cost[m][u - 1]);
                    double gap = cost[m][winner - 1] - runner_up;
                    if (gap < score) {
                        score = gap;
                        tight = m;
                    }
                }
                if (score > best) {
                    best = score;
                    best_perm = perm;
                    best_mask = tight;
                }
            } while (std::next_permutation(perm.begin(), perm.end()));
            settle(best);
            verdict.order = best_perm;
            verdict.binding_constraint = "queue " + mask_string(best_mask);
            break;
        }
        case RegionFlavor::fair: {
            std::vector<int> order(n);
            std::iota(order.begin(), order.end(), 1);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return model.epsilon(user_bit(a)) > model.epsilon(user_bit(b));
            });
            if (n < 2) {
                verdict.member = true;
                verdict.margin = 0.0;
                verdict.order = order;
                verdict.binding_constraint = "single user";
                break;
            }
            double worst = std::numeric_limits<double>::infinity();
            int tight = 0;
            for (int j = 0; j + 1 < n; ++j) {
                double step =
                    model.epsilon(user_bit(order[j])) * rates[order[j] - 1] -
                    model.epsilon(user_bit(order[j + 1])) *
                        rates[order[j + 1] - 1];
                if (step < worst) {
                    worst = step;
                    tight = j;
                }
            }
            settle(worst);
            verdict.order = order;
            verdict.binding_constraint =
                "chain step " + std::to_string(order[tight]) + "->" +
                std::to_string(order[tight + 1]);
            break;
        }
    }
    return verdict;
}

bool ordered_identity_holds(const ChannelModel& model,
                            const RateVector& rates) {
    RegionVerdict ord =
        region_membership(model, rates, 1.0, RegionFlavor::ordered);
    if (!ord.member)
        throw ConfigError("rates admit no consistent processing order");
    double lhs = forecast_code1(model, rates).total;
    double rhs = waterfill_load(model, rates, ord.order);
    double bound = kTol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return std::abs(lhs - rhs) <= bound;
}

namespace {

constexpr std::array<mask_t, 3> kPairMasks = {0b011, 0b101, 0b110};

struct PairCosts {
    // cost[mask][user-1] = slot_cost * rate, for every non-empty mask
    std::array<std::array<double, 3>, 8> cost{};
    double scale = 1.0;
};

PairCosts code2_costs(const ChannelModel& model, const RateVector& rates) {
    PairCosts pc;
    for (mask_t m = 1; m < 8; ++m)
        for (int u : users_of(m)) {
            double c = slot_cost(model, m, u) * rates[u - 1];
            pc.cost[m][u - 1] = c;
            pc.scale = std::max(pc.scale, c);
        }
    return pc;
}

double pair_floor(const PairCosts& pc, mask_t pair) {
    auto users = users_of(pair);
    return std::min(pc.cost[pair][users[0] - 1], pc.cost[pair][users[1] - 1]);
}

std::array<double, 3> code2_k_full_t2(const ChannelModel& model,
                                      const PairCosts& pc) {
    std::array<double, 3> k{};
    mask_t everyone = 0b111;
    for (int i = 1; i <= 3; ++i) {
        mask_t me = user_bit(i);
        std::vector<double> terms;
        terms.push_back(pc.cost[me][i - 1] *
                        erase_receive_prob(model, me, everyone & ~me));
        for (mask_t pair : kPairMasks) {
            if (!has_user(pair, i)) continue;
            terms.push_back(pair_floor(pc, pair) *
                            erase_receive_prob(model, me, everyone & ~pair));
        }
        k[i - 1] = pairwise_sum(terms);
    }
    return k;
}

std::array<double, 3> code2_k_full_t3(const ChannelModel& model,
                                      const PairCosts& pc, BranchKind branch) {
    std::array<double, 3> k = code2_k_full_t2(model, pc);
    if (branch == BranchKind::revert_phase3) return k;
    mask_t everyone = 0b111;
    for (int i = 1; i <= 3; ++i) {
        std::vector<double> terms;
        terms.push_back(k[i - 1]);
        double owed = 0.0;
        for (mask_t pair : kPairMasks) {
            if (!has_user(pair, i)) continue;
            auto users = users_of(pair);
            double mine = pc.cost[pair][i - 1];
            double high = std::max(pc.cost[pair][users[0] - 1],
                                   pc.cost[pair][users[1] - 1]);
            terms.push_back((mine - pair_floor(pc, pair)) *
                            erase_receive_prob(model, user_bit(i),
                                               everyone & ~pair));
            owed += high - mine;
        }
        if (branch == BranchKind::paired_processing)
            terms.push_back(-owed * (1.0 - model.epsilon(user_bit(i))));
        k[i - 1] = std::max(pairwise_sum(terms), 0.0);
    }
    return k;
}

}  // namespace

Code2Forecast forecast_code2(const ChannelModel& model,
                             const RateVector& rates) {
    if (model.n() != 3)
        throw UnsupportedN("pairing forecast is defined for 3 users");
    check_rates(model, rates, true);
    mask_t everyone = 0b111;

    PairCosts pc = code2_costs(model, rates);
    double tie_tol = 1e-12 * pc.scale;

    Code2Forecast out;
    for (std::size_t idx = 0; idx < kPairMasks.size(); ++idx) {
        mask_t pair = kPairMasks[idx];
        auto users = users_of(pair);
        PairLoad& pl = out.pairs[idx];
        pl.queue = pair;
        pl.users = {users[0], users[1]};
        double ca = pc.cost[pair][users[0] - 1];
        double cb = pc.cost[pair][users[1] - 1];
        for (int side = 0; side < 2; ++side) {
            int u = users[side];
            int other = users[1 - side];
            pl.k_entry_t2[side] =
                pc.cost[pair][u - 1] *
                (1.0 - model.epsilon(everyone & ~user_bit(other)));
        }
        if (std::abs(ca - cb) <= tie_tol) {
            pl.survivor = 0;
        } else if (ca > cb) {
            pl.survivor = users[0];
            pl.rate_gap[0] = ca - cb;
        } else {
            pl.survivor = users[1];
            pl.rate_gap[1] = cb - ca;
        }
    }

    for (const PairLoad& pl : out.pairs) {
        if (pl.survivor == 0) continue;
        int loser = pl.users[0] == pl.survivor ? pl.users[1] : pl.users[0];
        out.survival[pl.survivor - 1] += 1;
        out.dominance[pl.survivor - 1][loser - 1] = 1;
        out.dominance[loser - 1][pl.survivor - 1] = -1;
    }

    out.order_transitive = true;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 3; ++c) {
                if (a == b || b == c || a == c) continue;
                int ab = out.dominance[a][b];
                int bc = out.dominance[b][c];
                bool forces = (ab == 1 && bc >= 0) || (ab >= 0 && bc == 1);
                if (forces && out.dominance[a][c] != 1)
                    out.order_transitive = false;
            }

    std::array<int, 3> sorted = out.survival;
    std::sort(sorted.begin(), sorted.end());
    if (sorted == std::array<int, 3>{0, 0, 0})
        out.branch = BranchKind::revert_phase3;
    else if (sorted == std::array<int, 3>{1, 1, 1})
        out.branch = BranchKind::finish_level2_plain;
    else
        out.branch = BranchKind::paired_processing;

    out.k_full_t2 = code2_k_full_t2(model, pc);
    out.k_full_t3 = code2_k_full_t3(model, pc, out.branch);

    std::vector<double> level1_terms;
    for (int i = 1; i <= 3; ++i)
        level1_terms.push_back(pc.cost[user_bit(i)][i - 1]);
    out.level1 = pairwise_sum(level1_terms);

    std::vector<double> level2_terms;
    for (mask_t pair : kPairMasks) {
        auto users = users_of(pair);
        level2_terms.push_back(std::max(pc.cost[pair][users[0] - 1],
                                        pc.cost[pair][users[1] - 1]));
    }
    out.level2 = pairwise_sum(level2_terms);

    out.level3 = 0.0;
    for (int i = 1; i <= 3; ++i)
        out.level3 = std::max(out.level3, out.k_full_t3[i - 1] *
                                              safe_inv(model, user_bit(i)));
    out.total = out.level1 + out.level2 + out.level3;
    return out;
}

std::array<double, 3> code2_k_full_at_phase3(const ChannelModel& model,
                                             const RateVector& rates,
                                             BranchKind branch) {
    if (model.n() != 3)
        throw UnsupportedN("pairing forecast is defined for 3 users");
    check_rates(model, rates, true);
    PairCosts pc = code2_costs(model, rates);
    return code2_k_full_t3(model, pc, branch);
}

}  // namespace bpec
