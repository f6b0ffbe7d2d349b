#include "bpec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bpec {

namespace {

constexpr int kMaxUsers = 20;
constexpr double kProbTol = 1e-12;

void check_user_count(int n) {
    if (n < 1 || n > kMaxUsers) throw ConfigError("user count out of range");
}

double binom(int n, int k) {
    double r = 1;
    for (int j = 0; j < k; ++j) r = r * double(n - j) / double(j + 1);
    return r;
}

}  // namespace

ChannelModel::ChannelModel(int n, ChannelKind kind, std::vector<double> probs,
                           std::vector<mask_t> trace)
    : n_(n), kind_(kind), probs_(std::move(probs)), trace_(std::move(trace)) {
    const std::size_t size = std::size_t(1) << n_;
    if (probs_.size() != size) throw ConfigError("pattern table has wrong size");

    double sum = 0;
    for (double& p : probs_) {
        if (p < -kProbTol) throw ConfigError("negative pattern probability");
        p = std::max(p, 0.0);
        sum += p;
    }
    if (std::abs(sum - 1.0) > kProbTol && kind_ != ChannelKind::scripted)
        throw ConfigError("pattern probabilities do not sum to 1");
    if (sum > 0)
        for (double& p : probs_) p /= sum;

    // Superset sums: eps_[I] = sum of probs over erased-masks containing I.
    eps_ = probs_;
    for (int b = 0; b < n_; ++b) {
        const mask_t bit = mask_t(1) << b;
        for (mask_t m = 0; m < size; ++m)
            if (!(m & bit)) eps_[m] += eps_[m | bit];
    }

    if (kind_ != ChannelKind::scripted) {
        for (int u = 1; u <= n_; ++u)
            if (eps_[user_bit(u)] >= 1.0)
                throw ConfigError("user erases with probability 1");
    }
}

ChannelModel ChannelModel::symmetric(int n, const std::vector<double>& eps_tilde) {
    check_user_count(n);
    if (int(eps_tilde.size()) != n)
        throw ConfigError("need one erasure level per set size");

    // Inclusion-exclusion: probability that exactly a fixed k-set erases.
    auto tilde = [&](int k) { return k == 0 ? 1.0 : eps_tilde[k - 1]; };
    std::vector<double> exact(n + 1);
    for (int k = 0; k <= n; ++k) {
        double p = 0;
        for (int j = 0; j <= n - k; ++j)
            p += (j % 2 ? -1.0 : 1.0) * binom(n - k, j) * tilde(k + j);
        if (p < -kProbTol)
            throw ConfigError("erasure levels admit no exchangeable distribution");
        exact[k] = std::max(p, 0.0);
    }

    const std::size_t size = std::size_t(1) << n;
    std::vector<double> probs(size);
    for (mask_t m = 0; m < size; ++m) probs[m] = exact[popcount(m)];
    return ChannelModel(n, ChannelKind::symmetric, std::move(probs), {});
}

ChannelModel ChannelModel::independent(int n, const std::vector<double>& eps) {
    check_user_count(n);
    if (int(eps.size()) != n) throw ConfigError("need one marginal per user");
    for (double e : eps)
        if (e < 0 || e >= 1) throw ConfigError("marginal erasure rate outside [0,1)");

    const std::size_t size = std::size_t(1) << n;
    std::vector<double> probs(size, 1.0);
    for (mask_t m = 0; m < size; ++m)
        for (int u = 1; u <= n; ++u)
            probs[m] *= has_user(m, u) ? eps[u - 1] : 1.0 - eps[u - 1];
    return ChannelModel(n, ChannelKind::independent, std::move(probs), {});
}

ChannelModel ChannelModel::iid(int n, double eps) {
    return independent(n, std::vector<double>(n, eps));
}

ChannelModel ChannelModel::joint(int n, std::vector<double> pattern_probs) {
    check_user_count(n);
    return ChannelModel(n, ChannelKind::joint, std::move(pattern_probs), {});
}

ChannelModel ChannelModel::scripted(int n, std::vector<mask_t> erased_masks) {
    check_user_count(n);
    if (erased_masks.empty()) throw ConfigError("empty trace");
    for (mask_t m : erased_masks)
        if (m & ~full_mask(n)) throw ConfigError("trace pattern has stray bits");

    const std::size_t size = std::size_t(1) << n;
    std::vector<double> probs(size, 0.0);
    for (mask_t m : erased_masks) probs[m] += 1.0 / double(erased_masks.size());
    return ChannelModel(n, ChannelKind::scripted, std::move(probs),
                        std::move(erased_masks));
}

ChannelModel ChannelModel::scripted(int n, const std::vector<std::string>& slots) {
    std::vector<mask_t> masks;
    masks.reserve(slots.size());
    for (const auto& slot : slots) {
        if (int(slot.size()) != n) throw ConfigError("trace slot has wrong width");
        mask_t m = 0;
        for (int u = 1; u <= n; ++u) {
            const char c = slot[u - 1];
            if (c == 'E')
                m |= user_bit(u);
            else if (c != 'R' && c != 'X')
                throw ConfigError("trace characters must be E, R or X");
        }
        masks.push_back(m);
    }
    return scripted(n, std::move(masks));
}

double ChannelModel::epsilon(mask_t subset) const {
    if (subset & ~full_mask(n_)) throw ConfigError("subset has stray bits");
    return eps_[subset];
}

ErasurePattern sample_pattern(const ChannelModel& model, SplitMix64& rng) {
    if (!model.has_stats())
        throw ConfigError("scripted models are sampled through PatternStream");
    const auto& probs = model.pattern_probs();
    double u = rng.unit();
    mask_t m = 0;
    double acc = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        acc += probs[k];
        if (u < acc || k + 1 == probs.size()) {
            m = mask_t(k);
            break;
        }
    }
    return ErasurePattern{m};
}

ErasurePattern PatternStream::next() {
    if (model_.kind() == ChannelKind::scripted) {
        if (pos_ >= model_.trace_length())
            throw TraceExhausted("scripted trace ran out of slots");
        return ErasurePattern{model_.trace_at(pos_++)};
    }
    ++pos_;
    return sample_pattern(model_, rng_);
}

}  // namespace bpec
