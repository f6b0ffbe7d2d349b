#include "bpec/queue_net.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace bpec {

namespace {

constexpr int kMaxUsers = 16;

void check_field(const Gf& gf, int n) {
    if (n < 1 || n > kMaxUsers) throw ConfigError("user count out of range");
    if (gf.q() <= std::uint32_t(n)) throw FieldTooSmall("need q > N");
}

}  // namespace

QueueNetwork::QueueNetwork(const Gf& gf, NetMode mode, std::vector<int> sizes,
                           int packet_len, int own_user)
    : n_(int(sizes.size())),
      gf_(&gf),
      mode_(mode),
      own_user_(own_user),
      p_len_(packet_len),
      sizes_(std::move(sizes)) {
    const std::size_t nmask = std::size_t(1) << n_;
    queue_count_.assign(nmask, 0);
    k_.assign(nmask, std::vector<int>(n_, 0));
    k_delivered_.assign(n_, 0);
    if (mode_ != NetMode::index_only) {
        queues_.resize(nmask);
        basis_.assign(nmask, std::vector<std::vector<CoeffVector>>(n_));
        basis_delivered_.resize(n_);
        delivered_.resize(n_);
    }

    for (int u = 1; u <= n_; ++u) {
        const mask_t own = user_bit(u);
        const int d = sizes_[u - 1];
        k_[own][u - 1] = d;
        queue_count_[own] = d;
        if (mode_ == NetMode::index_only) continue;
        for (int j = 0; j < d; ++j) {
            StoredPacket pkt;
            pkt.origin_slot = 0;
            pkt.views.resize(n_);
            TokenView& view = pkt.views[u - 1];
            view.defined = true;
            view.b.assign(d, 0);
            view.b[j] = 1;
            if (tracks_c(u)) view.c.assign(p_len_, 0);
            queues_[own].push_back(std::move(pkt));
            basis_[own][u - 1].push_back(queues_[own].back().views[u - 1].b);
        }
    }
}

QueueNetwork QueueNetwork::initialize(
    const Gf& gf, const std::vector<std::vector<PacketVector>>& sessions) {
    check_field(gf, int(sessions.size()));
    std::vector<int> sizes;
    int p_len = -1;
    for (const auto& session : sessions) {
        sizes.push_back(int(session.size()));
        for (const auto& pkt : session) {
            if (p_len < 0) p_len = int(pkt.size());
            if (int(pkt.size()) != p_len)
                throw ConfigError("session packets must share one length");
        }
    }
    QueueNetwork net(gf, NetMode::full, std::move(sizes), std::max(p_len, 0), 0);
    for (int u = 1; u <= net.n_; ++u)
        for (int j = 0; j < net.sizes_[u - 1]; ++j)
            net.queues_[user_bit(u)][j].payload = sessions[u - 1][j];
    return net;
}

QueueNetwork QueueNetwork::initialize_shadow(const Gf& gf, const std::vector<int>& sizes,
                                             int packet_len, int own_user) {
    check_field(gf, int(sizes.size()));
    if (own_user < 1 || own_user > int(sizes.size()))
        throw ConfigError("shadow owner out of range");
    return QueueNetwork(gf, NetMode::shadow, sizes, packet_len, own_user);
}

QueueNetwork QueueNetwork::initialize_counts(const Gf& gf, const std::vector<int>& sizes) {
    check_field(gf, int(sizes.size()));
    return QueueNetwork(gf, NetMode::index_only, sizes, 0, 0);
}

mask_t QueueNetwork::active_users(mask_t S) const {
    mask_t active = 0;
    for (int u : users_of(S))
        if (k_[S][u - 1] > 0) active |= user_bit(u);
    return active;
}

Combination QueueNetwork::form_combination(const std::vector<mask_t>& sources,
                                           const Recipe& coeffs) const {
    if (mode_ == NetMode::index_only)
        throw std::logic_error("no packet contents in index-only mode");
    if (sources.empty()) throw std::invalid_argument("no source queues");

    mask_t common = full_mask(n_);
    std::size_t total = 0;
    for (mask_t src : sources) {
        common &= src;
        total += queues_[src].size();
    }
    if (coeffs.size() != total)
        throw std::invalid_argument("recipe length does not match source contents");

    Combination out;
    out.views.resize(n_);
    if (mode_ == NetMode::full) out.payload.assign(p_len_, 0);
    for (int u : users_of(common)) {
        TokenView& view = out.views[u - 1];
        view.defined = true;
        view.b.assign(sizes_[u - 1], 0);
        if (tracks_c(u)) view.c.assign(p_len_, 0);
    }

    std::size_t pos = 0;
    for (mask_t src : sources) {
        for (const StoredPacket& pkt : queues_[src]) {
            const fe a = coeffs[pos++];
            if (a == 0) continue;
            if (mode_ == NetMode::full) axpy(*gf_, a, pkt.payload, out.payload);
            for (int u : users_of(common)) {
                const TokenView& in = pkt.views[u - 1];
                TokenView& acc = out.views[u - 1];
                axpy(*gf_, a, in.b, acc.b);
                if (tracks_c(u)) axpy(*gf_, a, in.c, acc.c);
            }
        }
    }
    return out;
}

Combination QueueNetwork::form_combination(mask_t source, const Recipe& coeffs) const {
    return form_combination(std::vector<mask_t>{source}, coeffs);
}

void QueueNetwork::deliver_to(int user, mask_t S, const Combination& sent, int slot) {
    --k_[S][user - 1];
    ++k_delivered_[user - 1];
    if (mode_ == NetMode::index_only) return;

    auto& from = basis_[S][user - 1];
    basis_delivered_[user - 1].push_back(sent.views[user - 1].b);
    from.erase(from.begin());

    StoredPacket copy;
    copy.payload = sent.payload;
    copy.views = sent.views;
    copy.origin_slot = slot;
    delivered_[user - 1].push_back(std::move(copy));
}

void QueueNetwork::move_index(int user, mask_t from, mask_t to, const Combination& sent) {
    --k_[from][user - 1];
    ++k_[to][user - 1];
    if (mode_ == NetMode::index_only) return;
    auto& src = basis_[from][user - 1];
    basis_[to][user - 1].push_back(sent.views[user - 1].b);
    src.erase(src.begin());
}

void QueueNetwork::append_packet(mask_t dest, const Combination& sent, mask_t computed,
                                 mask_t trivial, int slot) {
    ++queue_count_[dest];
    if (mode_ == NetMode::index_only) return;
    if ((computed | trivial) != dest)
        throw std::logic_error("stored packet would lack a view for a queue member");

    StoredPacket pkt;
    pkt.payload = sent.payload;
    pkt.origin_slot = slot;
    pkt.views.resize(n_);
    for (int u : users_of(computed)) {
        if (!sent.views[u - 1].defined)
            throw std::logic_error("combination carries no view for a member user");
        pkt.views[u - 1] = sent.views[u - 1];
    }
    for (int u : users_of(trivial & ~computed)) {
        TokenView& view = pkt.views[u - 1];
        view.defined = true;
        view.b.assign(sizes_[u - 1], 0);
        if (tracks_c(u)) {
            if (sent.payload.empty())
                throw std::logic_error("received payload required for a trivial view");
            view.c = sent.payload;
        }
    }
    queues_[dest].push_back(std::move(pkt));
}

ActionOutcome QueueNetwork::apply_actfb1(mask_t S, const Combination& sent, mask_t G,
                                         int slot) {
    ActionOutcome out;
    const mask_t erased_in_s = S & ~G;
    const mask_t fresh = G & ~S;

    for (int u : users_of(S & G))
        if (k_[S][u - 1] > 0) out.delivered |= user_bit(u);
    const bool add = erased_in_s != 0 && fresh != 0;
    if (add)
        for (int u : users_of(erased_in_s))
            if (k_[S][u - 1] > 0) out.moved |= user_bit(u);

    for (int u : users_of(out.delivered)) deliver_to(u, S, sent, slot);
    if (add) {
        out.appended = true;
        out.dest = S | G;
        for (int u : users_of(out.moved)) move_index(u, S, out.dest, sent);
        append_packet(out.dest, sent, S, fresh, slot);
    }
    out.advanced = (out.delivered | out.moved) != 0;
    return out;
}

void QueueNetwork::check_invariants() const {
    const std::size_t nmask = std::size_t(1) << n_;
    for (int u = 1; u <= n_; ++u) {
        long total = k_delivered_[u - 1];
        for (std::size_t m = 0; m < nmask; ++m) {
            total += k_[m][u - 1];
            if (k_[m][u - 1] < 0) throw std::logic_error("negative token index");
            if (k_[m][u - 1] > 0 && !has_user(mask_t(m), u))
                throw std::logic_error("token index outside its queue's user set");
        }
        if (total != sizes_[u - 1]) throw std::logic_error("token count not conserved");
    }
    if (mode_ == NetMode::index_only) return;

    for (int u = 1; u <= n_; ++u) {
        std::vector<CoeffVector> live = basis_delivered_[u - 1];
        if (int(live.size()) != k_delivered_[u - 1])
            throw std::logic_error("delivered basis size mismatch");
        for (std::size_t m = 0; m < nmask; ++m) {
            if (int(basis_[m][u - 1].size()) != k_[m][u - 1])
                throw std::logic_error("queue basis size mismatch");
            live.insert(live.end(), basis_[m][u - 1].begin(), basis_[m][u - 1].end());
        }
        if (int(live.size()) != sizes_[u - 1])
            throw std::logic_error("basis union has wrong cardinality");
        if (rank(*gf_, live) != sizes_[u - 1])
            throw std::logic_error("basis union lost full rank for user " +
                                   std::to_string(u));
    }

    for (std::size_t m = 0; m < nmask; ++m) {
        if (int(queues_[m].size()) != queue_count_[m])
            throw std::logic_error("queue count out of sync");
        for (const StoredPacket& pkt : queues_[m])
            for (int u = 1; u <= n_; ++u)
                if (pkt.views[u - 1].defined != has_user(mask_t(m), u))
                    throw std::logic_error("stored views must match the queue's user set");
    }
}

}  // namespace bpec
