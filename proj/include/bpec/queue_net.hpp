#pragma once

#include <vector>

#include "bpec/errors.hpp"
#include "bpec/gf.hpp"
#include "bpec/subset.hpp"

namespace bpec {

// A packet s is a token for user u when s = sum_p b(p)*p + c over u's own
// session packets. b is indexed by u's packets; c is a known constant.
struct TokenView {
    bool defined = false;
    CoeffVector b;
    PacketVector c;  // empty when this holder does not track constants
};

struct StoredPacket {
    PacketVector payload;          // empty outside full mode
    std::vector<TokenView> views;  // entry u-1 for user u; defined iff u in S
    int origin_slot = -1;
};

// A transmitted linear combination plus the per-user token views it carries.
struct Combination {
    PacketVector payload;
    std::vector<TokenView> views;
};

// Dense coefficient list over the concatenated source queues.
using Recipe = std::vector<fe>;

struct ActionOutcome {
    bool advanced = false;  // at least one index moved
    mask_t delivered = 0;   // users whose packet count moved to the delivered queue
    mask_t moved = 0;       // users whose index moved to the destination queue
    bool appended = false;  // the sent packet was stored in the destination queue
    mask_t dest = 0;

    bool retransmit() const { return !advanced; }
};

// Which user l in {istar, j} draws its replacement-basis element from where
// is fixed by the construction: j still survives in `pair`, istar does not.
struct Actfb2Context {
    mask_t pair = 0;  // level-2 queue being processed
    int istar = 0;    // paired transmitter whose remaining tokens live in Q_N
    int j = 0;        // survivor of `pair`
};

// full: transmitter state (payloads, all views). shadow: one receiver's
// replica (all b views, constants only for own_user, no payloads).
// index_only: counts and k-indices alone, for fast slot-count runs.
enum class NetMode { full, shadow, index_only };

class QueueNetwork {
  public:
    static QueueNetwork initialize(const Gf& gf,
                                   const std::vector<std::vector<PacketVector>>& sessions);
    static QueueNetwork initialize_shadow(const Gf& gf, const std::vector<int>& sizes,
                                          int packet_len, int own_user);
    static QueueNetwork initialize_counts(const Gf& gf, const std::vector<int>& sizes);

    int n() const { return n_; }
    const Gf& field() const { return *gf_; }
    NetMode mode() const { return mode_; }
    int own_user() const { return own_user_; }
    int packet_len() const { return p_len_; }
    int session_size(int user) const { return sizes_[user - 1]; }
    const std::vector<int>& session_sizes() const { return sizes_; }

    int k(mask_t S, int user) const { return k_[S][user - 1]; }
    int k_delivered(int user) const { return k_delivered_[user - 1]; }
    int queue_size(mask_t S) const { return queue_count_[S]; }
    const std::vector<StoredPacket>& packets(mask_t S) const { return queues_[S]; }
    const std::vector<StoredPacket>& delivered(int user) const {
        return delivered_[user - 1];
    }
    const std::vector<CoeffVector>& basis(mask_t S, int user) const {
        return basis_[S][user - 1];
    }
    const std::vector<CoeffVector>& basis_delivered(int user) const {
        return basis_delivered_[user - 1];
    }

    // Users i in S with k(S, i) > 0; the queue is processed while non-empty.
    mask_t active_users(mask_t S) const;

    bool tracks_c(int user) const {
        return mode_ == NetMode::full ||
               (mode_ == NetMode::shadow && user == own_user_);
    }

    Combination form_combination(const std::vector<mask_t>& sources,
                                 const Recipe& coeffs) const;
    Combination form_combination(mask_t source, const Recipe& coeffs) const;

    ActionOutcome apply_actfb1(mask_t S, const Combination& sent, mask_t G, int slot);
    ActionOutcome apply_actfb2(const Actfb2Context& ctx, const Combination& sent,
                               mask_t G, int slot);

    // Throws std::logic_error on any bookkeeping violation: per-user token
    // conservation, basis sizes matching indices, and (outside index_only)
    // the per-user union of live bases having full rank.
    void check_invariants() const;

  private:
    QueueNetwork(const Gf& gf, NetMode mode, std::vector<int> sizes, int packet_len,
                 int own_user);

    void deliver_to(int user, mask_t S, const Combination& sent, int slot);
    void move_index(int user, mask_t from, mask_t to, const Combination& sent);
    void append_packet(mask_t dest, const Combination& sent, mask_t computed,
                       mask_t trivial, int slot);

    int n_;
    const Gf* gf_;
    NetMode mode_;
    int own_user_;
    int p_len_;
    std::vector<int> sizes_;

    std::vector<std::vector<StoredPacket>> queues_;   // [mask]
    std::vector<int> queue_count_;                    // [mask]
    std::vector<std::vector<int>> k_;                 // [mask][user-1]
    std::vector<int> k_delivered_;                    // [user-1]
    std::vector<std::vector<std::vector<CoeffVector>>> basis_;  // [mask][user-1]
    std::vector<std::vector<CoeffVector>> basis_delivered_;     // [user-1]
    std::vector<std::vector<StoredPacket>> delivered_;          // [user-1]
};

}  // namespace bpec
