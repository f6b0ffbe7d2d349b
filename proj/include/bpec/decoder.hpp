#pragma once

#include <cstdint>
#include <vector>

#include "bpec/encoder_code1.hpp"
#include "bpec/overhead.hpp"

namespace bpec {

// One user's receiver. It drives a private replica of the transmitter over a
// shadow queue network: the same recipe seed and the broadcast feedback make
// every coefficient draw and queue action reproducible, so no coefficients
// ever travel in-band. Each slot that hands this user a fresh basis token
// contributes one linear equation over its own session packets.
class Receiver {
  public:
    Receiver(int user, const Gf& gf, const std::vector<int>& session_sizes,
             int packet_len, std::uint64_t recipe_seed, Algorithm alg,
             EncoderOptions opts = {});

    int user() const { return user_; }
    bool done() const { return enc_.done(); }
    long slots_replayed() const { return slots_; }
    std::size_t equations() const { return equations_.size(); }
    const Encoder& shadow() const { return enc_; }

    // Advance the replica by one slot. own_payload is what this user heard,
    // nullptr when the slot erased at this user. Throws DesyncError when the
    // inputs contradict the replica (missing or ill-sized payload, or slots
    // past termination).
    void replay_slot(const ErasurePattern& pattern, const PacketVector* own_payload);

    // Solve for this user's session packets, in session order. Requires a
    // terminated replay; throws RankDeficient when the equation system does
    // not pin down every packet.
    std::vector<PacketVector> decode() const;

  private:
    int user_;
    const Gf& gf_;
    Encoder enc_;
    long slots_ = 0;
    std::vector<std::pair<CoeffVector, PacketVector>> equations_;
};

struct PrivateDecodeResult {
    std::vector<PacketVector> packets;
    long info_slots = 0;
    int feedback_packets = 0;
};

// Full private-variant pipeline for one user: rebuild the feedback log from
// the receive FIFO, replay every information slot, and solve. Propagates
// FramingError from reconstruction and RankDeficient from the solve.
PrivateDecodeResult decode_private(int user, const Gf& gf,
                                   const std::vector<int>& session_sizes,
                                   int packet_len, std::uint64_t recipe_seed,
                                   Algorithm alg, const std::vector<Frame>& fifo,
                                   const std::vector<std::uint8_t>& own_feedback,
                                   EncoderOptions opts = {});

}  // namespace bpec
