#pragma once

#include <cstdint>
#include <vector>

#include "bpec/channel.hpp"
#include "bpec/gf.hpp"
#include "bpec/subset.hpp"

namespace bpec {

// Reception flags for one transmitted slot: bit u-1 set iff user u got it.
using FeedbackLog = std::vector<mask_t>;

// One wire frame of the private variant. Frames with feedback = true carry a
// packed slice of the transmitter's feedback log (h1 = 1); frames with
// feedback = false carry either a coded information payload or, once the
// feedback stage has started, the all-zero terminator.
struct Frame {
    bool feedback = false;
    std::vector<std::uint8_t> bits;  // feedback slices and the terminator
    PacketVector payload;            // information combinations

    bool is_termination() const;
};

int frame_bytes(int l_bits);

// Slot groups that fit in one feedback packet after the two header bits.
// Throws PacketTooSmall when not even one group fits.
int groups_per_packet(int l_bits, int n);

// Bit layout: sequential bit k of a packet lives in byte k/8, position k%8.
// Bit 0 is h1, bit 1 is h2, and group g occupies bits [2+g*n, 2+(g+1)*n)
// with user u's flag at offset u-1. The last packet is zero-padded.
std::vector<std::vector<std::uint8_t>> packetize_log(const FeedbackLog& log,
                                                     int l_bits, int n);

struct MulticastResult {
    long slots = 0;                            // termination included
    std::vector<long> per_packet_slots;        // termination last
    std::vector<std::vector<Frame>> received;  // [user-1]; duplicates kept
};

// Broadcasts each packet, then the all-zero terminator, repeating each until
// every user holds a copy. Every reception is appended to that user's frame
// list, so listeners see the same duplicate-laden stream a real run produces.
MulticastResult multicast_until_all(const std::vector<std::vector<std::uint8_t>>& packets,
                                    int n, PatternStream& stream, int l_bits);

struct ReplayInput {
    FeedbackLog log;                  // information stage only, padding removed
    std::vector<PacketVector> infos;  // this user's h1 = 0 receptions in order
    std::vector<long> info_slots;     // slot index bound to each entry of infos
    int feedback_packets = 0;         // distinct packets after h2 deduplication
};

// Rebuilds the feedback log from one user's receive FIFO: splits the stream
// at the first h1 = 1 frame, collapses repeated feedback packets via h2,
// unpacks the slot groups, and binds each stored information packet to the
// slot the log marks as received by this user. own_feedback holds the user's
// own per-slot reception flags (one byte per information slot, nonzero =
// received) and is checked against the log's column.
ReplayInput receiver_reconstruct(const std::vector<Frame>& fifo,
                                 const std::vector<std::uint8_t>& own_feedback,
                                 int user, int n, int l_bits);

}  // namespace bpec
