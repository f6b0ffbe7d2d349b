#include "bpec/overhead.hpp"

#include <algorithm>
#include <string>

#include "bpec/errors.hpp"

namespace bpec {

namespace {

void set_bit(std::vector<std::uint8_t>& blob, int k) {
    blob[static_cast<std::size_t>(k) >> 3] |= static_cast<std::uint8_t>(1u << (k & 7));
}

bool get_bit(const std::vector<std::uint8_t>& blob, int k) {
    return (blob[static_cast<std::size_t>(k) >> 3] >> (k & 7)) & 1u;
}

bool all_zero(const std::vector<std::uint8_t>& blob) {
    return std::all_of(blob.begin(), blob.end(),
                       [](std::uint8_t b) { return b == 0; });
}

bool all_zero(const PacketVector& v) {
    return std::all_of(v.begin(), v.end(), [](fe x) { return x == 0; });
}

}  // namespace

bool Frame::is_termination() const {
    if (feedback) return false;
    return all_zero(bits) && all_zero(payload) && (!bits.empty() || !payload.empty());
}

int frame_bytes(int l_bits) { return (l_bits + 7) / 8; }

int groups_per_packet(int l_bits, int n) {
    if (l_bits - 2 < n) {
        throw PacketTooSmall("packet of " + std::to_string(l_bits) +
                             " bits cannot hold a " + std::to_string(n) +
                             "-bit feedback group after headers");
    }
    return (l_bits - 2) / n;
}

std::vector<std::vector<std::uint8_t>> packetize_log(const FeedbackLog& log,
                                                     int l_bits, int n) {
    const int gpp = groups_per_packet(l_bits, n);
    const int bytes = frame_bytes(l_bits);
    std::vector<std::vector<std::uint8_t>> packets;
    if (log.empty()) return packets;

    const std::size_t count = (log.size() + static_cast<std::size_t>(gpp) - 1) /
                              static_cast<std::size_t>(gpp);
    packets.reserve(count);
    for (std::size_t p = 0; p < count; ++p) {
        std::vector<std::uint8_t> blob(static_cast<std::size_t>(bytes), 0);
        set_bit(blob, 0);                  // h1: feedback packet
        if (p & 1) set_bit(blob, 1);       // h2 alternates starting at 0
        for (int g = 0; g < gpp; ++g) {
            const std::size_t idx = p * static_cast<std::size_t>(gpp) +
                                    static_cast<std::size_t>(g);
            if (idx >= log.size()) break;
            for (int u = 1; u <= n; ++u) {
                if (has_user(log[idx], u)) set_bit(blob, 2 + g * n + (u - 1));
            }
        }
        packets.push_back(std::move(blob));
    }
    return packets;
}

MulticastResult multicast_until_all(const std::vector<std::vector<std::uint8_t>>& packets,
                                    int n, PatternStream& stream, int l_bits) {
    MulticastResult out;
    out.received.resize(static_cast<std::size_t>(n));

    std::vector<Frame> frames;
    frames.reserve(packets.size() + 1);
    for (const auto& p : packets) frames.push_back(Frame{true, p, {}});
    frames.push_back(
        Frame{false, std::vector<std::uint8_t>(static_cast<std::size_t>(frame_bytes(l_bits)), 0), {}});

    std::vector<char> have(static_cast<std::size_t>(n));
    for (const Frame& frame : frames) {
        std::fill(have.begin(), have.end(), 0);
        long used = 0;
        int remaining = n;
        while (remaining > 0) {
            const ErasurePattern pat = stream.next();
            ++used;
            for (int u = 1; u <= n; ++u) {
                if (!has_user(pat.receivers(n), u)) continue;
                out.received[static_cast<std::size_t>(u - 1)].push_back(frame);
                if (!have[static_cast<std::size_t>(u - 1)]) {
                    have[static_cast<std::size_t>(u - 1)] = 1;
                    --remaining;
                }
            }
        }
        out.per_packet_slots.push_back(used);
        out.slots += used;
    }
    return out;
}

ReplayInput receiver_reconstruct(const std::vector<Frame>& fifo,
                                 const std::vector<std::uint8_t>& own_feedback,
                                 int user, int n, int l_bits) {
    const int gpp = groups_per_packet(l_bits, n);
    const int bytes = frame_bytes(l_bits);

    ReplayInput out;
    std::vector<const std::vector<std::uint8_t>*> distinct;
    bool feedback_seen = false;
    bool terminated = false;
    int last_h2 = -1;

    for (const Frame& frame : fifo) {
        if (!frame.feedback) {
            // Information frames carry a coded payload; the terminator is an
            // all-zero bit blob. The distinction matters only before the
            // feedback stage, where a coded payload may itself be zero.
            if (!feedback_seen && frame.bits.empty()) {
                out.infos.push_back(frame.payload);
                continue;
            }
            if (!frame.is_termination()) {
                throw FramingError("nonzero h1=0 frame inside the feedback stage");
            }
            terminated = true;
            continue;
        }
        if (terminated) throw FramingError("feedback packet after termination");
        feedback_seen = true;
        if (frame.bits.size() != static_cast<std::size_t>(bytes)) {
            throw FramingError("feedback packet has wrong length");
        }
        if (!get_bit(frame.bits, 0)) throw FramingError("feedback packet without h1");
        for (int k = l_bits; k < bytes * 8; ++k) {
            if (get_bit(frame.bits, k)) throw FramingError("stray bits past packet end");
        }
        const int h2 = get_bit(frame.bits, 1) ? 1 : 0;
        if (h2 == last_h2) {
            if (frame.bits != *distinct.back()) {
                throw FramingError("repeated h2 with different contents");
            }
            continue;  // another copy of the current packet
        }
        if (h2 != static_cast<int>(distinct.size() % 2)) {
            throw FramingError("h2 parity out of sequence");
        }
        distinct.push_back(&frame.bits);
        last_h2 = h2;
    }
    if (!terminated) throw FramingError("no termination frame observed");

    FeedbackLog raw;
    raw.reserve(distinct.size() * static_cast<std::size_t>(gpp));
    for (const auto* blob : distinct) {
        for (int g = 0; g < gpp; ++g) {
            mask_t m = 0;
            for (int u = 1; u <= n; ++u) {
                if (get_bit(*blob, 2 + g * n + (u - 1))) m |= user_bit(u);
            }
            raw.push_back(m);
        }
    }

    const std::size_t slots = own_feedback.size();
    if (raw.size() < slots) throw FramingError("log shorter than the information stage");
    for (std::size_t t = 0; t < slots; ++t) {
        if (has_user(raw[t], user) != (own_feedback[t] != 0)) {
            throw FramingError("log disagrees with this user's own feedback");
        }
        if (own_feedback[t]) out.info_slots.push_back(static_cast<long>(t));
    }
    for (std::size_t t = slots; t < raw.size(); ++t) {
        if (raw[t] != 0) throw FramingError("nonzero padding group");
    }
    raw.resize(slots);

    if (out.info_slots.size() != out.infos.size()) {
        throw FramingError("stored packet count does not match the log");
    }
    out.log = std::move(raw);
    out.feedback_packets = static_cast<int>(distinct.size());
    return out;
}

}  // namespace bpec
