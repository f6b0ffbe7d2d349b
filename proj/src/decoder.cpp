#include "bpec/decoder.hpp"

#include <stdexcept>
#include <string>
#include <utility>

#include "bpec/errors.hpp"

namespace bpec {

Receiver::Receiver(int user, const Gf& gf, const std::vector<int>& session_sizes,
                   int packet_len, std::uint64_t recipe_seed, Algorithm alg,
                   EncoderOptions opts)
    : user_(user),
      gf_(gf),
      enc_(QueueNetwork::initialize_shadow(gf, session_sizes, packet_len, user),
           recipe_seed, alg, std::move(opts)) {}

void Receiver::replay_slot(const ErasurePattern& pattern,
                           const PacketVector* own_payload) {
    if (enc_.done()) throw DesyncError("slot fed to a terminated replica");
    const int n = enc_.net().n();
    const bool own_rx = has_user(pattern.receivers(n), user_);
    if (own_rx) {
        if (own_payload == nullptr) {
            throw DesyncError("received slot without its payload");
        }
        if (own_payload->size() != static_cast<std::size_t>(enc_.net().packet_len())) {
            throw DesyncError("payload length does not match the session");
        }
    } else {
        own_payload = nullptr;
    }

    TokenView view = enc_.pending().views[static_cast<std::size_t>(user_ - 1)];
    const SlotRecord rec = enc_.step(pattern.erased, own_payload);
    ++slots_;

    if (has_user(rec.outcome.delivered, user_)) {
        PacketVector rhs = *own_payload;
        for (std::size_t i = 0; i < rhs.size(); ++i) {
            rhs[i] = Gf::add(rhs[i], view.c[i]);
        }
        equations_.emplace_back(std::move(view.b), std::move(rhs));
    }
}

std::vector<PacketVector> Receiver::decode() const {
    if (!enc_.done()) throw std::logic_error("decode before termination");
    const std::size_t need =
        static_cast<std::size_t>(enc_.net().session_size(user_));
    if (equations_.size() != need) {
        throw RankDeficient("user " + std::to_string(user_) + " holds " +
                            std::to_string(equations_.size()) + " of " +
                            std::to_string(need) + " equations");
    }
    try {
        return solve_linear_system(gf_, equations_);
    } catch (const SingularMatrix&) {
        throw RankDeficient("equation system for user " + std::to_string(user_) +
                            " is singular");
    }
}

PrivateDecodeResult decode_private(int user, const Gf& gf,
                                   const std::vector<int>& session_sizes,
                                   int packet_len, std::uint64_t recipe_seed,
                                   Algorithm alg, const std::vector<Frame>& fifo,
                                   const std::vector<std::uint8_t>& own_feedback,
                                   EncoderOptions opts) {
    const int n = static_cast<int>(session_sizes.size());
    const int l_bits = packet_len * gf.m();
    ReplayInput in = receiver_reconstruct(fifo, own_feedback, user, n, l_bits);

    Receiver rx(user, gf, session_sizes, packet_len, recipe_seed, alg, std::move(opts));
    std::size_t next_info = 0;
    for (std::size_t t = 0; t < in.log.size(); ++t) {
        if (rx.done()) throw FramingError("log extends past termination");
        const ErasurePattern pat{full_mask(n) & ~in.log[t]};
        const PacketVector* own = nullptr;
        if (own_feedback[t]) own = &in.infos[next_info++];
        rx.replay_slot(pat, own);
    }
    if (!rx.done()) throw FramingError("log ends before termination");

    PrivateDecodeResult out;
    out.packets = rx.decode();
    out.info_slots = static_cast<long>(in.log.size());
    out.feedback_packets = in.feedback_packets;
    return out;
}

}  // namespace bpec
