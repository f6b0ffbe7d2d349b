#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "bpec/errors.hpp"

namespace bpec {

using fe = std::uint16_t;

// One session packet's decomposition coefficients over a user's unknowns
// (length |K_i|), and a payload (length P). Same representation, different
// roles.
using CoeffVector = std::vector<fe>;
using PacketVector = std::vector<fe>;

// GF(2^m) for m in {4, 8, 16} via log/exp tables. Fixed irreducible
// polynomials: x^4+x+1 (0x13), x^8+x^4+x^3+x^2+1 (0x11D),
// x^16+x^12+x^3+x+1 (0x1100B). The generator is the smallest element with
// full multiplicative order, computed once and asserted at construction.
class Gf {
  public:
    explicit Gf(int m);

    int m() const { return m_; }
    std::uint32_t q() const { return q_; }
    fe generator() const { return gen_; }

    static fe add(fe a, fe b) { return a ^ b; }

    fe mul(fe a, fe b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    fe inv(fe a) const {
        if (a == 0) throw SingularMatrix("inverse of zero");
        return exp_[q_ - 1 - log_[a]];
    }

    fe div(fe a, fe b) const { return mul(a, inv(b)); }

    // Shared singletons; tables built once per m.
    static const Gf& get(int m);

  private:
    int m_;
    std::uint32_t q_;
    fe gen_;
    std::vector<fe> exp_;        // size 2(q-1): wrap-free product lookup
    std::vector<std::uint32_t> log_;  // size q; log_[0] unused
};

// y += a*x (componentwise over GF(2^m)).
void axpy(const Gf& gf, fe a, const std::vector<fe>& x, std::vector<fe>& y);

// Rank of the row set over GF(2^m). Rows may be empty (rank 0).
int rank(const Gf& gf, const std::vector<CoeffVector>& rows);

// True iff (basis \ {remove}) u {add} spans the same dimension as `basis`.
// `remove` is located by value; throws std::invalid_argument if absent.
bool is_basis_after_swap(const Gf& gf, const std::vector<CoeffVector>& basis,
                         const CoeffVector& remove, const CoeffVector& add);

// Solves the square system given as (coefficient row, right-hand side)
// pairs; throws SingularMatrix if the coefficient matrix is not full rank.
std::vector<PacketVector> solve_linear_system(
    const Gf& gf, const std::vector<std::pair<CoeffVector, PacketVector>>& equations);

// Coordinates of each target in the given basis (basis vectors are the
// columns). Throws SingularMatrix if the basis matrix is singular.
// Used by the recipe-acceptance fast path: the acceptance condition for a
// user reduces to "the b̂ coordinate of the combined vector is nonzero".
std::vector<CoeffVector> expand_over_basis(const Gf& gf,
                                           const std::vector<CoeffVector>& basis,
                                           const std::vector<CoeffVector>& targets);

}  // namespace bpec
