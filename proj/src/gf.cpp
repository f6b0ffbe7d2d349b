#include "bpec/gf.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace bpec {

namespace {

constexpr std::uint32_t poly_for(int m) {
    switch (m) {
        case 4: return 0x13;
        case 8: return 0x11D;
        case 16: return 0x1100B;
        default: return 0;
    }
}

// Carry-less multiply reduced mod the field polynomial.
std::uint32_t clmul_mod(std::uint32_t a, std::uint32_t b, int m, std::uint32_t poly) {
    std::uint32_t acc = 0;
    while (b) {
        if (b & 1u) acc ^= a;
        b >>= 1;
        a <<= 1;
        if (a & (1u << m)) a ^= poly;
    }
    return acc;
}

}  // namespace

Gf::Gf(int m) : m_(m), q_(1u << m), gen_(0) {
    const std::uint32_t poly = poly_for(m);
    if (poly == 0) throw std::invalid_argument("field exponent must be 4, 8 or 16");

    exp_.assign(2 * (q_ - 1), 0);
    log_.assign(q_, 0);

    for (std::uint32_t g = 2; g < q_; ++g) {
        std::uint32_t x = 1;
        bool full_period = true;
        for (std::uint32_t k = 0; k < q_ - 1; ++k) {
            if (x == 0 || (x == 1 && k > 0)) {
                full_period = false;
                break;
            }
            exp_[k] = fe(x);
            log_[x] = k;
            x = clmul_mod(x, g, m, poly);
        }
        if (full_period && x == 1) {
            gen_ = fe(g);
            break;
        }
    }
    if (gen_ == 0) throw std::logic_error("no primitive element found; bad field polynomial");
    for (std::uint32_t k = 0; k < q_ - 1; ++k) exp_[k + q_ - 1] = exp_[k];
}

const Gf& Gf::get(int m) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Gf>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it == cache.end()) it = cache.emplace(m, std::make_unique<Gf>(m)).first;
    return *it->second;
}

void axpy(const Gf& gf, fe a, const std::vector<fe>& x, std::vector<fe>& y) {
    assert(x.size() == y.size());
    if (a == 0) return;
    for (size_t k = 0; k < x.size(); ++k) y[k] ^= gf.mul(a, x[k]);
}

int rank(const Gf& gf, const std::vector<CoeffVector>& rows) {
    if (rows.empty()) return 0;
    std::vector<CoeffVector> a = rows;
    const size_t d = a[0].size();
    size_t r = 0;
    for (size_t col = 0; col < d && r < a.size(); ++col) {
        size_t pivot = r;
        while (pivot < a.size() && a[pivot][col] == 0) ++pivot;
        if (pivot == a.size()) continue;
        std::swap(a[r], a[pivot]);
        const fe inv = gf.inv(a[r][col]);
        for (size_t i = r + 1; i < a.size(); ++i) {
            if (a[i][col] == 0) continue;
            const fe factor = gf.mul(a[i][col], inv);
            for (size_t k = col; k < d; ++k) a[i][k] ^= gf.mul(factor, a[r][k]);
        }
        ++r;
    }
    return int(r);
}

bool is_basis_after_swap(const Gf& gf, const std::vector<CoeffVector>& basis,
                         const CoeffVector& remove, const CoeffVector& add) {
    auto it = std::find(basis.begin(), basis.end(), remove);
    if (it == basis.end()) throw std::invalid_argument("swap target not in basis");
    std::vector<CoeffVector> swapped;
    swapped.reserve(basis.size());
    for (auto jt = basis.begin(); jt != basis.end(); ++jt)
        if (jt != it) swapped.push_back(*jt);
    swapped.push_back(add);
    return rank(gf, swapped) == int(basis.size());
}

std::vector<PacketVector> solve_linear_system(
    const Gf& gf, const std::vector<std::pair<CoeffVector, PacketVector>>& equations) {
    const size_t d = equations.empty() ? 0 : equations[0].first.size();
    if (equations.size() != d)
        throw std::invalid_argument("need exactly as many equations as unknowns");
    if (d == 0) return {};
    const size_t p = equations[0].second.size();

    std::vector<CoeffVector> a(d);
    std::vector<PacketVector> rhs(d);
    for (size_t i = 0; i < d; ++i) {
        a[i] = equations[i].first;
        rhs[i] = equations[i].second;
        if (a[i].size() != d || rhs[i].size() != p)
            throw std::invalid_argument("ragged equation system");
    }

    // Gauss-Jordan; pivot_row[c] = row whose pivot lives in column c.
    std::vector<size_t> pivot_row(d, size_t(-1));
    size_t r = 0;
    for (size_t col = 0; col < d && r < d; ++col) {
        size_t pivot = r;
        while (pivot < d && a[pivot][col] == 0) ++pivot;
        if (pivot == d) continue;
        std::swap(a[r], a[pivot]);
        std::swap(rhs[r], rhs[pivot]);
        const fe inv = gf.inv(a[r][col]);
        for (size_t k = 0; k < d; ++k) a[r][k] = gf.mul(a[r][k], inv);
        for (size_t k = 0; k < p; ++k) rhs[r][k] = gf.mul(rhs[r][k], inv);
        for (size_t i = 0; i < d; ++i) {
            if (i == r || a[i][col] == 0) continue;
            const fe factor = a[i][col];
            for (size_t k = 0; k < d; ++k) a[i][k] ^= gf.mul(factor, a[r][k]);
            for (size_t k = 0; k < p; ++k) rhs[i][k] ^= gf.mul(factor, rhs[r][k]);
        }
        pivot_row[col] = r;
        ++r;
    }
    if (r < d) throw SingularMatrix("coefficient matrix is rank deficient");

    std::vector<PacketVector> out(d);
    for (size_t c = 0; c < d; ++c) out[c] = rhs[pivot_row[c]];
    return out;
}

std::vector<CoeffVector> expand_over_basis(const Gf& gf,
                                           const std::vector<CoeffVector>& basis,
                                           const std::vector<CoeffVector>& targets) {
    const size_t d = basis.size();
    if (d == 0) return std::vector<CoeffVector>(targets.size());
    if (basis[0].size() != d)
        throw std::invalid_argument("basis must be square to expand over");
    const size_t t = targets.size();

    // Rows carry [U | T] with basis vectors as the left columns.
    std::vector<std::vector<fe>> a(d, std::vector<fe>(d + t, 0));
    for (size_t c = 0; c < d; ++c) {
        if (basis[c].size() != d) throw std::invalid_argument("ragged basis");
        for (size_t r0 = 0; r0 < d; ++r0) a[r0][c] = basis[c][r0];
    }
    for (size_t j = 0; j < t; ++j) {
        if (targets[j].size() != d) throw std::invalid_argument("ragged target");
        for (size_t r0 = 0; r0 < d; ++r0) a[r0][d + j] = targets[j][r0];
    }

    std::vector<size_t> pivot_row(d, size_t(-1));
    size_t r = 0;
    for (size_t col = 0; col < d && r < d; ++col) {
        size_t pivot = r;
        while (pivot < d && a[pivot][col] == 0) ++pivot;
        if (pivot == d) continue;
        std::swap(a[r], a[pivot]);
        const fe inv = gf.inv(a[r][col]);
        for (size_t k = col; k < d + t; ++k) a[r][k] = gf.mul(a[r][k], inv);
        for (size_t i = 0; i < d; ++i) {
            if (i == r || a[i][col] == 0) continue;
            const fe factor = a[i][col];
            for (size_t k = col; k < d + t; ++k) a[i][k] ^= gf.mul(factor, a[r][k]);
        }
        pivot_row[col] = r;
        ++r;
    }
    if (r < d) throw SingularMatrix("basis matrix is singular");

    std::vector<CoeffVector> out(t, CoeffVector(d, 0));
    for (size_t j = 0; j < t; ++j)
        for (size_t c = 0; c < d; ++c) out[j][c] = a[pivot_row[c]][d + j];
    return out;
}

}  // namespace bpec
