#pragma once

// Shared fixtures and brute-force oracles. Oracles here avoid the library's
// layout helpers and recompute everything from explicit index loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "tnc/tnc.hpp"

namespace tnc::testkit {

inline double max_abs_diff(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        return INFINITY;
    return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

inline double max_abs_diff(const DenseTensor& a, const DenseTensor& b)
{
    if (a.dims() != b.dims())
        return INFINITY;
    double m = 0.0;
    for (Index k = 0; k < a.size(); ++k)
        m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

// Visits every 1-based multi-index of dims with the first index fastest.
template <class F>
void for_each_index(const Dims& dims, F&& f)
{
    MultiIndex idx(dims.size(), 1);
    const Index total = num_elements(dims);
    for (Index c = 0; c < total; ++c) {
        f(static_cast<const MultiIndex&>(idx));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (++idx[k] <= dims[k])
                break;
            idx[k] = 1;
        }
    }
}

// Little-endian offset computed as a Horner sum from the last mode.
inline Index naive_offset(const MultiIndex& idx, const Dims& dims)
{
    Index off = 0;
    for (std::size_t k = dims.size(); k-- > 0;)
        off = off * dims[k] + (idx[k] - 1);
    return off;
}

// Mode-n unfolding with the column index running over the remaining modes,
// earliest mode fastest.
inline Matrix naive_unfold(const DenseTensor& t, int mode)
{
    const auto n = static_cast<std::size_t>(mode - 1);
    const Index rows = t.dims()[n];
    Matrix out(rows, t.size() / rows);
    for_each_index(t.dims(), [&](const MultiIndex& idx) {
        Index col = 0;
        Index stride = 1;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (k == n)
                continue;
            col += (idx[k] - 1) * stride;
            stride *= t.dims()[k];
        }
        out(idx[n] - 1, col) = t(idx);
    });
    return out;
}

inline DenseTensor naive_mode_product(const DenseTensor& t, const Matrix& b, int mode)
{
    const auto n = static_cast<std::size_t>(mode - 1);
    Dims out_dims = t.dims();
    out_dims[n] = b.rows();
    return DenseTensor::generate(out_dims, [&](const MultiIndex& idx) {
        MultiIndex src = idx;
        double s = 0.0;
        for (Index i = 1; i <= t.dims()[n]; ++i) {
            src[n] = i;
            s += b(idx[n] - 1, i - 1) * t(src);
        }
        return s;
    });
}

// Big-endian vectorization from explicit index loops (last index fastest).
inline Vector naive_big_endian_vec(const DenseTensor& t)
{
    Vector v(t.size());
    for_each_index(t.dims(), [&](const MultiIndex& idx) {
        Index off = 0;
        for (std::size_t k = 0; k < idx.size(); ++k)
            off = off * t.dims()[k] + (idx[k] - 1);
        v(off) = t(idx);
    });
    return v;
}

// Sum of outer products of factor columns, built entrywise.
inline DenseTensor naive_cp(const std::vector<Matrix>& f, const Vector& w)
{
    Dims dims;
    for (const auto& m : f)
        dims.push_back(m.rows());
    return DenseTensor::generate(dims, [&](const MultiIndex& idx) {
        double s = 0.0;
        for (Index r = 0; r < w.size(); ++r) {
            double p = w(r);
            for (std::size_t n = 0; n < f.size(); ++n)
                p *= f[n](idx[n] - 1, r);
            s += p;
        }
        return s;
    });
}

// Best average over column permutations of prod_n |cos(a_r^(n), b_pi(r)^(n))|.
inline double factor_match_score(const std::vector<Matrix>& a, const std::vector<Matrix>& b)
{
    const Index r = a.front().cols();
    Matrix score = Matrix::Ones(r, r);
    for (std::size_t n = 0; n < a.size(); ++n)
        for (Index i = 0; i < r; ++i)
            for (Index j = 0; j < r; ++j) {
                const double den = a[n].col(i).norm() * b[n].col(j).norm();
                score(i, j) *= den > 0.0 ? std::abs(a[n].col(i).dot(b[n].col(j))) / den : 0.0;
            }
    std::vector<Index> perm(static_cast<std::size_t>(r));
    std::iota(perm.begin(), perm.end(), Index{0});
    double best = 0.0;
    do {
        double s = 0.0;
        for (Index i = 0; i < r; ++i)
            s += score(i, perm[static_cast<std::size_t>(i)]);
        best = std::max(best, s / static_cast<double>(r));
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

// Tensor of exact multilinear rank `ranks` (generic random core and factors).
inline DenseTensor low_multilinear_rank(const Dims& dims, const Dims& ranks, std::uint64_t seed)
{
    Rng rng(seed);
    DenseTensor core = rng.tensor(ranks);
    for (std::size_t n = 0; n < dims.size(); ++n)
        core = naive_mode_product(core, rng.matrix(dims[n], ranks[n]), static_cast<int>(n + 1));
    return core;
}

inline DenseTensor tt_fixture(std::uint64_t seed) { return tt_reconstruct(random_tt({6, 6, 6, 6}, {3, 4, 5}, seed)); }

// Zero-pads every inner bond of a TT model to twice its rank.
inline TTModel pad_ranks(const TTModel& m)
{
    TTModel out;
    const std::size_t n_modes = m.order();
    for (std::size_t n = 0; n < n_modes; ++n) {
        const auto& c = m.cores[n];
        const Index r0 = c.dims()[0];
        const Index in = c.dims()[1];
        const Index r1 = c.dims()[2];
        const Index p0 = n == 0 ? 1 : 2 * r0;
        const Index p1 = n + 1 == n_modes ? 1 : 2 * r1;
        out.cores.push_back(DenseTensor::generate({p0, in, p1}, [&](const MultiIndex& idx) {
            return idx[0] <= r0 && idx[2] <= r1 ? c.at({idx[0], idx[1], idx[2]}) : 0.0;
        }));
    }
    out.right_orthogonal_from = static_cast<int>(n_modes) + 1;
    return out;
}

inline Vector geometric(Index length, double ratio)
{
    Vector v(length);
    double x = 1.0;
    for (Index i = 0; i < length; ++i) {
        v(i) = x;
        x *= ratio;
    }
    return v;
}

} // namespace tnc::testkit
