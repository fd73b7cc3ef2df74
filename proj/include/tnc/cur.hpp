#pragma once

// CUR skeleton decomposition of matrices and the fiber sampling Tucker
// decomposition (FSTD) of tensors, with greedy max-modulus fiber selection
// by rank-1 cross deflation.
//
// Row, column and fiber indices are 1-based.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tnc/linalg.hpp"
#include "tnc/multilinear.hpp"
#include "tnc/tensor.hpp"
#include "tnc/tucker.hpp"

namespace tnc {

enum class CurCore { pseudo_inverse_w, least_squares };

struct CURModel {
    std::vector<Index> row_idx;
    std::vector<Index> col_idx;
    Matrix C;
    Matrix U;
    Matrix R;
    // W had singular values below the pseudo-inverse cutoff.
    bool w_truncated = false;

    Matrix reconstruct() const { return C * U * R; }
};

namespace detail {

inline void check_index_list(const std::vector<Index>& idx, Index extent, const char* what)
{
    if (idx.empty())
        throw SpecError(std::string("empty ") + what + " index list");
    std::vector<char> seen(static_cast<std::size_t>(extent), 0);
    for (Index i : idx) {
        if (i < 1 || i > extent)
            throw BoundsError(std::string(what) + " index " + std::to_string(i) + " out of range [1," +
                              std::to_string(extent) + "]");
        if (seen[static_cast<std::size_t>(i - 1)]++)
            throw SpecError(std::string("duplicate ") + what + " index " + std::to_string(i));
    }
}

} // namespace detail

inline CURModel cur_decompose(const Matrix& x, const std::vector<Index>& row_idx, const std::vector<Index>& col_idx,
                              CurCore core = CurCore::pseudo_inverse_w)
{
    detail::check_index_list(row_idx, x.rows(), "row");
    detail::check_index_list(col_idx, x.cols(), "column");
    CURModel m;
    m.row_idx = row_idx;
    m.col_idx = col_idx;
    m.C.resize(x.rows(), static_cast<Index>(col_idx.size()));
    m.R.resize(static_cast<Index>(row_idx.size()), x.cols());
    for (std::size_t j = 0; j < col_idx.size(); ++j)
        m.C.col(static_cast<Index>(j)) = x.col(col_idx[j] - 1);
    for (std::size_t i = 0; i < row_idx.size(); ++i)
        m.R.row(static_cast<Index>(i)) = x.row(row_idx[i] - 1);
    if (core == CurCore::pseudo_inverse_w) {
        Matrix w(static_cast<Index>(row_idx.size()), static_cast<Index>(col_idx.size()));
        for (std::size_t i = 0; i < row_idx.size(); ++i)
            for (std::size_t j = 0; j < col_idx.size(); ++j)
                w(static_cast<Index>(i), static_cast<Index>(j)) = x(row_idx[i] - 1, col_idx[j] - 1);
        PinvResult p = pinv_with_info(w);
        m.U = std::move(p.pinv);
        m.w_truncated = p.truncated;
    } else {
        m.U = pinv(m.C) * x * pinv(m.R);
    }
    return m;
}

struct FiberSelectOptions {
    std::uint64_t seed = 0;
    // Full passes over all modes in the alternating search for each pivot.
    int alternations = 2;
    // Pivots whose magnitude falls to zero_tol times the first pivot end the
    // selection.
    double zero_tol = 1e-12;
};

struct FiberSelection {
    std::vector<std::vector<Index>> indices;
    // Residual vanished (or no further pivot could extend the lists) before
    // every quota was met.
    bool early_stop = false;
    Index pivots = 0;
    // Number of tensor entries read.
    Index entries_read = 0;
};

// Greedy max-modulus selection: each pivot is found by alternating searches
// along fibers of the current residual, its coordinates are appended to the
// mode lists, and the residual is deflated by the rank-1 cross through it.
// Modes whose list is not yet full only search indices not already listed.
inline FiberSelection select_fibers_maxmod(const Dims& dims, const EntryAccessor& x, const std::vector<Index>& counts,
                                           const FiberSelectOptions& opts = {})
{
    check_dims(dims);
    const std::size_t n_modes = dims.size();
    if (counts.size() != n_modes)
        throw SpecError("fiber counts must list every mode");
    for (std::size_t n = 0; n < n_modes; ++n)
        if (counts[n] < 1 || counts[n] > dims[n])
            throw SpecError("fiber count of mode " + std::to_string(n + 1) + " must lie in [1, " +
                            std::to_string(dims[n]) + "]");

    struct Cross {
        std::vector<Vector> fibers;
        double scale;
    };
    std::vector<Cross> crosses;
    FiberSelection sel;
    sel.indices.resize(n_modes);
    std::vector<std::vector<char>> listed(n_modes);
    for (std::size_t n = 0; n < n_modes; ++n)
        listed[n].assign(static_cast<std::size_t>(dims[n]), 0);

    auto residual = [&](const MultiIndex& idx) {
        ++sel.entries_read;
        double v = x(idx);
        for (const auto& c : crosses) {
            double p = c.scale;
            for (std::size_t n = 0; n < n_modes; ++n)
                p *= c.fibers[n](idx[n] - 1);
            v -= p;
        }
        return v;
    };
    auto fiber = [&](MultiIndex idx, std::size_t n) {
        Vector f(dims[n]);
        for (Index i = 1; i <= dims[n]; ++i) {
            idx[n] = i;
            f(i - 1) = residual(idx);
        }
        return f;
    };
    auto full = [&](std::size_t n) { return static_cast<Index>(sel.indices[n].size()) >= counts[n]; };
    auto all_full = [&] {
        for (std::size_t n = 0; n < n_modes; ++n)
            if (!full(n))
                return false;
        return true;
    };

    std::mt19937_64 rng(opts.seed);
    double first_pivot = 0.0;
    Index max_pivots = 0;
    for (Index c : counts)
        max_pivots += c;
    while (!all_full() && sel.pivots < max_pivots) {
        MultiIndex point(n_modes);
        for (std::size_t n = 0; n < n_modes; ++n) {
            if (full(n)) {
                point[n] = std::uniform_int_distribution<Index>(1, dims[n])(rng);
                continue;
            }
            do
                point[n] = std::uniform_int_distribution<Index>(1, dims[n])(rng);
            while (listed[n][static_cast<std::size_t>(point[n] - 1)]);
        }
        double best = 0.0;
        for (int pass = 0; pass < opts.alternations; ++pass)
            for (std::size_t n = 0; n < n_modes; ++n) {
                const Vector f = fiber(point, n);
                Index arg = -1;
                double val = -1.0;
                for (Index i = 0; i < f.size(); ++i) {
                    if (!full(n) && listed[n][static_cast<std::size_t>(i)])
                        continue;
                    if (std::abs(f(i)) > val) {
                        val = std::abs(f(i));
                        arg = i;
                    }
                }
                point[n] = arg + 1;
                best = val;
            }
        if (sel.pivots == 0)
            first_pivot = best;
        if (best == 0.0 || best <= opts.zero_tol * first_pivot) {
            sel.early_stop = true;
            break;
        }
        Cross c;
        const double pivot = residual(point);
        for (std::size_t n = 0; n < n_modes; ++n)
            c.fibers.push_back(fiber(point, n));
        c.scale = 1.0 / std::pow(pivot, static_cast<double>(n_modes - 1));
        crosses.push_back(std::move(c));
        ++sel.pivots;
        for (std::size_t n = 0; n < n_modes; ++n) {
            auto& seen = listed[n][static_cast<std::size_t>(point[n] - 1)];
            if (!full(n) && !seen) {
                seen = 1;
                sel.indices[n].push_back(point[n]);
            }
        }
    }
    if (!all_full())
        sel.early_stop = true;
    return sel;
}

inline FiberSelection select_fibers_maxmod(const DenseTensor& t, const std::vector<Index>& counts,
                                           const FiberSelectOptions& opts = {})
{
    return select_fibers_maxmod(
        t.dims(), [&t](const MultiIndex& idx) { return t(idx); }, counts, opts);
}

struct FSTDModel {
    std::vector<std::vector<Index>> indices;
    // Intersection subtensor, P_1 x ... x P_N.
    DenseTensor W;
    // Fiber matrices C^(n), I_n x prod_{k != n} P_k; columns follow the
    // little-endian combination of the other modes' selected indices.
    std::vector<Matrix> fibers;
    // Core [[W; W_(1)+, ..., W_(N)+]].
    DenseTensor core;
    // Equivalent Tucker form [[W; C^(1) W_(1)+, ..., C^(N) W_(N)+]].
    TuckerModel tucker;
    bool w_truncated = false;
};

inline FSTDModel fstd(const Dims& dims, const EntryAccessor& x, const std::vector<std::vector<Index>>& indices)
{
    check_dims(dims);
    const std::size_t n_modes = dims.size();
    if (n_modes < 2)
        throw SpecError("FSTD needs a tensor of order at least 2");
    if (indices.size() != n_modes)
        throw SpecError("FSTD needs index lists for every mode");
    for (std::size_t n = 0; n < n_modes; ++n)
        detail::check_index_list(indices[n], dims[n], "fiber");

    FSTDModel m;
    m.indices = indices;
    m.W = detail::gather_from(dims, x, indices, 0);
    std::vector<std::optional<Matrix>> w_pinv(n_modes);
    m.tucker.core = m.W;
    m.tucker.identity_modes.assign(n_modes, false);
    for (std::size_t n = 0; n < n_modes; ++n) {
        const int mode = static_cast<int>(n + 1);
        const DenseTensor xn = detail::gather_from(dims, x, indices, mode);
        m.fibers.push_back(unfold(xn, mode));
        PinvResult p = pinv_with_info(unfold(m.W, mode));
        m.w_truncated = m.w_truncated || p.truncated;
        m.tucker.factors.push_back(m.fibers.back() * p.pinv);
        w_pinv[n] = std::move(p.pinv);
    }
    m.core = multilinear_product(m.W, w_pinv);
    return m;
}

inline FSTDModel fstd(const DenseTensor& t, const std::vector<std::vector<Index>>& indices)
{
    return fstd(
        t.dims(), [&t](const MultiIndex& idx) { return t(idx); }, indices);
}

struct FstdResult {
    FSTDModel model;
    FiberSelection selection;
};

// Selects fibers greedily, then builds the FSTD from them.
inline FstdResult fstd(const DenseTensor& t, const std::vector<Index>& counts, const FiberSelectOptions& opts = {})
{
    FiberSelection sel = select_fibers_maxmod(t, counts, opts);
    for (std::size_t n = 0; n < sel.indices.size(); ++n)
        if (sel.indices[n].empty())
            throw SingularityError("fiber selection found no nonzero pivot; tensor is numerically zero");
    FSTDModel m = fstd(t, sel.indices);
    return {std::move(m), std::move(sel)};
}

// Reconstruction from the fiber form U x_1 C^(1) ... x_N C^(N).
inline DenseTensor fstd_reconstruct(const FSTDModel& m)
{
    std::vector<std::optional<Matrix>> f(m.fibers.begin(), m.fibers.end());
    return multilinear_product(m.core, f);
}

} // namespace tnc
