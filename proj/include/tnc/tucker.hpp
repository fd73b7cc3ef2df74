#pragma once

// Tucker models, HOSVD (exact, rank-truncated or tolerance-truncated),
// all-orthogonality checks, and the large-scale building blocks: factor
// matrices from sliced Gram accumulation, block-wise core products, and
// HOSVD from N subtensors of a low multilinear rank tensor.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tnc/linalg.hpp"
#include "tnc/multilinear.hpp"
#include "tnc/tensor.hpp"

namespace tnc {

struct TuckerModel {
    DenseTensor core;
    // Empty matrix for identity modes.
    std::vector<Matrix> factors;
    std::vector<bool> identity_modes;

    std::size_t order() const { return core.order(); }
    bool is_identity(std::size_t n) const { return n < identity_modes.size() && identity_modes[n]; }
    Dims dims() const
    {
        Dims d;
        for (std::size_t n = 0; n < order(); ++n)
            d.push_back(is_identity(n) ? core.dims()[n] : factors[n].rows());
        return d;
    }
    Dims ranks() const { return core.dims(); }
};

inline void validate(const TuckerModel& m)
{
    if (m.factors.size() != m.core.order())
        throw ShapeError("Tucker model needs one factor slot per core mode");
    if (!m.identity_modes.empty() && m.identity_modes.size() != m.core.order())
        throw ShapeError("identity-mode markers must cover every mode");
    for (std::size_t n = 0; n < m.order(); ++n) {
        if (m.is_identity(n))
            continue;
        if (m.factors[n].cols() != m.core.dims()[n] || m.factors[n].rows() < 1)
            throw ShapeError("Tucker factor " + std::to_string(n + 1) + " has " + std::to_string(m.factors[n].cols()) +
                             " columns, core mode size is " + std::to_string(m.core.dims()[n]));
    }
}

inline DenseTensor tucker_reconstruct(const TuckerModel& m)
{
    validate(m);
    std::vector<std::optional<Matrix>> f(m.order());
    for (std::size_t n = 0; n < m.order(); ++n)
        if (!m.is_identity(n))
            f[n] = m.factors[n];
    return multilinear_product(m.core, f);
}

inline Index tucker_storage(const TuckerModel& m)
{
    Index n = m.core.size();
    for (std::size_t k = 0; k < m.order(); ++k)
        if (!m.is_identity(k))
            n += m.factors[k].size();
    return n;
}

// Core for arbitrary (possibly non-orthogonal) factors: X x_n B^(n)+.
inline DenseTensor tucker_core_from_factors(const DenseTensor& t, const std::vector<Matrix>& factors,
                                            const std::vector<bool>& identity_modes = {})
{
    if (factors.size() != t.order())
        throw ShapeError("need one factor slot per mode");
    std::vector<std::optional<Matrix>> f(t.order());
    for (std::size_t n = 0; n < t.order(); ++n)
        if (!(n < identity_modes.size() && identity_modes[n]))
            f[n] = pinv(factors[n]);
    return multilinear_product(t, f);
}

// Produces an I_n x R_n factor from a mode-n unfolding. The SVD producer is
// the shipped default; constrained component analyses plug in here.
using FactorProducer = std::function<Matrix(const Matrix& unfolding, Index rank)>;

struct HosvdOptions {
    // Per-mode ranks; empty means full (or eps-driven). With eps set they act
    // as caps.
    std::vector<Index> ranks;
    std::optional<double> eps;
    // 1-based modes kept uncompressed (implicit identity factor).
    std::vector<int> identity_modes;
};

struct HosvdResult {
    TuckerModel model;
    // All singular values of every non-identity unfolding.
    std::vector<Vector> singular_values;
};

namespace detail {

// Left singular vectors of m, completed to rank columns if rank exceeds the
// number of singular vectors a thin SVD gives.
inline Matrix leading_left_vectors(const Matrix& m, Index rank, Vector* sigma)
{
    const bool full = rank > std::min(m.rows(), m.cols());
    Eigen::BDCSVD<Matrix> svd(m, full ? Eigen::ComputeFullU : Eigen::ComputeThinU);
    if (sigma)
        *sigma = svd.singularValues();
    Matrix u = svd.matrixU().leftCols(rank);
    fix_column_signs(u);
    return u;
}

} // namespace detail

inline HosvdResult hosvd(const DenseTensor& t, const HosvdOptions& opts = {})
{
    const std::size_t n_modes = t.order();
    if (!opts.ranks.empty() && opts.ranks.size() != n_modes)
        throw SpecError("HOSVD ranks must list every mode");
    if (opts.eps && (*opts.eps < 0.0 || *opts.eps >= 1.0))
        throw SpecError("HOSVD eps must lie in [0, 1)");
    std::vector<bool> identity(n_modes, false);
    for (int m : opts.identity_modes) {
        detail::check_mode(m, n_modes);
        identity[static_cast<std::size_t>(m - 1)] = true;
    }
    for (std::size_t n = 0; n < opts.ranks.size(); ++n) {
        if (opts.ranks[n] < 1 || opts.ranks[n] > t.dims()[n])
            throw SpecError("rank " + std::to_string(opts.ranks[n]) + " of mode " + std::to_string(n + 1) +
                            " must lie in [1, " + std::to_string(t.dims()[n]) + "]");
        if (identity[n] && opts.ranks[n] != t.dims()[n])
            throw SpecError("identity mode " + std::to_string(n + 1) + " requires full rank");
    }
    const auto compressed = static_cast<double>(std::count(identity.begin(), identity.end(), false));
    const double budget = opts.eps && compressed > 0 ? *opts.eps * frobenius_norm(t) / std::sqrt(compressed) : 0.0;

    HosvdResult out;
    out.model.identity_modes = identity;
    out.model.factors.resize(n_modes);
    out.singular_values.resize(n_modes);
    std::vector<std::optional<Matrix>> projections(n_modes);
    for (std::size_t n = 0; n < n_modes; ++n) {
        if (identity[n])
            continue;
        const Matrix xn = unfold(t, static_cast<int>(n + 1));
        Eigen::BDCSVD<Matrix> svd(xn, Eigen::ComputeFullU);
        const Vector& s = svd.singularValues();
        Index rank = opts.ranks.empty() ? t.dims()[n] : opts.ranks[n];
        if (opts.eps)
            rank = std::min(rank, std::max<Index>(1, truncation_rank(s, budget)));
        Matrix u = svd.matrixU().leftCols(rank);
        fix_column_signs(u);
        out.singular_values[n] = s;
        projections[n] = u.transpose();
        out.model.factors[n] = std::move(u);
    }
    out.model.core = multilinear_product(t, projections);
    return out;
}

// Tucker model whose factors come from a pluggable producer and whose core
// uses pseudo-inverses, so non-orthogonal factors are allowed.
inline TuckerModel tucker_with_producer(const DenseTensor& t, const std::vector<Index>& ranks,
                                        const FactorProducer& producer)
{
    if (ranks.size() != t.order())
        throw SpecError("ranks must list every mode");
    TuckerModel m;
    m.identity_modes.assign(t.order(), false);
    for (int n = 1; n <= static_cast<int>(t.order()); ++n)
        m.factors.push_back(producer(unfold(t, n), ranks[static_cast<std::size_t>(n - 1)]));
    m.core = tucker_core_from_factors(t, m.factors);
    return m;
}

inline FactorProducer svd_factor_producer()
{
    return [](const Matrix& unfolding, Index rank) { return detail::leading_left_vectors(unfolding, rank, nullptr); };
}

struct OrthogonalityReport {
    // Per mode: largest |<S_k, S_l>| over k != l.
    std::vector<double> max_off_diagonal;
    // Per mode: Frobenius norms of the slices in index order.
    std::vector<std::vector<double>> slice_norms;
    bool all_orthogonal = true;
    bool pseudo_diagonal = true;
};

inline OrthogonalityReport check_all_orthogonal(const DenseTensor& core, double rel_tol = 1e-10)
{
    OrthogonalityReport rep;
    const double nrm2 = std::pow(frobenius_norm(core), 2);
    const double nrm = std::sqrt(nrm2);
    for (int n = 1; n <= static_cast<int>(core.order()); ++n) {
        const Matrix sn = unfold(core, n);
        const Matrix g = sn * sn.transpose();
        double off = 0.0;
        std::vector<double> norms;
        for (Index k = 0; k < g.rows(); ++k) {
            norms.push_back(std::sqrt(std::max(0.0, g(k, k))));
            for (Index l = 0; l < g.cols(); ++l)
                if (k != l)
                    off = std::max(off, std::abs(g(k, l)));
        }
        if (off > rel_tol * nrm2)
            rep.all_orthogonal = false;
        for (std::size_t k = 1; k < norms.size(); ++k)
            if (norms[k] > norms[k - 1] + rel_tol * nrm)
                rep.pseudo_diagonal = false;
        rep.max_off_diagonal.push_back(off);
        rep.slice_norms.push_back(std::move(norms));
    }
    return rep;
}

// Column slices of a mode-n unfolding, pulled one at a time.
using SliceProvider = std::function<Matrix(Index q)>;

struct GramFactorResult {
    // Eigenvectors of sum_q X_q X_q^T by decreasing eigenvalue.
    Matrix U;
    // Square roots of the eigenvalues (singular values of the unfolding).
    Vector sigma;
    // Numerical rank of the accumulated Gram.
    Index rank = 0;
    // V_q = X_q^T U Sigma^-1 restricted to the first `rank` columns.
    std::vector<Matrix> V;
};

inline GramFactorResult factor_gram_sliced(Index rows, Index num_slices, const SliceProvider& slice,
                                           bool compute_v = false)
{
    if (num_slices < 1)
        throw SpecError("need at least one slice");
    Matrix gram = Matrix::Zero(rows, rows);
    for (Index q = 0; q < num_slices; ++q) {
        const Matrix xq = slice(q);
        if (xq.rows() != rows)
            throw ShapeError("slice " + std::to_string(q) + " has " + std::to_string(xq.rows()) + " rows, expected " +
                             std::to_string(rows));
        gram.selfadjointView<Eigen::Lower>().rankUpdate(xq);
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    GramFactorResult out;
    out.U = es.eigenvectors().rowwise().reverse();
    const Vector w = es.eigenvalues().reverse().cwiseMax(0.0);
    out.sigma = w.cwiseSqrt();
    fix_column_signs(out.U);
    const double wmax = w.size() ? w(0) : 0.0;
    while (wmax > 0.0 && out.rank < w.size() && w(out.rank) > kPinvCutoff * wmax)
        ++out.rank;
    if (compute_v && out.rank > 0) {
        const Matrix scale = out.sigma.head(out.rank).cwiseInverse().asDiagonal();
        for (Index q = 0; q < num_slices; ++q)
            out.V.push_back(slice(q).transpose() * out.U.leftCols(out.rank) * scale);
    }
    return out;
}

// Provider over Q nearly equal column partitions of unfold(t, mode), read
// straight from the canonical layout.
inline SliceProvider unfolding_slices(const DenseTensor& t, int mode, Index num_slices)
{
    detail::check_mode(mode, t.order());
    const Index in = t.dim(mode);
    const auto [left, right] = detail::split_extents(t.dims(), mode);
    const Index cols = left * right;
    if (num_slices < 1 || num_slices > cols)
        throw SpecError("slice count must lie in [1, " + std::to_string(cols) + "]");
    return [&t, in, left, cols, num_slices](Index q) {
        const Index c0 = q * cols / num_slices;
        const Index c1 = (q + 1) * cols / num_slices;
        Matrix xq(in, c1 - c0);
        const double* src = t.data().data();
        for (Index c = c0; c < c1; ++c) {
            const Index l = c % left;
            const Index r = c / left;
            for (Index i = 0; i < in; ++i)
                xq(i, c - c0) = src[l + left * (i + in * r)];
        }
        return xq;
    };
}

// Tensor stored as a grid of sub-blocks. splits[n] holds the block sizes of
// mode n; blocks are ordered little-endian over block coordinates.
struct BlockedTensor {
    std::vector<std::vector<Index>> splits;
    std::vector<DenseTensor> blocks;

    Dims grid() const
    {
        Dims g;
        for (const auto& s : splits)
            g.push_back(static_cast<Index>(s.size()));
        return g;
    }
    const DenseTensor& block(std::span<const Index> coord) const
    {
        MultiIndex one_based(coord.begin(), coord.end());
        for (auto& c : one_based)
            ++c;
        return blocks[static_cast<std::size_t>(linear_index(one_based, grid()))];
    }
};

inline BlockedTensor partition(const DenseTensor& t, const std::vector<std::vector<Index>>& splits)
{
    if (splits.size() != t.order())
        throw SpecError("partition needs block sizes for every mode");
    std::vector<std::vector<Index>> starts(splits.size());
    for (std::size_t n = 0; n < splits.size(); ++n) {
        Index total = 0;
        for (Index s : splits[n]) {
            if (s < 1)
                throw SpecError("block sizes must be positive");
            starts[n].push_back(total);
            total += s;
        }
        if (total != t.dims()[n])
            throw ShapeError("block sizes of mode " + std::to_string(n + 1) + " sum to " + std::to_string(total) +
                             ", mode size is " + std::to_string(t.dims()[n]));
    }
    BlockedTensor out;
    out.splits = splits;
    const Dims grid = out.grid();
    for (Index b = 0; b < num_elements(grid); ++b) {
        const MultiIndex coord = multi_index(b, grid);
        Selection sel(t.order());
        for (std::size_t n = 0; n < t.order(); ++n) {
            const auto k = static_cast<std::size_t>(coord[n] - 1);
            std::vector<Index> idx(static_cast<std::size_t>(splits[n][k]));
            std::iota(idx.begin(), idx.end(), starts[n][k] + 1);
            sel[n] = std::move(idx);
        }
        out.blocks.push_back(gather(t, sel));
    }
    return out;
}

inline DenseTensor assemble(const BlockedTensor& bt)
{
    const Dims grid = bt.grid();
    Dims dims;
    std::vector<std::vector<Index>> starts(bt.splits.size());
    for (std::size_t n = 0; n < bt.splits.size(); ++n) {
        Index total = 0;
        for (Index s : bt.splits[n]) {
            starts[n].push_back(total);
            total += s;
        }
        dims.push_back(total);
    }
    std::vector<double> data(static_cast<std::size_t>(num_elements(dims)));
    std::vector<Index> strides(dims.size());
    Index stride = 1;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        strides[n] = stride;
        stride *= dims[n];
    }
    for (Index b = 0; b < num_elements(grid); ++b) {
        const MultiIndex coord = multi_index(b, grid);
        const DenseTensor& blk = bt.blocks[static_cast<std::size_t>(b)];
        Index base = 0;
        for (std::size_t n = 0; n < dims.size(); ++n)
            base += starts[n][static_cast<std::size_t>(coord[n] - 1)] * strides[n];
        std::vector<Index> zero(dims.size(), 0);
        detail::walk_strided(blk.dims(), strides, zero,
                             [&](Index c, Index o, Index) { data[static_cast<std::size_t>(base + o)] = blk[c]; });
    }
    return DenseTensor(std::move(dims), std::move(data));
}

// Matrix cut into a grid of blocks; block (q, k) has row_splits[q] rows and
// col_splits[k] columns.
struct BlockedMatrix {
    std::vector<Index> row_splits;
    std::vector<Index> col_splits;
    std::vector<Matrix> blocks;

    const Matrix& block(Index q, Index k) const
    {
        return blocks[static_cast<std::size_t>(q * static_cast<Index>(col_splits.size()) + k)];
    }
};

inline BlockedMatrix partition(const Matrix& m, const std::vector<Index>& row_splits, const std::vector<Index>& col_splits)
{
    BlockedMatrix out{row_splits, col_splits, {}};
    Index r0 = 0;
    for (Index rs : row_splits) {
        Index c0 = 0;
        for (Index cs : col_splits) {
            if (r0 + rs > m.rows() || c0 + cs > m.cols())
                throw ShapeError("matrix block grid exceeds matrix shape");
            out.blocks.push_back(m.block(r0, c0, rs, cs));
            c0 += cs;
        }
        if (c0 != m.cols())
            throw ShapeError("column blocks do not cover the matrix");
        r0 += rs;
    }
    if (r0 != m.rows())
        throw ShapeError("row blocks do not cover the matrix");
    return out;
}

// Blocks of X x_n M computed from blocks only:
// G[.., q, ..] = sum_k X[.., k, ..] x_n M[q, k].
// k_order fixes the accumulation order over k (default ascending).
inline BlockedTensor core_blockwise(const BlockedTensor& x, const BlockedMatrix& m, int mode,
                                    std::span<const Index> k_order = {})
{
    detail::check_mode(mode, x.splits.size());
    const auto n = static_cast<std::size_t>(mode - 1);
    if (m.col_splits != x.splits[n])
        throw ShapeError("matrix column blocks do not conform to the tensor's mode-" + std::to_string(mode) +
                         " blocks");
    const auto kn = static_cast<Index>(x.splits[n].size());
    std::vector<Index> order(k_order.begin(), k_order.end());
    if (order.empty()) {
        order.resize(static_cast<std::size_t>(kn));
        std::iota(order.begin(), order.end(), Index{0});
    }
    {
        std::vector<Index> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        for (Index k = 0; k < kn; ++k)
            if (static_cast<Index>(sorted.size()) != kn || sorted[static_cast<std::size_t>(k)] != k)
                throw SpecError("k_order must be a permutation of the mode's block indices");
    }
    BlockedTensor out;
    out.splits = x.splits;
    out.splits[n] = m.row_splits;
    const Dims grid = out.grid();
    for (Index b = 0; b < num_elements(grid); ++b) {
        const MultiIndex coord = multi_index(b, grid);
        std::vector<Index> src(coord.begin(), coord.end());
        for (auto& c : src)
            --c;
        const Index q = src[n];
        std::optional<DenseTensor> acc;
        for (Index k : order) {
            src[n] = k;
            DenseTensor term = mode_n_product(x.block(src), m.block(q, k), mode);
            acc = acc ? *acc + term : std::move(term);
        }
        out.blocks.push_back(std::move(*acc));
    }
    return out;
}

// Per-mode entry access for large tensors held elsewhere; 1-based indices.
using EntryAccessor = std::function<double(const MultiIndex&)>;

struct SubtensorHosvdOptions {
    // Known multilinear rank; empty means detect from the mode-n subtensors.
    std::vector<Index> ranks;
    double rank_tol = 1e-10;
};

namespace detail {

inline DenseTensor gather_from(const Dims& dims, const EntryAccessor& x, const std::vector<std::vector<Index>>& picks,
                               int full_mode)
{
    Dims sub(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k)
        sub[k] = static_cast<int>(k) == full_mode - 1 ? dims[k] : static_cast<Index>(picks[k].size());
    MultiIndex at(dims.size());
    return DenseTensor::generate(sub, [&](const MultiIndex& idx) {
        for (std::size_t k = 0; k < dims.size(); ++k)
            at[k] = static_cast<int>(k) == full_mode - 1 ? idx[k] : picks[k][static_cast<std::size_t>(idx[k] - 1)];
        return x(at);
    });
}

} // namespace detail

// HOSVD of a low multilinear rank tensor from its N mode-n subtensors
// X^(n) (all of mode n, picked indices elsewhere) and their intersection W.
inline TuckerModel hosvd_from_subtensors(const Dims& dims, const EntryAccessor& x,
                                         const std::vector<std::vector<Index>>& picks,
                                         const SubtensorHosvdOptions& opts = {})
{
    check_dims(dims);
    const std::size_t n_modes = dims.size();
    if (picks.size() != n_modes)
        throw SpecError("need picked indices for every mode");
    for (std::size_t n = 0; n < n_modes; ++n) {
        if (picks[n].empty())
            throw SpecError("mode " + std::to_string(n + 1) + " has no picked indices");
        for (Index i : picks[n])
            if (i < 1 || i > dims[n])
                throw BoundsError("picked index " + std::to_string(i) + " out of range in mode " + std::to_string(n + 1));
    }
    if (!opts.ranks.empty() && opts.ranks.size() != n_modes)
        throw SpecError("ranks must list every mode");

    const DenseTensor w = detail::gather_from(dims, x, picks, 0);
    std::vector<Matrix> u_tilde(n_modes);
    std::vector<std::optional<Matrix>> b(n_modes);
    for (std::size_t n = 0; n < n_modes; ++n) {
        const DenseTensor xn = detail::gather_from(dims, x, picks, static_cast<int>(n + 1));
        const SvdResult s = thin_svd(unfold(xn, static_cast<int>(n + 1)));
        const Index rank = opts.ranks.empty() ? numerical_rank(s.s, opts.rank_tol) : opts.ranks[n];
        if (rank < 1)
            throw SingularityError("mode-" + std::to_string(n + 1) + " subtensor is numerically zero");
        if (rank > static_cast<Index>(picks[n].size()))
            throw SingularityError("mode " + std::to_string(n + 1) + " needs at least " + std::to_string(rank) +
                                   " picked indices, got " + std::to_string(picks[n].size()));
        u_tilde[n] = s.U.leftCols(rank);
        Matrix rows(static_cast<Index>(picks[n].size()), rank);
        for (std::size_t p = 0; p < picks[n].size(); ++p)
            rows.row(static_cast<Index>(p)) = u_tilde[n].row(picks[n][p] - 1);
        const Vector sv = thin_svd(rows).s;
        if (sv.size() < rank || sv(rank - 1) <= opts.rank_tol * sv(0))
            throw SingularityError("picked rows of the mode-" + std::to_string(n + 1) +
                                   " basis are rank deficient; the intersection subtensor lacks the tensor's "
                                   "multilinear rank (pick more or different fibers)");
        b[n] = pinv(rows);
    }
    const DenseTensor g = multilinear_product(w, b);
    HosvdResult inner = hosvd(g);
    TuckerModel m;
    m.core = std::move(inner.model.core);
    m.identity_modes.assign(n_modes, false);
    for (std::size_t n = 0; n < n_modes; ++n)
        m.factors.push_back(u_tilde[n] * inner.model.factors[n]);
    return m;
}

inline TuckerModel hosvd_from_subtensors(const DenseTensor& t, const std::vector<std::vector<Index>>& picks,
                                         const SubtensorHosvdOptions& opts = {})
{
    return hosvd_from_subtensors(
        t.dims(), [&t](const MultiIndex& idx) { return t(idx); }, picks, opts);
}

} // namespace tnc
