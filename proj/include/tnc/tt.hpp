#pragma once

// Tensor trains: TT/MPS chains of R_{n-1} x I_n x R_n cores and TT/MPO chains
// of R_{n-1} x I_n x J_n x R_n cores, with boundary ranks R_0 = R_N = 1.
//
// Cores use the library's little-endian layout, so the left unfolding
// (R_{n-1} I_n x R_n, row r + R_{n-1} i) and the right unfolding
// (R_{n-1} x I_n R_n) are free reshapes of the core data.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tnc/linalg.hpp"
#include "tnc/multilinear.hpp"
#include "tnc/tensor.hpp"

namespace tnc {

inline constexpr Index kDefaultDenseCap = Index{1} << 26;

struct TTModel {
    std::vector<DenseTensor> cores;
    // Sites 1..left_orthogonal_through are left-orthogonal.
    int left_orthogonal_through = 0;
    // Sites right_orthogonal_from..N are right-orthogonal; N+1 when none.
    int right_orthogonal_from = 0;

    std::size_t order() const { return cores.size(); }
    Dims dims() const
    {
        Dims d;
        for (const auto& c : cores)
            d.push_back(c.dims()[1]);
        return d;
    }
    // Inner ranks R_1..R_{N-1}.
    std::vector<Index> ranks() const
    {
        std::vector<Index> r;
        for (std::size_t n = 0; n + 1 < cores.size(); ++n)
            r.push_back(cores[n].dims()[2]);
        return r;
    }
};

struct TTMatrixModel {
    std::vector<DenseTensor> cores;

    std::size_t order() const { return cores.size(); }
    Dims row_dims() const
    {
        Dims d;
        for (const auto& c : cores)
            d.push_back(c.dims()[1]);
        return d;
    }
    Dims col_dims() const
    {
        Dims d;
        for (const auto& c : cores)
            d.push_back(c.dims()[2]);
        return d;
    }
    std::vector<Index> ranks() const
    {
        std::vector<Index> r;
        for (std::size_t n = 0; n + 1 < cores.size(); ++n)
            r.push_back(cores[n].dims()[3]);
        return r;
    }
};

namespace detail {

inline void validate_chain(const std::vector<DenseTensor>& cores, std::size_t core_order, const char* kind)
{
    if (cores.empty())
        throw ShapeError(std::string(kind) + " needs at least one core");
    for (std::size_t n = 0; n < cores.size(); ++n) {
        if (cores[n].order() != core_order)
            throw ShapeError(std::string(kind) + " core " + std::to_string(n + 1) + " must have order " +
                             std::to_string(core_order));
        const Index left = cores[n].dims().front();
        const Index right = cores[n].dims().back();
        if (n == 0 && left != 1)
            throw ShapeError(std::string(kind) + " boundary rank R_0 must be 1");
        if (n + 1 == cores.size() && right != 1)
            throw ShapeError(std::string(kind) + " boundary rank R_N must be 1");
        if (n > 0 && cores[n - 1].dims().back() != left)
            throw ShapeError(std::string(kind) + " rank mismatch between cores " + std::to_string(n) + " and " +
                             std::to_string(n + 1));
    }
}

inline Eigen::Map<const Matrix> left_unfolding(const DenseTensor& core)
{
    return core.matrix_view(core.dims()[0] * core.dims()[1]);
}

inline Eigen::Map<const Matrix> right_unfolding(const DenseTensor& core) { return core.matrix_view(core.dims()[0]); }

inline DenseTensor core_from(const Matrix& m, Index r0, Index in, Index r1)
{
    return DenseTensor({r0, in, r1}, std::vector<double>(m.data(), m.data() + m.size()));
}

inline void check_cap(Index entries, Index cap)
{
    if (entries > cap)
        throw CapExceededError("dense materialization of " + std::to_string(entries) + " entries exceeds cap " +
                               std::to_string(cap));
}

} // namespace detail

inline void validate(const TTModel& m) { detail::validate_chain(m.cores, 3, "TT"); }
inline void validate(const TTMatrixModel& m) { detail::validate_chain(m.cores, 4, "TT-matrix"); }

enum class BoundKind { none, eps, cap };

struct SplitInfo {
    Index rank = 0;
    // Frobenius norm of the discarded singular values.
    double discarded = 0.0;
    // Which bound set the rank: none (exact), eps or the rank cap.
    BoundKind active = BoundKind::none;
};

struct TtSvdOptions {
    std::optional<double> eps;
    // Rank caps for R_1..R_{N-1}; a single entry applies to every split.
    // Caps take precedence over eps.
    std::vector<Index> max_ranks;
    bool right_to_left = false;
};

struct TtDecomposition {
    TTModel model;
    std::vector<SplitInfo> splits;
};

namespace detail {

inline Index cap_for(const std::vector<Index>& caps, std::size_t split)
{
    if (caps.empty())
        return 0;
    return caps.size() == 1 ? caps[0] : caps[split];
}

inline void check_tt_options(const TtSvdOptions& opts, std::size_t n_modes)
{
    if (opts.eps && (*opts.eps < 0.0 || *opts.eps >= 1.0))
        throw SpecError("eps must lie in [0, 1)");
    if (!opts.max_ranks.empty() && opts.max_ranks.size() != 1 && opts.max_ranks.size() + 1 != n_modes)
        throw SpecError("rank caps must give one value or one per inner bond (" + std::to_string(n_modes - 1) + ")");
    for (Index r : opts.max_ranks)
        if (r < 1)
            throw SpecError("rank caps must be at least 1");
}

// Truncated split of m with absolute tolerance delta and optional cap.
inline std::pair<Index, SplitInfo> choose_rank(const Vector& s, double delta, Index cap)
{
    const Index full = s.size();
    const Index by_eps = truncation_rank(s, delta);
    Index r = by_eps;
    SplitInfo info;
    if (by_eps < full)
        info.active = BoundKind::eps;
    if (cap > 0 && cap < r) {
        r = cap;
        info.active = BoundKind::cap;
    }
    info.rank = r;
    info.discarded = s.tail(full - r).norm();
    return {r, info};
}

inline TtDecomposition tt_svd_left_to_right(const DenseTensor& t, const TtSvdOptions& opts)
{
    const std::size_t n_modes = t.order();
    const double eps = opts.eps.value_or(0.0);
    const double delta = n_modes > 1 ? eps * frobenius_norm(t) / std::sqrt(static_cast<double>(n_modes - 1)) : 0.0;
    TtDecomposition out;
    std::vector<double> rem(t.data().begin(), t.data().end());
    Index r_prev = 1;
    for (std::size_t n = 0; n + 1 < n_modes; ++n) {
        const Index in = t.dims()[n];
        const Index rows = r_prev * in;
        const Index cols = static_cast<Index>(rem.size()) / rows;
        const SvdResult f = thin_svd(Eigen::Map<const Matrix>(rem.data(), rows, cols));
        auto [r, info] = choose_rank(f.s, delta, cap_for(opts.max_ranks, n));
        // a zero tensor keeps a rank-1 zero chain
        r = std::max<Index>(r, 1);
        info.rank = r;
        const Matrix u = f.U.leftCols(r);
        const Matrix rest = f.s.head(r).asDiagonal() * f.V.leftCols(r).transpose();
        out.model.cores.push_back(core_from(u, r_prev, in, r));
        out.splits.push_back(info);
        rem.assign(rest.data(), rest.data() + rest.size());
        r_prev = u.cols();
    }
    out.model.cores.push_back(DenseTensor({r_prev, t.dims().back(), 1}, std::move(rem)));
    out.model.left_orthogonal_through = static_cast<int>(n_modes) - 1;
    out.model.right_orthogonal_from = static_cast<int>(n_modes) + 1;
    return out;
}

// Swaps the rank modes of every core and reverses the chain.
inline std::vector<DenseTensor> reversed_chain(const std::vector<DenseTensor>& cores)
{
    std::vector<DenseTensor> out;
    const std::vector<int> perm = {3, 2, 1};
    for (auto it = cores.rbegin(); it != cores.rend(); ++it)
        out.push_back(permute_modes(*it, perm));
    return out;
}

} // namespace detail

// TT-SVD: sequential truncated SVDs of the generalized unfoldings. Each split
// discards at most eps ||t|| / sqrt(N-1), so ||t - tt|| <= eps ||t||.
inline TtDecomposition tt_svd(const DenseTensor& t, const TtSvdOptions& opts = {})
{
    detail::check_tt_options(opts, t.order());
    if (!opts.right_to_left)
        return detail::tt_svd_left_to_right(t, opts);
    TtSvdOptions fwd = opts;
    std::reverse(fwd.max_ranks.begin(), fwd.max_ranks.end());
    TtDecomposition rev = detail::tt_svd_left_to_right(reverse_modes(t), fwd);
    TtDecomposition out;
    out.model.cores = detail::reversed_chain(rev.model.cores);
    out.model.left_orthogonal_through = 0;
    out.model.right_orthogonal_from = 2;
    out.splits.assign(rev.splits.rbegin(), rev.splits.rend());
    return out;
}

// Entry via the product of slice matrices G^(1)(i_1) ... G^(N)(i_N).
inline double tt_element(const TTModel& m, std::span<const Index> idx)
{
    validate(m);
    if (idx.size() != m.order())
        throw BoundsError("multi-index length does not match TT order");
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Ones(1);
    for (std::size_t n = 0; n < m.order(); ++n) {
        const auto& c = m.cores[n];
        const Index in = c.dims()[1];
        if (idx[n] < 1 || idx[n] > in)
            throw BoundsError("index " + std::to_string(idx[n]) + " out of range in mode " + std::to_string(n + 1));
        const Index r0 = c.dims()[0];
        const Index r1 = c.dims()[2];
        // slice G(:, i, :) has stride r0 * in between columns
        Eigen::Map<const Matrix, 0, Eigen::OuterStride<>> slice(c.data().data() + (idx[n] - 1) * r0, r0, r1,
                                                                Eigen::OuterStride<>(r0 * in));
        acc = acc * slice;
    }
    return acc(0);
}

// Entry via the explicit sum over all rank indices of the product of core
// entries. Exponential in N; used to cross-check the other forms.
inline double tt_element_scalar(const TTModel& m, std::span<const Index> idx)
{
    validate(m);
    const std::size_t n_modes = m.order();
    std::vector<Index> r(n_modes + 1, 0);
    double total = 0.0;
    while (true) {
        double p = 1.0;
        for (std::size_t n = 0; n < n_modes; ++n)
            p *= m.cores[n].at({r[n] + 1, idx[n], r[n + 1] + 1});
        total += p;
        std::size_t k = 1;
        for (; k < n_modes; ++k) {
            if (++r[k] < m.cores[k - 1].dims()[2])
                break;
            r[k] = 0;
        }
        if (k >= n_modes)
            break;
    }
    return total;
}

// Full tensor by chained mode-(3,1) contractions of the cores.
inline DenseTensor tt_reconstruct(const TTModel& m, Index cap = kDefaultDenseCap)
{
    validate(m);
    const Dims dims = m.dims();
    detail::check_cap(num_elements(dims), cap);
    const std::vector<int> last_a = {0};
    const std::vector<int> first_b = {1};
    DenseTensor acc = m.cores[0];
    for (std::size_t n = 1; n < m.order(); ++n) {
        const int last = static_cast<int>(acc.order());
        acc = contract(acc, m.cores[n], std::span<const int>(&last, 1), first_b);
    }
    return acc.reshaped(dims);
}

// Cores as block matrices (grid R_{n-1} x R_n of I_n x 1 blocks) chained by
// strong Kronecker products; the chain evaluates to the big-endian
// vectorization of the tensor.
struct StrongKronForm {
    std::vector<BlockMatrix> chain;
    Vector x;
};

inline BlockMatrix core_block_matrix(const DenseTensor& core)
{
    const Index r0 = core.dims()[0];
    const Index in = core.dims()[1];
    const Index r1 = core.dims()[2];
    std::vector<Matrix> blocks;
    for (Index a = 0; a < r0; ++a)
        for (Index b = 0; b < r1; ++b) {
            Matrix g(in, 1);
            for (Index i = 0; i < in; ++i)
                g(i, 0) = core[a + r0 * (i + in * b)];
            blocks.push_back(std::move(g));
        }
    return BlockMatrix(r0, r1, std::move(blocks));
}

inline StrongKronForm tt_to_strong_kron(const TTModel& m, Index cap = kDefaultDenseCap)
{
    validate(m);
    detail::check_cap(num_elements(m.dims()), cap);
    StrongKronForm out;
    for (const auto& c : m.cores)
        out.chain.push_back(core_block_matrix(c));
    BlockMatrix acc = out.chain.front();
    for (std::size_t n = 1; n < out.chain.size(); ++n)
        acc = strong_kron(acc, out.chain[n]);
    out.x = acc.block(0, 0).col(0);
    return out;
}

inline Index tt_storage(const TTModel& m)
{
    Index n = 0;
    for (const auto& c : m.cores)
        n += c.size();
    return n;
}

inline Index tt_storage(const TTMatrixModel& m)
{
    Index n = 0;
    for (const auto& c : m.cores)
        n += c.size();
    return n;
}

// Mixed-canonical form around site `center` (1-based): sites before it are
// left-orthogonal, sites after it right-orthogonal. QR factors are absorbed
// into the neighbour toward the center; ranks can only shrink.
inline TTModel tt_orthogonalize(TTModel m, int center)
{
    validate(m);
    const int n_modes = static_cast<int>(m.order());
    if (center < 1 || center > n_modes)
        throw SpecError("center site " + std::to_string(center) + " out of range [1," + std::to_string(n_modes) + "]");
    for (int n = 0; n < center - 1; ++n) {
        auto& c = m.cores[static_cast<std::size_t>(n)];
        const Index r0 = c.dims()[0];
        const Index in = c.dims()[1];
        const QrResult qr = thin_qr(detail::left_unfolding(c));
        auto& next = m.cores[static_cast<std::size_t>(n + 1)];
        const Matrix absorbed = qr.R * detail::right_unfolding(next);
        const Index r1 = qr.Q.cols();
        c = detail::core_from(qr.Q, r0, in, r1);
        next = detail::core_from(absorbed, r1, next.dims()[1], next.dims()[2]);
    }
    for (int n = n_modes - 1; n > center - 1; --n) {
        auto& c = m.cores[static_cast<std::size_t>(n)];
        const Index in = c.dims()[1];
        const Index r1 = c.dims()[2];
        const QrResult qr = thin_qr(detail::right_unfolding(c).transpose());
        auto& prev = m.cores[static_cast<std::size_t>(n - 1)];
        const Matrix absorbed = detail::left_unfolding(prev) * qr.R.transpose();
        const Index r0 = qr.Q.cols();
        const Matrix qt = qr.Q.transpose();
        c = detail::core_from(qt, r0, in, r1);
        prev = detail::core_from(absorbed, prev.dims()[0], prev.dims()[1], r0);
    }
    m.left_orthogonal_through = center - 1;
    m.right_orthogonal_from = center + 1;
    return m;
}

inline double tt_norm(const TTModel& m)
{
    const TTModel o = tt_orthogonalize(m, 1);
    return frobenius_norm(o.cores.front());
}

// Largest deviation from orthonormality of the left unfolding (columns) of a
// core, and of its right unfolding (rows).
inline double left_orthogonality_defect(const DenseTensor& core)
{
    const Matrix l = detail::left_unfolding(core);
    return (l.transpose() * l - Matrix::Identity(l.cols(), l.cols())).cwiseAbs().maxCoeff();
}

inline double right_orthogonality_defect(const DenseTensor& core)
{
    const Matrix r = detail::right_unfolding(core);
    return (r * r.transpose() - Matrix::Identity(r.rows(), r.rows())).cwiseAbs().maxCoeff();
}

struct TtRoundOptions {
    std::optional<double> eps;
    std::vector<Index> max_ranks;
};

struct TtRoundResult {
    TTModel model;
    std::vector<SplitInfo> splits;
};

// TT-rounding: right-orthogonalize, then sweep left to right with truncated
// SVDs of the left unfoldings, per-split budget eps ||m|| / sqrt(N-1).
inline TtRoundResult tt_round(const TTModel& input, const TtRoundOptions& opts = {})
{
    validate(input);
    const std::size_t n_modes = input.order();
    detail::check_tt_options(TtSvdOptions{opts.eps, opts.max_ranks, false}, n_modes);
    TtRoundResult out;
    out.model = tt_orthogonalize(input, 1);
    auto& cores = out.model.cores;
    const double nrm = frobenius_norm(cores.front());
    const double delta =
        n_modes > 1 ? opts.eps.value_or(0.0) * nrm / std::sqrt(static_cast<double>(n_modes - 1)) : 0.0;
    for (std::size_t n = 0; n + 1 < n_modes; ++n) {
        auto& c = cores[n];
        const Index r0 = c.dims()[0];
        const Index in = c.dims()[1];
        const SvdResult f = thin_svd(detail::left_unfolding(c));
        auto [r, info] = detail::choose_rank(f.s, delta, detail::cap_for(opts.max_ranks, n));
        r = std::max<Index>(r, 1);
        info.rank = r;
        const Matrix carry = f.s.head(r).asDiagonal() * f.V.leftCols(r).transpose();
        auto& next = cores[n + 1];
        const Matrix absorbed = carry * detail::right_unfolding(next);
        c = detail::core_from(f.U.leftCols(r), r0, in, r);
        next = detail::core_from(absorbed, r, next.dims()[1], next.dims()[2]);
        out.splits.push_back(info);
    }
    out.model.left_orthogonal_through = static_cast<int>(n_modes) - 1;
    out.model.right_orthogonal_from = static_cast<int>(n_modes) + 1;
    return out;
}

// Mode pairing (row mode, column mode) of a 2N-order tensor, 1-based.
using ModePairs = std::vector<std::pair<int, int>>;

struct TtmDecomposition {
    TTMatrixModel model;
    std::vector<SplitInfo> splits;
};

// TT/MPO via TT-SVD on fused (i_n, j_n) modes. Default pairing is
// (1,2), (3,4), ...
inline TtmDecomposition ttm_svd(const DenseTensor& t, ModePairs pairs = {}, const TtSvdOptions& opts = {})
{
    if (pairs.empty()) {
        if (t.order() % 2 != 0)
            throw SpecError("TT-matrix decomposition needs an even-order tensor or an explicit pairing");
        for (int k = 1; k <= static_cast<int>(t.order()); k += 2)
            pairs.emplace_back(k, k + 1);
    }
    if (pairs.size() * 2 != t.order())
        throw SpecError("mode pairing must cover every mode exactly once");
    std::vector<int> perm;
    for (const auto& [i, j] : pairs) {
        perm.push_back(i);
        perm.push_back(j);
    }
    const DenseTensor p = permute_modes(t, perm);
    Dims fused;
    for (std::size_t k = 0; k < pairs.size(); ++k)
        fused.push_back(p.dims()[2 * k] * p.dims()[2 * k + 1]);
    TtDecomposition d = tt_svd(p.reshaped(fused), opts);
    TtmDecomposition out;
    out.splits = std::move(d.splits);
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const auto& c = d.model.cores[k];
        out.model.cores.push_back(c.reshaped({c.dims()[0], p.dims()[2 * k], p.dims()[2 * k + 1], c.dims()[2]}));
    }
    return out;
}

// Fused-mode TT view of a TT-matrix (each I_n x J_n pair becomes one mode).
inline TTModel fused_view(const TTMatrixModel& m)
{
    validate(m);
    TTModel t;
    for (const auto& c : m.cores)
        t.cores.push_back(c.reshaped({c.dims()[0], c.dims()[1] * c.dims()[2], c.dims()[3]}));
    t.right_orthogonal_from = static_cast<int>(t.cores.size()) + 1;
    return t;
}

// Dense tensor in pair-interleaved mode order (i_1, j_1, i_2, j_2, ...).
inline DenseTensor ttm_reconstruct(const TTMatrixModel& m, Index cap = kDefaultDenseCap)
{
    Dims dims;
    for (const auto& c : m.cores) {
        dims.push_back(c.dims()[1]);
        dims.push_back(c.dims()[2]);
    }
    return tt_reconstruct(fused_view(m), cap).reshaped(dims);
}

// Strong Kronecker form of a TT-matrix: blocks G(r, :, :, r') of size
// I_n x J_n. The chain evaluates to the matrix with big-endian row index over
// (i_1..i_N) and big-endian column index over (j_1..j_N).
inline Matrix ttm_to_strong_kron(const TTMatrixModel& m, Index cap = kDefaultDenseCap)
{
    validate(m);
    detail::check_cap(num_elements(m.row_dims()) * num_elements(m.col_dims()), cap);
    std::optional<BlockMatrix> acc;
    for (const auto& c : m.cores) {
        const Index r0 = c.dims()[0];
        const Index in = c.dims()[1];
        const Index jn = c.dims()[2];
        const Index r1 = c.dims()[3];
        std::vector<Matrix> blocks;
        for (Index a = 0; a < r0; ++a)
            for (Index b = 0; b < r1; ++b) {
                Matrix g(in, jn);
                for (Index j = 0; j < jn; ++j)
                    for (Index i = 0; i < in; ++i)
                        g(i, j) = c[a + r0 * (i + in * (j + jn * b))];
                blocks.push_back(std::move(g));
            }
        BlockMatrix bm(r0, r1, std::move(blocks));
        acc = acc ? strong_kron(*acc, bm) : std::move(bm);
    }
    return acc->block(0, 0);
}

} // namespace tnc
