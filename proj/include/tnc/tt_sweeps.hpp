#pragma once

// ALS (one-site) and MALS/DMRG (two-site) sweeps approximating a dense
// tensor in TT format. Interfaces to the left of the active site are built
// from left-orthogonal cores and to the right from right-orthogonal cores,
// so the local optimum is a plain projection of the data.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tnc/linalg.hpp"
#include "tnc/tensor.hpp"
#include "tnc/tt.hpp"

namespace tnc {

struct TtSweepOptions {
    int max_sweeps = 10;
    // Stop once a full sweep changes the residual by less than this.
    double tol = 1e-12;
    std::uint64_t seed = 0;
    // MALS only: cap on every bond rank (0 = none).
    Index max_rank = 0;
};

struct TtSweepResult {
    TTModel model;
    // Relative residual after every half-sweep.
    std::vector<double> residuals;
    int sweeps = 0;
    bool converged = false;
};

namespace detail {

// Slice G(:, i, :) of a 3rd-order core (0-based i).
inline Matrix core_slice(const DenseTensor& core, Index i)
{
    const Index r0 = core.dims()[0];
    const Index in = core.dims()[1];
    const Index r1 = core.dims()[2];
    return Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>(core.data().data() + i * r0, r0, r1,
                                                             Eigen::OuterStride<>(r0 * in));
}

// Left interface through `core`: rows p + P i, columns R_n.
inline Matrix extend_left(const Matrix& phi, const DenseTensor& core)
{
    const Index p = phi.rows();
    const Index in = core.dims()[1];
    Matrix out(p * in, core.dims()[2]);
    for (Index i = 0; i < in; ++i)
        out.middleRows(i * p, p) = phi * core_slice(core, i);
    return out;
}

// Right interface (transposed) through `core`: rows i + I q, columns R_{n-1}.
inline Matrix extend_right(const Matrix& psi_t, const DenseTensor& core)
{
    const Index q = psi_t.rows();
    const Index in = core.dims()[1];
    Matrix out(q * in, core.dims()[0]);
    for (Index i = 0; i < in; ++i) {
        const Matrix block = psi_t * core_slice(core, i).transpose();
        for (Index k = 0; k < q; ++k)
            out.row(i + in * k) = block.row(k);
    }
    return out;
}

inline std::vector<Matrix> left_interfaces(const std::vector<DenseTensor>& cores)
{
    std::vector<Matrix> phi(cores.size());
    phi[0] = Matrix::Ones(1, 1);
    for (std::size_t n = 1; n < cores.size(); ++n)
        phi[n] = extend_left(phi[n - 1], cores[n - 1]);
    return phi;
}

inline std::vector<Matrix> right_interfaces(const std::vector<DenseTensor>& cores)
{
    const std::size_t n_modes = cores.size();
    std::vector<Matrix> psi(n_modes);
    psi[n_modes - 1] = Matrix::Ones(1, 1);
    for (std::size_t n = n_modes - 1; n-- > 0;)
        psi[n] = extend_right(psi[n + 1], cores[n + 1]);
    return psi;
}

// Phi^T X Psi^T for the sites first..last, as (R_{first-1} prod I) x R_last.
inline Matrix project(const DenseTensor& t, const Matrix& phi, const Matrix& psi_t)
{
    const Index p = phi.rows();
    const Index cols = t.size() / p;
    const Matrix left = phi.transpose() * Eigen::Map<const Matrix>(t.data().data(), p, cols);
    const Index q = psi_t.rows();
    return Eigen::Map<const Matrix>(left.data(), left.size() / q, q) * psi_t;
}

inline TTModel random_tt(const Dims& dims, const std::vector<Index>& ranks, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    TTModel m;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        const Index r0 = n == 0 ? 1 : ranks[n - 1];
        const Index r1 = n + 1 == dims.size() ? 1 : ranks[n];
        std::vector<double> v(static_cast<std::size_t>(r0 * dims[n] * r1));
        for (auto& x : v)
            x = gauss(rng);
        m.cores.emplace_back(Dims{r0, dims[n], r1}, std::move(v));
    }
    m.right_orthogonal_from = static_cast<int>(dims.size()) + 1;
    return m;
}

inline double tt_residual(const DenseTensor& t, const TTModel& m, double norm_t)
{
    return frobenius_norm(t - tt_reconstruct(m)) / norm_t;
}

} // namespace detail

// One-site ALS with fixed ranks R_1..R_{N-1}.
inline TtSweepResult tt_als(const DenseTensor& t, const std::vector<Index>& ranks, const TtSweepOptions& opts = {})
{
    const std::size_t n_modes = t.order();
    const Dims& dims = t.dims();
    if (ranks.size() + 1 != n_modes)
        throw SpecError("ALS needs " + std::to_string(n_modes - 1) + " inner ranks");
    Index prefix = 1;
    Index suffix = num_elements(dims);
    for (std::size_t n = 0; n + 1 < n_modes; ++n) {
        prefix *= dims[n];
        suffix /= dims[n];
        if (ranks[n] < 1 || ranks[n] > std::min(prefix, suffix))
            throw SpecError("rank " + std::to_string(ranks[n]) + " at bond " + std::to_string(n + 1) +
                            " is infeasible (max " + std::to_string(std::min(prefix, suffix)) + ")");
    }
    const double norm_t = frobenius_norm(t);
    if (norm_t == 0.0)
        throw SpecError("cannot sweep on an all-zero tensor");

    TtSweepResult out;
    out.model = tt_orthogonalize(detail::random_tt(dims, ranks, opts.seed), 1);
    auto& cores = out.model.cores;
    if (n_modes == 1) {
        cores[0] = t.reshaped({1, dims[0], 1});
        out.residuals.push_back(0.0);
        out.converged = true;
        return out;
    }
    double prev = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        std::vector<Matrix> psi = detail::right_interfaces(cores);
        Matrix phi = Matrix::Ones(1, 1);
        for (std::size_t n = 0; n + 1 < n_modes; ++n) {
            const Index r0 = cores[n].dims()[0];
            const Matrix local = detail::project(t, phi, psi[n]);
            const QrResult qr = thin_qr(local);
            cores[n] = detail::core_from(qr.Q, r0, dims[n], qr.Q.cols());
            auto& next = cores[n + 1];
            const Matrix absorbed = qr.R * detail::right_unfolding(next);
            next = detail::core_from(absorbed, qr.Q.cols(), next.dims()[1], next.dims()[2]);
            phi = detail::extend_left(phi, cores[n]);
        }
        out.residuals.push_back(detail::tt_residual(t, out.model, norm_t));

        std::vector<Matrix> lefts = detail::left_interfaces(cores);
        Matrix psi_t = Matrix::Ones(1, 1);
        for (std::size_t n = n_modes - 1; n > 0; --n) {
            const Index r1 = cores[n].dims()[2];
            const Matrix local = detail::project(t, lefts[n], psi_t);
            const Index r0 = lefts[n].cols();
            const Matrix right_unf = Eigen::Map<const Matrix>(local.data(), r0, dims[n] * r1);
            const QrResult qr = thin_qr(right_unf.transpose());
            const Matrix qt = qr.Q.transpose();
            cores[n] = detail::core_from(qt, qr.Q.cols(), dims[n], r1);
            auto& prev_core = cores[n - 1];
            const Matrix absorbed = detail::left_unfolding(prev_core) * qr.R.transpose();
            prev_core = detail::core_from(absorbed, prev_core.dims()[0], prev_core.dims()[1], qr.Q.cols());
            psi_t = detail::extend_right(psi_t, cores[n]);
        }
        const double res = detail::tt_residual(t, out.model, norm_t);
        out.residuals.push_back(res);
        out.sweeps = sweep + 1;
        if (std::abs(prev - res) < opts.tol) {
            out.converged = true;
            break;
        }
        prev = res;
    }
    out.model.left_orthogonal_through = 0;
    out.model.right_orthogonal_from = 2;
    return out;
}

// Two-site MALS/DMRG sweep from an all-ones rank start. Each merged supercore
// is split by a truncated SVD with budget eps ||t|| / sqrt(N-1), so ranks
// adapt in both directions.
inline TtSweepResult tt_mals(const DenseTensor& t, double eps, const TtSweepOptions& opts = {})
{
    if (!(eps > 0.0 && eps < 1.0))
        throw SpecError("eps must lie in (0, 1)");
    const std::size_t n_modes = t.order();
    const Dims& dims = t.dims();
    const double norm_t = frobenius_norm(t);
    if (norm_t == 0.0)
        throw SpecError("cannot sweep on an all-zero tensor");

    TtSweepResult out;
    out.model = tt_orthogonalize(detail::random_tt(dims, std::vector<Index>(n_modes - 1, 1), opts.seed), 1);
    auto& cores = out.model.cores;
    if (n_modes == 1) {
        cores[0] = t.reshaped({1, dims[0], 1});
        out.residuals.push_back(0.0);
        out.converged = true;
        return out;
    }
    const double delta = eps * norm_t / std::sqrt(static_cast<double>(n_modes - 1));
    auto split = [&](const Matrix& super, Index rows) {
        const Matrix s = Eigen::Map<const Matrix>(super.data(), rows, super.size() / rows);
        SvdResult f = thin_svd(s);
        const Index r = std::max<Index>(1, detail::choose_rank(f.s, delta, opts.max_rank).first);
        return std::make_pair(std::move(f), r);
    };

    double prev = std::numeric_limits<double>::infinity();
    std::vector<Index> prev_ranks = out.model.ranks();
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        std::vector<Matrix> psi = detail::right_interfaces(cores);
        Matrix phi = Matrix::Ones(1, 1);
        for (std::size_t n = 0; n + 1 < n_modes; ++n) {
            const Index r0 = phi.cols();
            const Index r2 = psi[n + 1].cols();
            const Matrix super = detail::project(t, phi, psi[n + 1]);
            auto [f, r] = split(super, r0 * dims[n]);
            cores[n] = detail::core_from(f.U.leftCols(r), r0, dims[n], r);
            const Matrix carry = f.s.head(r).asDiagonal() * f.V.leftCols(r).transpose();
            cores[n + 1] = detail::core_from(carry, r, dims[n + 1], r2);
            phi = detail::extend_left(phi, cores[n]);
        }
        out.residuals.push_back(detail::tt_residual(t, out.model, norm_t));

        std::vector<Matrix> lefts = detail::left_interfaces(cores);
        Matrix psi_t = Matrix::Ones(1, 1);
        for (std::size_t n = n_modes - 1; n-- > 0;) {
            const Index r0 = lefts[n].cols();
            const Index r2 = psi_t.cols();
            const Matrix super = detail::project(t, lefts[n], psi_t);
            auto [f, r] = split(super, r0 * dims[n]);
            const Matrix vt = f.V.leftCols(r).transpose();
            cores[n + 1] = detail::core_from(vt, r, dims[n + 1], r2);
            const Matrix us = f.U.leftCols(r) * f.s.head(r).asDiagonal();
            cores[n] = detail::core_from(us, r0, dims[n], r);
            psi_t = detail::extend_right(psi_t, cores[n + 1]);
        }
        const double res = detail::tt_residual(t, out.model, norm_t);
        out.residuals.push_back(res);
        out.sweeps = sweep + 1;
        const std::vector<Index> ranks = out.model.ranks();
        if ((res <= eps && ranks == prev_ranks) || std::abs(prev - res) < opts.tol) {
            out.converged = res <= eps;
            break;
        }
        prev = res;
        prev_ranks = ranks;
    }
    out.model.left_orthogonal_through = 0;
    out.model.right_orthogonal_from = 2;
    return out;
}

} // namespace tnc
