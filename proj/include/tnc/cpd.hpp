#pragma once

// Canonical polyadic model X = sum_r lambda_r b_r^(1) o ... o b_r^(N),
// Khatri-Rao matricized forms and ALS fitting.

#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "tnc/linalg.hpp"
#include "tnc/multilinear.hpp"
#include "tnc/tensor.hpp"

namespace tnc {

struct CPModel {
    Vector weights;
    std::vector<Matrix> factors;

    Index rank() const { return weights.size(); }
    std::size_t order() const { return factors.size(); }
    Dims dims() const
    {
        Dims d;
        for (const auto& f : factors)
            d.push_back(f.rows());
        return d;
    }
};

inline void validate(const CPModel& m)
{
    if (m.factors.empty())
        throw ShapeError("CP model needs at least one factor");
    for (std::size_t n = 0; n < m.factors.size(); ++n)
        if (m.factors[n].cols() != m.rank() || m.factors[n].rows() < 1)
            throw ShapeError("CP factor " + std::to_string(n + 1) + " has " + std::to_string(m.factors[n].cols()) +
                             " columns, rank is " + std::to_string(m.rank()));
}

inline DenseTensor cp_reconstruct(const CPModel& m)
{
    validate(m);
    const Dims dims = m.dims();
    Vector acc = Vector::Zero(num_elements(dims));
    for (Index r = 0; r < m.rank(); ++r) {
        DenseTensor term = DenseTensor::from_vector(m.factors[0].col(r));
        for (std::size_t n = 1; n < m.factors.size(); ++n)
            term = outer_product(term, DenseTensor::from_vector(m.factors[n].col(r)));
        acc += m.weights(r) * Eigen::Map<const Vector>(term.data().data(), term.size());
    }
    return unvectorize(acc, dims);
}

// Khatri-Rao form of the mode-n unfolding, B^(n) Lambda (KR of the others)^T.
// Little-endian columns pair with the other factors in descending mode order;
// big-endian columns with ascending order.
inline Matrix cp_unfolded(const CPModel& m, int mode, Convention convention = Convention::little_endian)
{
    validate(m);
    detail::check_mode(mode, m.order());
    std::vector<Matrix> others;
    for (int k = 1; k <= static_cast<int>(m.order()); ++k)
        if (k != mode)
            others.push_back(m.factors[static_cast<std::size_t>(k - 1)]);
    if (convention == Convention::little_endian)
        std::reverse(others.begin(), others.end());
    const Matrix& bn = m.factors[static_cast<std::size_t>(mode - 1)];
    if (others.empty())
        return bn * m.weights;
    return bn * m.weights.asDiagonal() * khatri_rao(others).transpose();
}

// 1 - ||X - Xhat||_F / ||X||_F
inline double cp_fit(const DenseTensor& t, const CPModel& m)
{
    const double nx = frobenius_norm(t);
    if (nx == 0.0)
        throw SpecError("fit is undefined for an all-zero tensor");
    const DenseTensor xhat = cp_reconstruct(m);
    if (xhat.dims() != t.dims())
        throw ShapeError("model dims " + dims_to_string(xhat.dims()) + " differ from tensor dims " +
                         dims_to_string(t.dims()));
    return 1.0 - frobenius_norm(t - xhat) / nx;
}

// Unit-norm columns with norms moved into the weights; weights are made
// non-negative and the sign of each rank-1 term is carried by the last factor
// after the largest-magnitude entry of every other factor column is made
// positive.
inline CPModel normalize(CPModel m)
{
    validate(m);
    const std::size_t n_modes = m.factors.size();
    for (Index r = 0; r < m.rank(); ++r) {
        for (std::size_t n = 0; n < n_modes; ++n) {
            const double nrm = m.factors[n].col(r).norm();
            if (nrm > 0.0) {
                m.factors[n].col(r) /= nrm;
                m.weights(r) *= nrm;
            } else {
                m.weights(r) = 0.0;
            }
        }
        double sign = m.weights(r) < 0.0 ? -1.0 : 1.0;
        m.weights(r) = std::abs(m.weights(r));
        for (std::size_t n = 0; n + 1 < n_modes; ++n) {
            Index imax = 0;
            m.factors[n].col(r).cwiseAbs().maxCoeff(&imax);
            if (m.factors[n](imax, r) < 0.0) {
                m.factors[n].col(r) *= -1.0;
                sign = -sign;
            }
        }
        if (sign < 0.0)
            m.factors[n_modes - 1].col(r) *= -1.0;
    }
    return m;
}

inline Index cp_storage(const CPModel& m)
{
    Index n = m.rank();
    for (const auto& f : m.factors)
        n += f.size();
    return n;
}

enum class CpInit { random, hosvd };

struct CpAlsOptions {
    int max_iters = 500;
    double tol = 1e-12;
    std::uint64_t seed = 0;
    int n_starts = 1;
    CpInit init = CpInit::random;
    // Workers for independent starts; results do not depend on this value.
    int threads = 1;
};

struct CpAlsDiagnostics {
    // Fit after every sweep of the returned start.
    std::vector<double> fit_history;
    std::vector<double> start_fits;
    int best_start = 0;
    int iterations = 0;
    bool converged = false;
    // R exceeds the numerical rank of some unfolding.
    bool overfactored = false;
};

struct CpAlsResult {
    CPModel model;
    CpAlsDiagnostics diagnostics;
};

namespace detail {

struct CpRun {
    CPModel model;
    std::vector<double> fits;
    int iterations = 0;
    bool converged = false;
};

inline CPModel cp_initial(const DenseTensor& t, Index rank, CpInit init, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    CPModel m;
    m.weights = Vector::Ones(rank);
    for (int n = 1; n <= static_cast<int>(t.order()); ++n) {
        Matrix f(t.dim(n), rank);
        for (Index j = 0; j < f.cols(); ++j)
            for (Index i = 0; i < f.rows(); ++i)
                f(i, j) = gauss(rng);
        if (init == CpInit::hosvd) {
            const SvdResult s = thin_svd(unfold(t, n));
            const Index k = std::min<Index>(rank, s.U.cols());
            f.leftCols(k) = s.U.leftCols(k);
        }
        for (Index j = 0; j < f.cols(); ++j)
            f.col(j).normalize();
        m.factors.push_back(std::move(f));
    }
    return m;
}

inline CpRun cp_als_single(const DenseTensor& t, const std::vector<Matrix>& unfoldings, Index rank,
                           const CpAlsOptions& opts, std::uint64_t seed)
{
    const int n_modes = static_cast<int>(t.order());
    CpRun run;
    run.model = cp_initial(t, rank, opts.init, seed);
    auto& f = run.model.factors;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iters; ++it) {
        for (int n = 0; n < n_modes; ++n) {
            Matrix gram = Matrix::Ones(rank, rank);
            std::vector<Matrix> others;
            for (int k = n_modes - 1; k >= 0; --k)
                if (k != n) {
                    others.push_back(f[static_cast<std::size_t>(k)]);
                    gram = gram.cwiseProduct(f[static_cast<std::size_t>(k)].transpose() * f[static_cast<std::size_t>(k)]);
                }
            Matrix mttkrp = others.empty() ? unfoldings[static_cast<std::size_t>(n)] * Matrix::Ones(1, rank)
                                           : Matrix(unfoldings[static_cast<std::size_t>(n)] * khatri_rao(others));
            Matrix updated = mttkrp * spd_pinv(gram);
            for (Index r = 0; r < rank; ++r) {
                const double nrm = updated.col(r).norm();
                run.model.weights(r) = nrm;
                if (nrm > 0.0)
                    updated.col(r) /= nrm;
            }
            f[static_cast<std::size_t>(n)] = std::move(updated);
        }
        run.model = normalize(std::move(run.model));
        const double fit = cp_fit(t, run.model);
        run.fits.push_back(fit);
        run.iterations = it + 1;
        if (std::abs(fit - prev) < opts.tol) {
            run.converged = true;
            break;
        }
        prev = fit;
    }
    return run;
}

} // namespace detail

inline CpAlsResult cp_als(const DenseTensor& t, Index rank, const CpAlsOptions& opts = {})
{
    if (rank < 1)
        throw SpecError("CP rank must be at least 1");
    if (opts.n_starts < 1 || opts.max_iters < 1)
        throw SpecError("n_starts and max_iters must be positive");
    if (frobenius_norm(t) == 0.0)
        throw SpecError("cannot fit a CP model to an all-zero tensor");

    std::vector<Matrix> unfoldings;
    CpAlsDiagnostics diag;
    for (int n = 1; n <= static_cast<int>(t.order()); ++n) {
        unfoldings.push_back(unfold(t, n));
        const Matrix& u = unfoldings.back();
        Eigen::SelfAdjointEigenSolver<Matrix> es(u * u.transpose(), Eigen::EigenvaluesOnly);
        const Vector w = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().reverse();
        if (rank > numerical_rank(w, 1e-10))
            diag.overfactored = true;
    }

    std::vector<detail::CpRun> runs(static_cast<std::size_t>(opts.n_starts));
    const int workers = std::max(1, std::min(opts.threads, opts.n_starts));
    for (int first = 0; first < opts.n_starts; first += workers) {
        std::vector<std::future<detail::CpRun>> jobs;
        for (int s = first; s < std::min(opts.n_starts, first + workers); ++s)
            jobs.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                      [&, s] { return detail::cp_als_single(t, unfoldings, rank, opts, opts.seed + static_cast<std::uint64_t>(s)); }));
        for (std::size_t j = 0; j < jobs.size(); ++j)
            runs[static_cast<std::size_t>(first) + j] = jobs[j].get();
    }

    int best = 0;
    for (int s = 0; s < opts.n_starts; ++s) {
        diag.start_fits.push_back(runs[static_cast<std::size_t>(s)].fits.back());
        if (runs[static_cast<std::size_t>(s)].fits.back() > runs[static_cast<std::size_t>(best)].fits.back())
            best = s;
    }
    auto& r = runs[static_cast<std::size_t>(best)];
    diag.best_start = best;
    diag.fit_history = r.fits;
    diag.iterations = r.iterations;
    diag.converged = r.converged;
    return {std::move(r.model), std::move(diag)};
}

} // namespace tnc
