#pragma once

// Small dense linear-algebra helpers on top of Eigen.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "tnc/tensor.hpp"

namespace tnc {

inline constexpr double kPinvCutoff = 1e-12;

struct SvdResult {
    Matrix U;
    Vector s;
    Matrix V;
};

inline SvdResult thin_svd(const Matrix& m)
{
    if (m.size() == 0)
        return {Matrix(m.rows(), 0), Vector(0), Matrix(m.cols(), 0)};
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

// Smallest rank whose discarded tail satisfies sqrt(sum s_k^2) <= tol, capped
// by max_rank (<= 0 means no cap). Never below 1 unless s is empty.
inline Index truncation_rank(const Vector& s, double tol, Index max_rank = 0)
{
    const Index n = s.size();
    if (n == 0)
        return 0;
    Index r = n;
    double tail = 0.0;
    const double tol2 = tol * tol;
    while (r > 1) {
        const double next = tail + s(r - 1) * s(r - 1);
        if (next > tol2)
            break;
        tail = next;
        --r;
    }
    if (max_rank > 0)
        r = std::min(r, max_rank);
    return r;
}

// Numerical rank with singular values above rel_tol * s_max.
inline Index numerical_rank(const Vector& s, double rel_tol)
{
    if (s.size() == 0 || s(0) <= 0.0)
        return 0;
    Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0))
        ++r;
    return r;
}

struct PinvResult {
    Matrix pinv;
    Index rank = 0;
    // True when singular values were dropped below the cutoff.
    bool truncated = false;
};

inline PinvResult pinv_with_info(const Matrix& m, double rel_cutoff = kPinvCutoff)
{
    PinvResult out;
    out.pinv = Matrix::Zero(m.cols(), m.rows());
    if (m.size() == 0)
        return out;
    const SvdResult f = thin_svd(m);
    if (f.s.size() == 0 || f.s(0) == 0.0) {
        out.truncated = f.s.size() > 0;
        return out;
    }
    const double cut = rel_cutoff * f.s(0);
    for (Index k = 0; k < f.s.size(); ++k) {
        if (f.s(k) <= cut) {
            out.truncated = true;
            continue;
        }
        out.pinv.noalias() += f.V.col(k) * (f.U.col(k).transpose() / f.s(k));
        ++out.rank;
    }
    return out;
}

inline Matrix pinv(const Matrix& m, double rel_cutoff = kPinvCutoff) { return pinv_with_info(m, rel_cutoff).pinv; }

// Pseudo-inverse of a symmetric positive semidefinite matrix via its
// eigendecomposition; eigenvalues at or below rel_cutoff * max are dropped.
inline Matrix spd_pinv(const Matrix& g, double rel_cutoff = kPinvCutoff)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(g);
    const Vector& w = es.eigenvalues();
    const double wmax = w.cwiseAbs().maxCoeff();
    Matrix out = Matrix::Zero(g.rows(), g.cols());
    if (wmax == 0.0)
        return out;
    for (Index k = 0; k < w.size(); ++k)
        if (std::abs(w(k)) > rel_cutoff * wmax)
            out.noalias() += es.eigenvectors().col(k) * (es.eigenvectors().col(k).transpose() / w(k));
    return out;
}

struct QrResult {
    Matrix Q;
    Matrix R;
};

// Thin QR: Q is m x k, R is k x n with k = min(m, n).
inline QrResult thin_qr(const Matrix& m)
{
    const Index k = std::min(m.rows(), m.cols());
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), k);
    Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    return {std::move(q), std::move(r)};
}

// Makes the largest-magnitude entry of each column of u positive, flipping the
// matching column of v (if given) so that u * diag * v^T is unchanged.
inline void fix_column_signs(Matrix& u, Matrix* v = nullptr)
{
    for (Index j = 0; j < u.cols(); ++j) {
        Index imax = 0;
        u.col(j).cwiseAbs().maxCoeff(&imax);
        if (u(imax, j) < 0.0) {
            u.col(j) *= -1.0;
            if (v)
                v->col(j) *= -1.0;
        }
    }
}

} // namespace tnc
