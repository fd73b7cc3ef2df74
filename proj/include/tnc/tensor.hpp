#pragma once

// Dense N-way arrays with a fixed little-endian (first index fastest) layout,
// multi-index arithmetic in both conventions, unfoldings and sub-tensors.
//
// Modes and entry indices are 1-based at the API surface; flat offsets are
// 0-based.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tnc/error.hpp"

namespace tnc {

using Index = std::int64_t;
using Dims = std::vector<Index>;
using MultiIndex = std::vector<Index>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Convention { little_endian, big_endian };

inline Index num_elements(std::span<const Index> dims)
{
    Index n = 1;
    for (Index d : dims)
        n *= d;
    return n;
}

inline std::string dims_to_string(std::span<const Index> dims)
{
    std::string s = "(";
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k)
            s += ",";
        s += std::to_string(dims[k]);
    }
    return s + ")";
}

inline void check_dims(std::span<const Index> dims)
{
    if (dims.empty())
        throw ShapeError("tensor order must be at least 1");
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (dims[k] < 1)
            throw ShapeError("dim of mode " + std::to_string(k + 1) + " must be positive, got " +
                             std::to_string(dims[k]));
}

class DenseTensor {
public:
    DenseTensor() : dims_{1}, data_(1, 0.0) {}

    explicit DenseTensor(Dims dims) : dims_(std::move(dims))
    {
        check_dims(dims_);
        data_.assign(static_cast<std::size_t>(num_elements(dims_)), 0.0);
    }

    DenseTensor(Dims dims, std::vector<double> data) : dims_(std::move(dims)), data_(std::move(data))
    {
        check_dims(dims_);
        if (static_cast<Index>(data_.size()) != num_elements(dims_))
            throw ShapeError("data length " + std::to_string(data_.size()) + " does not match dims " +
                             dims_to_string(dims_));
    }

    // Fills entries in canonical order; f receives the 1-based multi-index.
    template <class F>
    static DenseTensor generate(Dims dims, F&& f)
    {
        check_dims(dims);
        std::vector<double> data(static_cast<std::size_t>(num_elements(dims)));
        MultiIndex idx(dims.size(), 1);
        for (auto& v : data) {
            v = f(std::as_const(idx));
            for (std::size_t k = 0; k < idx.size(); ++k) {
                if (++idx[k] <= dims[k])
                    break;
                idx[k] = 1;
            }
        }
        return DenseTensor(std::move(dims), std::move(data));
    }

    static DenseTensor from_matrix(const Matrix& m)
    {
        return DenseTensor({m.rows(), m.cols()}, std::vector<double>(m.data(), m.data() + m.size()));
    }

    static DenseTensor from_vector(const Vector& v)
    {
        return DenseTensor({v.size()}, std::vector<double>(v.data(), v.data() + v.size()));
    }

    std::size_t order() const { return dims_.size(); }
    const Dims& dims() const { return dims_; }
    Index dim(int mode) const
    {
        if (mode < 1 || mode > static_cast<int>(order()))
            throw SpecError("mode " + std::to_string(mode) + " out of range for order " + std::to_string(order()));
        return dims_[static_cast<std::size_t>(mode - 1)];
    }
    Index size() const { return static_cast<Index>(data_.size()); }
    std::span<const double> data() const { return data_; }
    double operator[](Index offset) const { return data_[static_cast<std::size_t>(offset)]; }

    double operator()(std::span<const Index> idx) const;
    double at(std::initializer_list<Index> idx) const { return (*this)(std::span<const Index>(idx.begin(), idx.size())); }

    DenseTensor reshaped(Dims dims) const
    {
        if (num_elements(dims) != size())
            throw ShapeError("cannot reshape " + dims_to_string(dims_) + " to " + dims_to_string(dims));
        return DenseTensor(std::move(dims), data_);
    }

    std::vector<double> take_data() && { return std::move(data_); }

    // Column-major view of the canonical data as a rows x (size/rows) matrix.
    Eigen::Map<const Matrix> matrix_view(Index rows) const
    {
        if (rows < 1 || size() % rows != 0)
            throw ShapeError("matrix view with " + std::to_string(rows) + " rows does not divide size " +
                             std::to_string(size()));
        return Eigen::Map<const Matrix>(data_.data(), rows, size() / rows);
    }

    bool operator==(const DenseTensor&) const = default;

private:
    Dims dims_;
    std::vector<double> data_;
};

inline Index linear_index(std::span<const Index> idx, std::span<const Index> dims,
                          Convention convention = Convention::little_endian)
{
    if (idx.size() != dims.size())
        throw BoundsError("multi-index has " + std::to_string(idx.size()) + " entries, tensor order is " +
                          std::to_string(dims.size()));
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (idx[k] < 1 || idx[k] > dims[k])
            throw BoundsError("index " + std::to_string(idx[k]) + " out of range [1," + std::to_string(dims[k]) +
                              "] in mode " + std::to_string(k + 1));
    Index offset = 0;
    Index stride = 1;
    if (convention == Convention::little_endian) {
        for (std::size_t k = 0; k < dims.size(); ++k) {
            offset += (idx[k] - 1) * stride;
            stride *= dims[k];
        }
    } else {
        for (std::size_t k = dims.size(); k-- > 0;) {
            offset += (idx[k] - 1) * stride;
            stride *= dims[k];
        }
    }
    return offset;
}

inline MultiIndex multi_index(Index offset, std::span<const Index> dims,
                              Convention convention = Convention::little_endian)
{
    if (offset < 0 || offset >= num_elements(dims))
        throw BoundsError("offset " + std::to_string(offset) + " out of range for dims " + dims_to_string(dims));
    MultiIndex idx(dims.size());
    if (convention == Convention::little_endian) {
        for (std::size_t k = 0; k < dims.size(); ++k) {
            idx[k] = offset % dims[k] + 1;
            offset /= dims[k];
        }
    } else {
        for (std::size_t k = dims.size(); k-- > 0;) {
            idx[k] = offset % dims[k] + 1;
            offset /= dims[k];
        }
    }
    return idx;
}

inline double DenseTensor::operator()(std::span<const Index> idx) const
{
    return data_[static_cast<std::size_t>(linear_index(idx, dims_))];
}

namespace detail {

// Walks every canonical offset, maintaining two derived offsets built from
// per-mode strides. visit(canonical, a, b).
template <class F>
void walk_strided(std::span<const Index> dims, std::span<const Index> stride_a, std::span<const Index> stride_b,
                  F&& visit)
{
    const std::size_t n = dims.size();
    std::vector<Index> idx(n, 0);
    const Index total = num_elements(dims);
    Index a = 0;
    Index b = 0;
    for (Index c = 0; c < total; ++c) {
        visit(c, a, b);
        for (std::size_t k = 0; k < n; ++k) {
            if (++idx[k] < dims[k]) {
                a += stride_a[k];
                b += stride_b[k];
                break;
            }
            a -= stride_a[k] * (dims[k] - 1);
            b -= stride_b[k] * (dims[k] - 1);
            idx[k] = 0;
        }
    }
}

inline void check_mode(int mode, std::size_t order)
{
    if (mode < 1 || mode > static_cast<int>(order))
        throw SpecError("mode " + std::to_string(mode) + " out of range for order " + std::to_string(order));
}

// Left/right extents around a mode: data viewed as (left, I_n, right).
inline std::pair<Index, Index> split_extents(std::span<const Index> dims, int mode)
{
    Index left = 1;
    Index right = 1;
    for (int k = 0; k < static_cast<int>(dims.size()); ++k) {
        if (k < mode - 1)
            left *= dims[static_cast<std::size_t>(k)];
        else if (k > mode - 1)
            right *= dims[static_cast<std::size_t>(k)];
    }
    return {left, right};
}

} // namespace detail

// Mode-n unfolding: rows indexed by i_n, columns by the remaining modes in
// ascending order, combined little-endian.
inline Matrix unfold(const DenseTensor& t, int mode)
{
    detail::check_mode(mode, t.order());
    const Index in = t.dim(mode);
    const auto [left, right] = detail::split_extents(t.dims(), mode);
    Matrix m(in, left * right);
    const double* src = t.data().data();
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < in; ++i)
            for (Index l = 0; l < left; ++l)
                m(i, l + left * r) = src[l + left * (i + in * r)];
    return m;
}

inline DenseTensor fold(const Matrix& m, int mode, Dims dims)
{
    check_dims(dims);
    detail::check_mode(mode, dims.size());
    const Index in = dims[static_cast<std::size_t>(mode - 1)];
    const auto [left, right] = detail::split_extents(dims, mode);
    if (m.rows() != in || m.cols() != left * right)
        throw ShapeError("matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                         " cannot fold into mode " + std::to_string(mode) + " of " + dims_to_string(dims));
    std::vector<double> data(static_cast<std::size_t>(num_elements(dims)));
    for (Index r = 0; r < right; ++r)
        for (Index i = 0; i < in; ++i)
            for (Index l = 0; l < left; ++l)
                data[static_cast<std::size_t>(l + left * (i + in * r))] = m(i, l + left * r);
    return DenseTensor(std::move(dims), std::move(data));
}

struct UnfoldingSpec {
    std::vector<int> row_modes;
    std::vector<int> col_modes;
    Convention convention = Convention::little_endian;
};

namespace detail {

inline void validate(const UnfoldingSpec& spec, std::size_t order)
{
    std::vector<int> seen(order, 0);
    for (const auto* group : {&spec.row_modes, &spec.col_modes})
        for (int m : *group) {
            if (m < 1 || m > static_cast<int>(order))
                throw SpecError("unfolding mode " + std::to_string(m) + " out of range for order " +
                                std::to_string(order));
            if (seen[static_cast<std::size_t>(m - 1)]++)
                throw SpecError("unfolding mode " + std::to_string(m) + " appears twice");
        }
    for (std::size_t k = 0; k < order; ++k)
        if (!seen[k])
            throw SpecError("unfolding does not cover mode " + std::to_string(k + 1));
}

// Per-mode strides into the row and column offsets of a general unfolding.
inline std::pair<std::vector<Index>, std::vector<Index>> unfolding_strides(std::span<const Index> dims,
                                                                          const UnfoldingSpec& spec)
{
    std::vector<Index> rs(dims.size(), 0);
    std::vector<Index> cs(dims.size(), 0);
    auto fill = [&](const std::vector<int>& modes, std::vector<Index>& s) {
        Index stride = 1;
        if (spec.convention == Convention::little_endian) {
            for (int m : modes) {
                s[static_cast<std::size_t>(m - 1)] = stride;
                stride *= dims[static_cast<std::size_t>(m - 1)];
            }
        } else {
            for (auto it = modes.rbegin(); it != modes.rend(); ++it) {
                s[static_cast<std::size_t>(*it - 1)] = stride;
                stride *= dims[static_cast<std::size_t>(*it - 1)];
            }
        }
        return stride;
    };
    fill(spec.row_modes, rs);
    fill(spec.col_modes, cs);
    return {rs, cs};
}

inline Index group_size(std::span<const Index> dims, const std::vector<int>& modes)
{
    Index n = 1;
    for (int m : modes)
        n *= dims[static_cast<std::size_t>(m - 1)];
    return n;
}

} // namespace detail

inline Matrix unfold_general(const DenseTensor& t, const UnfoldingSpec& spec)
{
    detail::validate(spec, t.order());
    const auto [rs, cs] = detail::unfolding_strides(t.dims(), spec);
    const Index rows = detail::group_size(t.dims(), spec.row_modes);
    const Index cols = detail::group_size(t.dims(), spec.col_modes);
    Matrix m(rows, cols);
    const double* src = t.data().data();
    detail::walk_strided(t.dims(), rs, cs, [&](Index c, Index r, Index col) { m(r, col) = src[c]; });
    return m;
}

inline DenseTensor fold_general(const Matrix& m, const UnfoldingSpec& spec, Dims dims)
{
    check_dims(dims);
    detail::validate(spec, dims.size());
    const Index rows = detail::group_size(dims, spec.row_modes);
    const Index cols = detail::group_size(dims, spec.col_modes);
    if (m.rows() != rows || m.cols() != cols)
        throw ShapeError("matrix shape does not match unfolding of " + dims_to_string(dims));
    const auto [rs, cs] = detail::unfolding_strides(dims, spec);
    std::vector<double> data(static_cast<std::size_t>(num_elements(dims)));
    detail::walk_strided(dims, rs, cs, [&](Index c, Index r, Index col) { data[static_cast<std::size_t>(c)] = m(r, col); });
    return DenseTensor(std::move(dims), std::move(data));
}

inline Vector vectorize(const DenseTensor& t, Convention convention = Convention::little_endian)
{
    if (convention == Convention::little_endian)
        return Eigen::Map<const Vector>(t.data().data(), t.size());
    UnfoldingSpec spec;
    spec.row_modes.resize(t.order());
    std::iota(spec.row_modes.begin(), spec.row_modes.end(), 1);
    spec.convention = Convention::big_endian;
    return unfold_general(t, spec).col(0);
}

inline DenseTensor unvectorize(const Vector& v, Dims dims, Convention convention = Convention::little_endian)
{
    if (convention == Convention::little_endian) {
        check_dims(dims);
        if (v.size() != num_elements(dims))
            throw ShapeError("vector length does not match dims " + dims_to_string(dims));
        return DenseTensor(std::move(dims), std::vector<double>(v.data(), v.data() + v.size()));
    }
    UnfoldingSpec spec;
    spec.row_modes.resize(dims.size());
    std::iota(spec.row_modes.begin(), spec.row_modes.end(), 1);
    spec.convention = Convention::big_endian;
    return fold_general(Matrix(v), spec, std::move(dims));
}

// Result mode k is source mode perm[k] (1-based).
inline DenseTensor permute_modes(const DenseTensor& t, std::span<const int> perm)
{
    const std::size_t n = t.order();
    if (perm.size() != n)
        throw SpecError("permutation length does not match tensor order");
    std::vector<int> seen(n, 0);
    Dims out_dims(n);
    for (std::size_t k = 0; k < n; ++k) {
        detail::check_mode(perm[k], n);
        if (seen[static_cast<std::size_t>(perm[k] - 1)]++)
            throw SpecError("permutation repeats mode " + std::to_string(perm[k]));
        out_dims[k] = t.dims()[static_cast<std::size_t>(perm[k] - 1)];
    }
    // stride in the output for each source mode
    std::vector<Index> out_stride(n);
    Index stride = 1;
    for (std::size_t k = 0; k < n; ++k) {
        out_stride[static_cast<std::size_t>(perm[k] - 1)] = stride;
        stride *= out_dims[k];
    }
    std::vector<Index> zero(n, 0);
    std::vector<double> data(static_cast<std::size_t>(t.size()));
    const double* src = t.data().data();
    detail::walk_strided(t.dims(), out_stride, zero,
                         [&](Index c, Index o, Index) { data[static_cast<std::size_t>(o)] = src[c]; });
    return DenseTensor(std::move(out_dims), std::move(data));
}

inline DenseTensor reverse_modes(const DenseTensor& t)
{
    std::vector<int> perm(t.order());
    for (std::size_t k = 0; k < perm.size(); ++k)
        perm[k] = static_cast<int>(perm.size() - k);
    return permute_modes(t, perm);
}

// Fixes the given modes (mode -> 1-based index) and returns the tensor over
// the free modes in ascending order. One free mode gives a fiber, two a slice.
inline DenseTensor extract_subtensor(const DenseTensor& t, const std::map<int, Index>& fixed)
{
    const std::size_t n = t.order();
    for (const auto& [mode, i] : fixed) {
        detail::check_mode(mode, n);
        if (i < 1 || i > t.dim(mode))
            throw BoundsError("index " + std::to_string(i) + " out of range in mode " + std::to_string(mode));
    }
    if (fixed.size() >= n)
        throw SpecError("all modes fixed; use the element accessor for single entries");
    Dims out_dims;
    std::vector<Index> free_modes;
    Index base = 0;
    Index stride = 1;
    std::vector<Index> strides(n);
    for (std::size_t k = 0; k < n; ++k) {
        strides[k] = stride;
        stride *= t.dims()[k];
    }
    for (std::size_t k = 0; k < n; ++k) {
        auto it = fixed.find(static_cast<int>(k + 1));
        if (it == fixed.end()) {
            out_dims.push_back(t.dims()[k]);
            free_modes.push_back(static_cast<Index>(k));
        } else {
            base += (it->second - 1) * strides[k];
        }
    }
    std::vector<Index> src_stride;
    for (Index k : free_modes)
        src_stride.push_back(strides[static_cast<std::size_t>(k)]);
    std::vector<Index> zero(out_dims.size(), 0);
    std::vector<double> data(static_cast<std::size_t>(num_elements(out_dims)));
    const double* src = t.data().data();
    detail::walk_strided(out_dims, src_stride, zero,
                         [&](Index c, Index s, Index) { data[static_cast<std::size_t>(c)] = src[base + s]; });
    return DenseTensor(std::move(out_dims), std::move(data));
}

// Per-mode index selection (1-based); std::nullopt keeps the whole mode.
using Selection = std::vector<std::optional<std::vector<Index>>>;

inline DenseTensor gather(const DenseTensor& t, const Selection& sel)
{
    const std::size_t n = t.order();
    if (sel.size() != n)
        throw SpecError("selection must list every mode");
    std::vector<std::vector<Index>> picks(n);
    Dims out_dims(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (sel[k]) {
            if (sel[k]->empty())
                throw SpecError("empty index list for mode " + std::to_string(k + 1));
            for (Index i : *sel[k])
                if (i < 1 || i > t.dims()[k])
                    throw BoundsError("index " + std::to_string(i) + " out of range in mode " + std::to_string(k + 1));
            picks[k] = *sel[k];
        } else {
            picks[k].resize(static_cast<std::size_t>(t.dims()[k]));
            std::iota(picks[k].begin(), picks[k].end(), Index{1});
        }
        out_dims[k] = static_cast<Index>(picks[k].size());
    }
    return DenseTensor::generate(out_dims, [&](const MultiIndex& idx) {
        Index offset = 0;
        Index stride = 1;
        for (std::size_t k = 0; k < n; ++k) {
            offset += (picks[k][static_cast<std::size_t>(idx[k] - 1)] - 1) * stride;
            stride *= t.dims()[k];
        }
        return t[offset];
    });
}

inline double frobenius_norm(const DenseTensor& t)
{
    double s = 0.0;
    for (double v : t.data())
        s += v * v;
    return std::sqrt(s);
}

inline double inner_product(const DenseTensor& a, const DenseTensor& b)
{
    if (a.dims() != b.dims())
        throw ShapeError("inner product needs equal dims, got " + dims_to_string(a.dims()) + " and " +
                         dims_to_string(b.dims()));
    double s = 0.0;
    for (Index k = 0; k < a.size(); ++k)
        s += a[k] * b[k];
    return s;
}

inline DenseTensor operator-(const DenseTensor& a, const DenseTensor& b)
{
    if (a.dims() != b.dims())
        throw ShapeError("difference needs equal dims");
    std::vector<double> d(static_cast<std::size_t>(a.size()));
    for (Index k = 0; k < a.size(); ++k)
        d[static_cast<std::size_t>(k)] = a[k] - b[k];
    return DenseTensor(a.dims(), std::move(d));
}

inline DenseTensor operator+(const DenseTensor& a, const DenseTensor& b)
{
    if (a.dims() != b.dims())
        throw ShapeError("sum needs equal dims");
    std::vector<double> d(static_cast<std::size_t>(a.size()));
    for (Index k = 0; k < a.size(); ++k)
        d[static_cast<std::size_t>(k)] = a[k] + b[k];
    return DenseTensor(a.dims(), std::move(d));
}

inline DenseTensor operator*(double s, const DenseTensor& a)
{
    std::vector<double> d(a.data().begin(), a.data().end());
    for (auto& v : d)
        v *= s;
    return DenseTensor(a.dims(), std::move(d));
}

// ||a - b||_F / ||a||_F; returns ||b||_F when a is zero.
inline double relative_error(const DenseTensor& reference, const DenseTensor& approx)
{
    const double ref = frobenius_norm(reference);
    const double diff = frobenius_norm(reference - approx);
    return ref > 0.0 ? diff / ref : diff;
}

} // namespace tnc
