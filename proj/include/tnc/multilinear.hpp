#pragma once

// Products and contractions of dense tensors: mode-n products, general
// contraction, outer/Kronecker/Khatri-Rao/Hadamard products, and strong
// Kronecker products of block matrices and block tensors.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tnc/tensor.hpp"

namespace tnc {

// t x_n B with B of shape J x I_n. Mode n of the result has size J.
inline DenseTensor mode_n_product(const DenseTensor& t, const Matrix& b, int mode)
{
    detail::check_mode(mode, t.order());
    const Index in = t.dim(mode);
    if (b.cols() != in)
        throw ShapeError("mode-" + std::to_string(mode) + " product: matrix has " + std::to_string(b.cols()) +
                         " columns, mode size is " + std::to_string(in));
    const Index j = b.rows();
    const auto [left, right] = detail::split_extents(t.dims(), mode);
    Dims out_dims = t.dims();
    out_dims[static_cast<std::size_t>(mode - 1)] = j;
    std::vector<double> out(static_cast<std::size_t>(left * j * right));
    const double* src = t.data().data();
    if (left == 1) {
        Eigen::Map<const Matrix> x(src, in, right);
        Eigen::Map<Matrix> y(out.data(), j, right);
        y.noalias() = b * x;
    } else {
        for (Index r = 0; r < right; ++r) {
            Eigen::Map<const Matrix> x(src + r * left * in, left, in);
            Eigen::Map<Matrix> y(out.data() + r * left * j, left, j);
            y.noalias() = x * b.transpose();
        }
    }
    return DenseTensor(std::move(out_dims), std::move(out));
}

// t x_n b for a vector b of length I_n; drops mode n. An order-1 input yields
// a one-element order-1 tensor.
inline DenseTensor mode_n_vector_product(const DenseTensor& t, const Vector& b, int mode)
{
    detail::check_mode(mode, t.order());
    if (b.size() != t.dim(mode))
        throw ShapeError("mode-" + std::to_string(mode) + " vector product: vector length " +
                         std::to_string(b.size()) + " does not match mode size " + std::to_string(t.dim(mode)));
    DenseTensor p = mode_n_product(t, b.transpose(), mode);
    Dims dims;
    for (std::size_t k = 0; k < t.order(); ++k)
        if (static_cast<int>(k) != mode - 1)
            dims.push_back(t.dims()[k]);
    if (dims.empty())
        dims.push_back(1);
    return p.reshaped(std::move(dims));
}

// Full multilinear product t x_1 B1 x_2 B2 ... ; absent factors are skipped.
// apply_order lists 1-based modes in application order (default 1..N).
inline DenseTensor multilinear_product(const DenseTensor& t, const std::vector<std::optional<Matrix>>& factors,
                                       std::span<const int> apply_order = {})
{
    if (factors.size() != t.order())
        throw ShapeError("multilinear product needs one (optional) factor per mode");
    std::vector<int> order(apply_order.begin(), apply_order.end());
    if (order.empty())
        for (int k = 1; k <= static_cast<int>(t.order()); ++k)
            order.push_back(k);
    DenseTensor out = t;
    for (int mode : order) {
        detail::check_mode(mode, t.order());
        const auto& f = factors[static_cast<std::size_t>(mode - 1)];
        if (f)
            out = mode_n_product(out, *f, mode);
    }
    return out;
}

// Contracts modes_a[k] of a with modes_b[k] of b. The result lists the free
// modes of a in ascending order, then the free modes of b in ascending order.
inline DenseTensor contract(const DenseTensor& a, const DenseTensor& b, std::span<const int> modes_a,
                            std::span<const int> modes_b)
{
    if (modes_a.size() != modes_b.size())
        throw SpecError("contraction mode lists differ in length");
    if (modes_a.empty())
        throw SpecError("contraction needs at least one mode pair");
    auto check_list = [](std::span<const int> modes, std::size_t order, const char* which) {
        std::vector<int> seen(order, 0);
        for (int m : modes) {
            detail::check_mode(m, order);
            if (seen[static_cast<std::size_t>(m - 1)]++)
                throw SpecError(std::string("contraction repeats mode ") + std::to_string(m) + " of " + which);
        }
        return seen;
    };
    const auto used_a = check_list(modes_a, a.order(), "first operand");
    const auto used_b = check_list(modes_b, b.order(), "second operand");
    Index k = 1;
    for (std::size_t p = 0; p < modes_a.size(); ++p) {
        const Index da = a.dim(modes_a[p]);
        const Index db = b.dim(modes_b[p]);
        if (da != db)
            throw ShapeError("contracted modes " + std::to_string(modes_a[p]) + " and " + std::to_string(modes_b[p]) +
                             " differ in size (" + std::to_string(da) + " vs " + std::to_string(db) + ")");
        k *= da;
    }
    std::vector<int> perm_a;
    std::vector<int> perm_b(modes_b.begin(), modes_b.end());
    Dims out_dims;
    Index fa = 1;
    Index fb = 1;
    for (std::size_t m = 0; m < a.order(); ++m)
        if (!used_a[m]) {
            perm_a.push_back(static_cast<int>(m + 1));
            out_dims.push_back(a.dims()[m]);
            fa *= a.dims()[m];
        }
    perm_a.insert(perm_a.end(), modes_a.begin(), modes_a.end());
    for (std::size_t m = 0; m < b.order(); ++m)
        if (!used_b[m]) {
            perm_b.push_back(static_cast<int>(m + 1));
            out_dims.push_back(b.dims()[m]);
            fb *= b.dims()[m];
        }
    const DenseTensor pa = permute_modes(a, perm_a);
    const DenseTensor pb = permute_modes(b, perm_b);
    Eigen::Map<const Matrix> ma(pa.data().data(), fa, k);
    Eigen::Map<const Matrix> mb(pb.data().data(), k, fb);
    std::vector<double> out(static_cast<std::size_t>(fa * fb));
    Eigen::Map<Matrix>(out.data(), fa, fb).noalias() = ma * mb;
    if (out_dims.empty())
        out_dims.push_back(1);
    return DenseTensor(std::move(out_dims), std::move(out));
}

inline DenseTensor outer_product(const DenseTensor& a, const DenseTensor& b)
{
    Dims dims = a.dims();
    dims.insert(dims.end(), b.dims().begin(), b.dims().end());
    std::vector<double> out(static_cast<std::size_t>(a.size() * b.size()));
    Eigen::Map<Matrix>(out.data(), a.size(), b.size()).noalias() =
        Eigen::Map<const Vector>(a.data().data(), a.size()) * Eigen::Map<const Vector>(b.data().data(), b.size()).transpose();
    return DenseTensor(std::move(dims), std::move(out));
}

// Kronecker product of tensors: entry (i_n, j_n) lands at j_n + (i_n - 1) J_n
// in mode n. The lower-order operand is padded with trailing singleton modes.
inline DenseTensor kron_tensor(const DenseTensor& a, const DenseTensor& b)
{
    const std::size_t n = std::max(a.order(), b.order());
    Dims da = a.dims();
    Dims db = b.dims();
    da.resize(n, 1);
    db.resize(n, 1);
    Dims out_dims(n);
    std::vector<Index> out_stride(n);
    Index stride = 1;
    for (std::size_t k = 0; k < n; ++k) {
        out_dims[k] = da[k] * db[k];
        out_stride[k] = stride;
        stride *= out_dims[k];
    }
    std::vector<Index> stride_a(n);
    for (std::size_t k = 0; k < n; ++k)
        stride_a[k] = out_stride[k] * db[k];
    std::vector<Index> zero(n, 0);
    std::vector<Index> off_a(static_cast<std::size_t>(a.size()));
    std::vector<Index> off_b(static_cast<std::size_t>(b.size()));
    detail::walk_strided(da, stride_a, zero, [&](Index c, Index o, Index) { off_a[static_cast<std::size_t>(c)] = o; });
    detail::walk_strided(db, out_stride, zero, [&](Index c, Index o, Index) { off_b[static_cast<std::size_t>(c)] = o; });
    std::vector<double> out(static_cast<std::size_t>(num_elements(out_dims)));
    for (std::size_t i = 0; i < off_a.size(); ++i) {
        const double av = a[static_cast<Index>(i)];
        for (std::size_t j = 0; j < off_b.size(); ++j)
            out[static_cast<std::size_t>(off_a[i] + off_b[j])] = av * b[static_cast<Index>(j)];
    }
    return DenseTensor(std::move(out_dims), std::move(out));
}

// Classical matrix Kronecker product.
inline Matrix kron(const Matrix& a, const Matrix& b)
{
    Matrix c(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            c.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return c;
}

// Column-wise Kronecker product: column r is a_r (x) b_r.
inline Matrix khatri_rao(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.cols())
        throw ShapeError("Khatri-Rao product needs equal column counts, got " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.cols()));
    Matrix c(a.rows() * b.rows(), a.cols());
    for (Index r = 0; r < a.cols(); ++r)
        for (Index i = 0; i < a.rows(); ++i)
            c.col(r).segment(i * b.rows(), b.rows()) = a(i, r) * b.col(r);
    return c;
}

// Khatri-Rao product of a list, left to right: m[0] (.) m[1] (.) ...
inline Matrix khatri_rao(std::span<const Matrix> mats)
{
    if (mats.empty())
        throw SpecError("Khatri-Rao product of an empty list");
    Matrix out = mats[0];
    for (std::size_t k = 1; k < mats.size(); ++k)
        out = khatri_rao(out, mats[k]);
    return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("Hadamard product needs equal shapes");
    return a.cwiseProduct(b);
}

inline DenseTensor hadamard(const DenseTensor& a, const DenseTensor& b)
{
    if (a.dims() != b.dims())
        throw ShapeError("Hadamard product needs equal dims, got " + dims_to_string(a.dims()) + " and " +
                         dims_to_string(b.dims()));
    std::vector<double> out(static_cast<std::size_t>(a.size()));
    for (Index k = 0; k < a.size(); ++k)
        out[static_cast<std::size_t>(k)] = a[k] * b[k];
    return DenseTensor(a.dims(), std::move(out));
}

// Grid of equally shaped blocks, addressed (row, col) with 0-based grid
// coordinates.
template <class Block>
class BlockGrid {
public:
    BlockGrid(Index rows, Index cols, std::vector<Block> blocks)
        : rows_(rows), cols_(cols), blocks_(std::move(blocks))
    {
        if (rows < 1 || cols < 1 || static_cast<Index>(blocks_.size()) != rows * cols)
            throw ShapeError("block grid " + std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                             std::to_string(rows * cols) + " blocks, got " + std::to_string(blocks_.size()));
        for (const auto& blk : blocks_)
            if (shape_of(blk) != shape_of(blocks_.front()))
                throw ShapeError("blocks of a block grid must share one shape");
    }

    Index grid_rows() const { return rows_; }
    Index grid_cols() const { return cols_; }
    const Block& block(Index r, Index c) const { return blocks_[static_cast<std::size_t>(r * cols_ + c)]; }
    const std::vector<Block>& blocks() const { return blocks_; }

private:
    static Dims shape_of(const Matrix& m) { return {m.rows(), m.cols()}; }
    static Dims shape_of(const DenseTensor& t) { return t.dims(); }

    Index rows_;
    Index cols_;
    std::vector<Block> blocks_;
};

using BlockMatrix = BlockGrid<Matrix>;
using BlockTensor3 = BlockGrid<DenseTensor>;

// Dense matrix of a block matrix: block (r1, r2) occupies rows r1*I.. and
// columns r2*J...
inline Matrix assemble(const BlockMatrix& m)
{
    const Index bi = m.block(0, 0).rows();
    const Index bj = m.block(0, 0).cols();
    Matrix out(m.grid_rows() * bi, m.grid_cols() * bj);
    for (Index r = 0; r < m.grid_rows(); ++r)
        for (Index c = 0; c < m.grid_cols(); ++c)
            out.block(r * bi, c * bj, bi, bj) = m.block(r, c);
    return out;
}

// C_{r1,r3} = sum_{r2} A_{r1,r2} (x) B_{r2,r3}
inline BlockMatrix strong_kron(const BlockMatrix& a, const BlockMatrix& b)
{
    if (a.grid_cols() != b.grid_rows())
        throw ShapeError("strong Kronecker product: inner grid sizes " + std::to_string(a.grid_cols()) + " and " +
                         std::to_string(b.grid_rows()) + " differ");
    std::vector<Matrix> blocks;
    blocks.reserve(static_cast<std::size_t>(a.grid_rows() * b.grid_cols()));
    for (Index r1 = 0; r1 < a.grid_rows(); ++r1)
        for (Index r3 = 0; r3 < b.grid_cols(); ++r3) {
            Matrix c = kron(a.block(r1, 0), b.block(0, r3));
            for (Index r2 = 1; r2 < a.grid_cols(); ++r2)
                c += kron(a.block(r1, r2), b.block(r2, r3));
            blocks.push_back(std::move(c));
        }
    return BlockMatrix(a.grid_rows(), b.grid_cols(), std::move(blocks));
}

inline BlockTensor3 strong_kron_tensor3(const BlockTensor3& a, const BlockTensor3& b)
{
    if (a.grid_cols() != b.grid_rows())
        throw ShapeError("strong Kronecker product: inner grid sizes " + std::to_string(a.grid_cols()) + " and " +
                         std::to_string(b.grid_rows()) + " differ");
    if (a.block(0, 0).order() != 3 || b.block(0, 0).order() != 3)
        throw ShapeError("block tensors must hold 3rd-order blocks");
    std::vector<DenseTensor> blocks;
    for (Index r1 = 0; r1 < a.grid_rows(); ++r1)
        for (Index r3 = 0; r3 < b.grid_cols(); ++r3) {
            DenseTensor c = kron_tensor(a.block(r1, 0), b.block(0, r3));
            for (Index r2 = 1; r2 < a.grid_cols(); ++r2)
                c = c + kron_tensor(a.block(r1, r2), b.block(r2, r3));
            blocks.push_back(std::move(c));
        }
    return BlockTensor3(a.grid_rows(), b.grid_cols(), std::move(blocks));
}

} // namespace tnc
