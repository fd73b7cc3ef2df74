#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace tnc;
using tnc::testkit::for_each_index;
using tnc::testkit::max_abs_diff;

namespace {

DenseTensor iota_tensor(const Dims& dims)
{
    double v = 0.0;
    return DenseTensor::generate(dims, [&](const MultiIndex&) { return v += 1.0; });
}

} // namespace

TEST(LinearIndex, LittleAndBigEndianOffsets)
{
    const Dims dims = {2, 3, 4};
    const MultiIndex idx = {2, 1, 1};
    EXPECT_EQ(linear_index(idx, dims), 1);
    EXPECT_EQ(linear_index(idx, dims, Convention::big_endian), 12);
    EXPECT_EQ(linear_index(MultiIndex{2, 3, 4}, dims), 23);
    EXPECT_EQ(linear_index(MultiIndex{1, 1, 1}, dims, Convention::big_endian), 0);
}

TEST(LinearIndex, ErrorNamesOffendingMode)
{
    try {
        linear_index(MultiIndex{1, 4, 1}, Dims{2, 3, 4});
        FAIL() << "expected BoundsError";
    } catch (const BoundsError& e) {
        EXPECT_NE(std::string(e.what()).find("mode 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(multi_index(24, Dims{2, 3, 4}), BoundsError);
}

TEST(LinearIndex, RoundTripsAgainstHornerOracle)
{
    const Dims dims = {3, 1, 4, 2};
    Index expect = 0;
    for_each_index(dims, [&](const MultiIndex& idx) {
        ASSERT_EQ(linear_index(idx, dims), expect);
        ASSERT_EQ(linear_index(idx, dims), testkit::naive_offset(idx, dims));
        ASSERT_EQ(multi_index(expect, dims), idx);
        const Index be = linear_index(idx, dims, Convention::big_endian);
        ASSERT_EQ(multi_index(be, dims, Convention::big_endian), idx);
        ++expect;
    });
}

TEST(Unfold, ModeUnfoldingsOfSmallCube)
{
    const DenseTensor t = iota_tensor({2, 2, 2});
    Matrix m1(2, 4);
    m1 << 1, 3, 5, 7, 2, 4, 6, 8;
    Matrix m3(2, 4);
    m3 << 1, 2, 3, 4, 5, 6, 7, 8;
    EXPECT_EQ(unfold(t, 1), m1);
    EXPECT_EQ(unfold(t, 3), m3);
    Matrix m2(2, 4);
    m2 << 1, 2, 5, 6, 3, 4, 7, 8;
    EXPECT_EQ(unfold(t, 2), m2);
}

TEST(Unfold, GeneralUnfoldingRowsFirstTwoModes)
{
    const DenseTensor t = iota_tensor({2, 2, 2});
    Matrix expect(4, 2);
    expect << 1, 5, 2, 6, 3, 7, 4, 8;
    EXPECT_EQ(unfold_general(t, {{1, 2}, {3}, Convention::little_endian}), expect);
}

TEST(Unfold, MatchesLoopOracleAndFoldInverts)
{
    Rng rng(3);
    const DenseTensor t = rng.tensor({3, 4, 2, 5});
    for (int n = 1; n <= 4; ++n) {
        EXPECT_EQ(unfold(t, n), testkit::naive_unfold(t, n)) << "mode " << n;
        EXPECT_EQ(fold(unfold(t, n), n, t.dims()), t);
    }
}

TEST(Unfold, GeneralSpecValidation)
{
    const DenseTensor t = iota_tensor({2, 3, 4});
    EXPECT_THROW(unfold_general(t, {{1, 1}, {2, 3}}), SpecError);
    EXPECT_THROW(unfold_general(t, {{1}, {2}}), SpecError);
    EXPECT_THROW(unfold_general(t, {{1, 4}, {2, 3}}), SpecError);
    EXPECT_THROW(unfold(t, 0), SpecError);
    EXPECT_THROW(fold(Matrix::Zero(3, 3), 1, {2, 3, 4}), ShapeError);
}

TEST(Vectorize, BigEndianOrder)
{
    const DenseTensor t = DenseTensor({2, 2}, {1, 2, 3, 4});
    Vector expect(4);
    expect << 1, 3, 2, 4;
    EXPECT_EQ(vectorize(t, Convention::big_endian), expect);
    EXPECT_EQ(unvectorize(expect, {2, 2}, Convention::big_endian), t);
    Rng rng(9);
    const DenseTensor r = rng.tensor({2, 3, 4});
    EXPECT_EQ(vectorize(r, Convention::big_endian), testkit::naive_big_endian_vec(r));
}

TEST(Permute, ReverseAndCustomOrder)
{
    Rng rng(4);
    const DenseTensor t = rng.tensor({2, 3, 4});
    const std::vector<int> perm = {3, 1, 2};
    const DenseTensor p = permute_modes(t, perm);
    EXPECT_EQ(p.dims(), (Dims{4, 2, 3}));
    for_each_index(t.dims(), [&](const MultiIndex& i) { ASSERT_EQ(p.at({i[2], i[0], i[1]}), t(i)); });
    EXPECT_EQ(reverse_modes(reverse_modes(t)), t);
    const std::vector<int> bad = {1, 1, 2};
    EXPECT_THROW(permute_modes(t, bad), SpecError);
    // big-endian vec equals little-endian vec of the reversed tensor
    EXPECT_EQ(vectorize(t, Convention::big_endian), vectorize(reverse_modes(t)));
}

TEST(Subtensor, FibersSlicesAndGather)
{
    const DenseTensor t = iota_tensor({2, 3, 4});
    const DenseTensor fiber = extract_subtensor(t, {{1, 2}, {3, 4}});
    EXPECT_EQ(fiber.dims(), (Dims{3}));
    EXPECT_EQ(fiber.at({1}), t.at({2, 1, 4}));
    EXPECT_EQ(fiber.at({3}), t.at({2, 3, 4}));
    const DenseTensor slice = extract_subtensor(t, {{2, 3}});
    EXPECT_EQ(slice.dims(), (Dims{2, 4}));
    EXPECT_EQ(slice.at({2, 3}), t.at({2, 3, 3}));
    EXPECT_THROW(extract_subtensor(t, {{1, 1}, {2, 1}, {3, 1}}), SpecError);
    EXPECT_THROW(extract_subtensor(t, {{2, 4}}), BoundsError);

    const DenseTensor g = gather(t, {std::vector<Index>{2}, std::nullopt, std::vector<Index>{4, 1}});
    EXPECT_EQ(g.dims(), (Dims{1, 3, 2}));
    EXPECT_EQ(g.at({1, 2, 1}), t.at({2, 2, 4}));
    EXPECT_EQ(g.at({1, 3, 2}), t.at({2, 3, 1}));
}

TEST(Tensor, ConstructionAndArithmetic)
{
    EXPECT_THROW(DenseTensor({2, 0}), ShapeError);
    EXPECT_THROW(DenseTensor({2, 2}, {1, 2, 3}), ShapeError);
    const DenseTensor a({2}, {3, 4});
    EXPECT_DOUBLE_EQ(frobenius_norm(a), 5.0);
    EXPECT_DOUBLE_EQ(inner_product(a, a), 25.0);
    EXPECT_EQ((a + a), 2.0 * a);
    EXPECT_DOUBLE_EQ(frobenius_norm(a - a), 0.0);
    EXPECT_DOUBLE_EQ(relative_error(a, DenseTensor({2}, {3, 4})), 0.0);
    EXPECT_THROW(a + DenseTensor({3}), ShapeError);
}

TEST(ModeProduct, MatchesLoopOracle)
{
    Rng rng(5);
    const DenseTensor t = rng.tensor({3, 4, 5});
    for (int n = 1; n <= 3; ++n) {
        const Matrix b = rng.matrix(2, t.dim(n));
        const DenseTensor p = mode_n_product(t, b, n);
        EXPECT_LT(max_abs_diff(p, testkit::naive_mode_product(t, b, n)), 1e-12);
        EXPECT_LT(max_abs_diff(unfold(p, n), b * unfold(t, n)), 1e-12);
    }
    EXPECT_THROW(mode_n_product(t, rng.matrix(2, 5), 1), ShapeError);
}

TEST(ModeProduct, VectorProductDropsMode)
{
    const DenseTensor t = iota_tensor({2, 3});
    Vector v(3);
    v << 1, 0, -1;
    const DenseTensor p = mode_n_vector_product(t, v, 2);
    EXPECT_EQ(p.dims(), (Dims{2}));
    EXPECT_DOUBLE_EQ(p.at({1}), 1.0 - 5.0);
    const DenseTensor s = mode_n_vector_product(DenseTensor({3}, {1, 2, 3}), v, 1);
    EXPECT_EQ(s.dims(), (Dims{1}));
    EXPECT_DOUBLE_EQ(s[0], -2.0);
}

TEST(ModeProduct, DistinctModesCommuteSameModeComposes)
{
    Rng rng(6);
    const DenseTensor t = rng.tensor({3, 4, 2});
    const Matrix a = rng.matrix(5, 3);
    const Matrix b = rng.matrix(2, 4);
    EXPECT_LT(max_abs_diff(mode_n_product(mode_n_product(t, a, 1), b, 2),
                           mode_n_product(mode_n_product(t, b, 2), a, 1)),
              1e-12);
    const Matrix c = rng.matrix(4, 5);
    EXPECT_LT(max_abs_diff(mode_n_product(mode_n_product(t, a, 1), c, 1), mode_n_product(t, c * a, 1)), 1e-12);
    const std::vector<int> order = {2, 1};
    EXPECT_LT(max_abs_diff(multilinear_product(t, {a, b, std::nullopt}),
                           multilinear_product(t, {a, b, std::nullopt}, order)),
              1e-12);
}

TEST(Contract, MatrixProductAndFullContraction)
{
    Rng rng(7);
    const Matrix a = rng.matrix(3, 4);
    const Matrix b = rng.matrix(4, 5);
    const std::vector<int> ma = {2};
    const std::vector<int> mb = {1};
    const DenseTensor c = contract(DenseTensor::from_matrix(a), DenseTensor::from_matrix(b), ma, mb);
    EXPECT_LT(max_abs_diff(c.matrix_view(3), a * b), 1e-12);

    const DenseTensor x = rng.tensor({2, 3, 4});
    const std::vector<int> all = {1, 2, 3};
    const DenseTensor s = contract(x, x, all, all);
    EXPECT_EQ(s.dims(), (Dims{1}));
    EXPECT_NEAR(s[0], inner_product(x, x), 1e-12);

    const DenseTensor y = rng.tensor({4, 2, 6});
    const std::vector<int> xa = {3, 1};
    const std::vector<int> yb = {1, 2};
    const DenseTensor z = contract(x, y, xa, yb);
    EXPECT_EQ(z.dims(), (Dims{3, 6}));
    const DenseTensor oracle = DenseTensor::generate({3, 6}, [&](const MultiIndex& i) {
        double acc = 0.0;
        for (Index p = 1; p <= 4; ++p)
            for (Index q = 1; q <= 2; ++q)
                acc += x.at({q, i[0], p}) * y.at({p, q, i[1]});
        return acc;
    });
    EXPECT_LT(max_abs_diff(z, oracle), 1e-12);
    const std::vector<int> bad = {2};
    EXPECT_THROW(contract(x, y, bad, mb), ShapeError);
}

TEST(Products, KroneckerAndKhatriRao)
{
    Matrix a(2, 1);
    a << 1, 2;
    Matrix b(2, 1);
    b << 3, 4;
    Matrix expect(4, 1);
    expect << 3, 4, 6, 8;
    EXPECT_EQ(kron(a, b), expect);
    EXPECT_EQ(khatri_rao(a, b), expect);

    Rng rng(8);
    const Matrix p = rng.matrix(2, 3);
    const Matrix q = rng.matrix(4, 3);
    const Matrix kr = khatri_rao(p, q);
    for (Index r = 0; r < 3; ++r)
        EXPECT_LT(max_abs_diff(kr.col(r), kron(p.col(r), q.col(r))), 1e-15);
    EXPECT_THROW(khatri_rao(p, rng.matrix(4, 2)), ShapeError);

    const Matrix h = hadamard(p, p);
    EXPECT_DOUBLE_EQ(h(1, 2), p(1, 2) * p(1, 2));
}

TEST(Products, OuterAndTensorKronecker)
{
    const DenseTensor a({2}, {1, 2});
    const DenseTensor b({3}, {1, 10, 100});
    const DenseTensor o = outer_product(a, b);
    EXPECT_EQ(o.dims(), (Dims{2, 3}));
    EXPECT_DOUBLE_EQ(o.at({2, 3}), 200.0);

    Rng rng(10);
    const DenseTensor x = rng.tensor({2, 3});
    const DenseTensor y = rng.tensor({3, 2});
    const DenseTensor k = kron_tensor(x, y);
    EXPECT_EQ(k.dims(), (Dims{6, 6}));
    EXPECT_LT(max_abs_diff(k.matrix_view(6), kron(x.matrix_view(2), y.matrix_view(3))), 1e-15);
    // lower-order operand is padded with trailing singleton modes
    const DenseTensor padded = kron_tensor(rng.tensor({2, 2, 2}), DenseTensor({3}, {1, 2, 3}));
    EXPECT_EQ(padded.dims(), (Dims{6, 2, 2}));
}

TEST(Products, StrongKroneckerOfBlockMatrices)
{
    Rng rng(11);
    std::vector<Matrix> ab;
    std::vector<Matrix> bb;
    for (int k = 0; k < 2 * 3; ++k)
        ab.push_back(rng.matrix(2, 2));
    for (int k = 0; k < 3 * 1; ++k)
        bb.push_back(rng.matrix(3, 1));
    const BlockMatrix a(2, 3, ab);
    const BlockMatrix b(3, 1, bb);
    const BlockMatrix c = strong_kron(a, b);
    EXPECT_EQ(c.grid_rows(), 2);
    EXPECT_EQ(c.grid_cols(), 1);
    for (Index r = 0; r < 2; ++r) {
        Matrix expect = Matrix::Zero(6, 2);
        for (Index k = 0; k < 3; ++k)
            expect += kron(a.block(r, k), b.block(k, 0));
        EXPECT_LT(max_abs_diff(c.block(r, 0), expect), 1e-14);
    }
    EXPECT_THROW(strong_kron(b, b), ShapeError);
    EXPECT_THROW(BlockMatrix(1, 2, {rng.matrix(2, 2), rng.matrix(2, 3)}), ShapeError);
    EXPECT_EQ(assemble(c).rows(), 12);
}

TEST(Products, StrongKroneckerOfBlockTensors)
{
    Rng rng(12);
    std::vector<DenseTensor> ab;
    std::vector<DenseTensor> bb;
    for (int k = 0; k < 2; ++k)
        ab.push_back(rng.tensor({2, 1, 2}));
    for (int k = 0; k < 2; ++k)
        bb.push_back(rng.tensor({1, 3, 2}));
    const BlockTensor3 c = strong_kron_tensor3(BlockTensor3(1, 2, ab), BlockTensor3(2, 1, bb));
    const DenseTensor expect = kron_tensor(ab[0], bb[0]) + kron_tensor(ab[1], bb[1]);
    EXPECT_LT(max_abs_diff(c.block(0, 0), expect), 1e-14);
}

TEST(Linalg, PseudoInverseAndTruncation)
{
    Matrix m(3, 2);
    m << 1, 2, 2, 4, 3, 6;
    const PinvResult p = pinv_with_info(m);
    EXPECT_TRUE(p.truncated);
    EXPECT_EQ(p.rank, 1);
    EXPECT_LT(max_abs_diff(m * p.pinv * m, m), 1e-12);
    Vector s(4);
    s << 4, 3, 0.02, 0.01;
    EXPECT_EQ(truncation_rank(s, 0.03), 2);
    EXPECT_EQ(truncation_rank(s, 0.0), 4);
    EXPECT_EQ(truncation_rank(s, 100.0), 1);
    EXPECT_EQ(truncation_rank(s, 0.0, 3), 3);
}

TEST(Dten, RoundTripIsBitExact)
{
    Rng rng(13);
    const DenseTensor t = rng.tensor({3, 1, 4});
    std::stringstream ss;
    io::write_dten(ss, t);
    const std::string bytes = ss.str();
    EXPECT_EQ(bytes.substr(0, 4), "DTEN");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
    std::stringstream in(bytes);
    EXPECT_EQ(io::read_dten(in), t);
}

TEST(Dten, RejectsMalformedInput)
{
    std::stringstream bad_magic("XXXX");
    EXPECT_THROW(io::read_dten(bad_magic), FormatError);

    std::stringstream ss;
    io::write_dten(ss, DenseTensor({2, 2}, {1, 2, 3, 4}));
    std::string bytes = ss.str();
    std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
    EXPECT_THROW(io::read_dten(truncated), FormatError);
    std::stringstream trailing(bytes + "x");
    EXPECT_THROW(io::read_dten(trailing), FormatError);
    std::string broken = bytes;
    broken[12] = '[';
    std::stringstream bad_header(broken);
    EXPECT_THROW(io::read_dten(bad_header), FormatError);
    EXPECT_THROW(io::read_dten(std::string("/nonexistent/x.dten")), IoError);
}

TEST(Containers, ModelsRoundTrip)
{
    Rng rng(14);
    const CPModel cp = random_cp({3, 4, 2}, 2, 1);
    std::stringstream s1;
    io::write_container(s1, io::to_container(cp));
    const CPModel cp2 = io::cp_from_container(io::read_container(s1, "CPMD"));
    EXPECT_EQ(cp2.weights, cp.weights);
    EXPECT_EQ(cp_reconstruct(cp2), cp_reconstruct(cp));

    TuckerModel tk = random_tucker({4, 3, 5}, {2, 3, 2}, 2);
    tk.identity_modes = {false, true, false};
    tk.factors[1] = Matrix();
    std::stringstream s2;
    io::write_container(s2, io::to_container(tk));
    const TuckerModel tk2 = io::tucker_from_container(io::read_container(s2, "TKMD"));
    EXPECT_EQ(tucker_reconstruct(tk2), tucker_reconstruct(tk));

    const TTModel tt = random_tt({2, 3, 2}, {2, 2}, 3);
    std::stringstream s3;
    io::write_container(s3, io::to_container(tt));
    const io::Container c3 = io::read_container(s3, "TTMD");
    EXPECT_EQ(c3.header["ranks"], (std::vector<Index>{2, 2}));
    EXPECT_EQ(tt_reconstruct(io::tt_from_container(c3)), tt_reconstruct(tt));
    EXPECT_THROW(io::ttm_from_container(c3), FormatError);

    std::stringstream s4;
    io::write_container(s4, io::to_container(tt));
    EXPECT_THROW(io::read_container(s4, "CPMD"), FormatError);
}
