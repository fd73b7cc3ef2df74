#include <gtest/gtest.h>

#include <set>

#include "helpers.hpp"

using namespace tnc;
using tnc::testkit::max_abs_diff;

// ---------- CP

TEST(Cp, ReconstructMatchesEntrywiseSum)
{
    const CPModel m = random_cp({3, 4, 2}, 3, 21);
    EXPECT_LT(max_abs_diff(cp_reconstruct(m), testkit::naive_cp(m.factors, m.weights)), 1e-13);

    CPModel zero = m;
    zero.weights.setZero();
    EXPECT_DOUBLE_EQ(frobenius_norm(cp_reconstruct(zero)), 0.0);

    CPModel unit;
    unit.weights = Vector::Ones(1);
    for (Index d : {3, 4, 5}) {
        Matrix f = Matrix::Zero(d, 1);
        f(d - 1, 0) = 1.0;
        unit.factors.push_back(f);
    }
    EXPECT_DOUBLE_EQ(frobenius_norm(cp_reconstruct(unit)), 1.0);
}

TEST(Cp, UnfoldedFormBothConventions)
{
    const CPModel m = random_cp({3, 4, 2, 3}, 3, 22);
    const DenseTensor t = cp_reconstruct(m);
    for (int n = 1; n <= 4; ++n) {
        EXPECT_LT(max_abs_diff(cp_unfolded(m, n), unfold(t, n)), 1e-12) << "mode " << n;
        // big-endian columns: remaining modes with the last fastest
        std::vector<int> rest;
        for (int k = 1; k <= 4; ++k)
            if (k != n)
                rest.push_back(k);
        const Matrix be = unfold_general(t, {{n}, rest, Convention::big_endian});
        EXPECT_LT(max_abs_diff(cp_unfolded(m, n, Convention::big_endian), be), 1e-12) << "mode " << n;
    }
}

TEST(Cp, ReconstructInvariantUnderColumnPermutation)
{
    CPModel m = random_cp({3, 3, 3}, 3, 23);
    m.weights << 1.0, 2.0, 3.0;
    CPModel p = m;
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(3);
    perm.indices() << 2, 0, 1;
    p.weights = perm * m.weights;
    for (auto& f : p.factors)
        f = f * perm.transpose();
    EXPECT_LT(max_abs_diff(cp_reconstruct(m), cp_reconstruct(p)), 1e-13);
}

TEST(Cp, NormalizeIsIdempotentAndPreservesTensor)
{
    const CPModel m = random_cp({4, 3, 5}, 2, 24);
    const CPModel n1 = normalize(m);
    const CPModel n2 = normalize(n1);
    EXPECT_LT(max_abs_diff(cp_reconstruct(n1), cp_reconstruct(m)), 1e-12);
    EXPECT_LT((n1.weights - n2.weights).cwiseAbs().maxCoeff(), 1e-14);
    for (std::size_t k = 0; k < 3; ++k)
        EXPECT_LT(max_abs_diff(n1.factors[k], n2.factors[k]), 1e-14);
    EXPECT_TRUE((n1.weights.array() >= 0.0).all());
}

TEST(Cp, FitOfPerfectAndZeroModels)
{
    const CPModel m = random_cp({3, 3, 3}, 2, 25);
    const DenseTensor t = cp_reconstruct(m);
    EXPECT_NEAR(cp_fit(t, m), 1.0, 1e-14);
    CPModel z = m;
    z.weights.setZero();
    EXPECT_NEAR(cp_fit(t, z), 0.0, 1e-14);
    EXPECT_THROW(cp_fit(DenseTensor({3, 3, 3}), m), SpecError);
    const DenseTensor r = random_tensor({3, 3, 3}, 5);
    EXPECT_NEAR(cp_fit(r, m), 1.0 - frobenius_norm(r - t) / frobenius_norm(r), 1e-14);
}

TEST(CpAls, RankOneSolvedQuickly)
{
    const DenseTensor t = cp_reconstruct(random_cp({4, 5, 3}, 1, 26));
    CpAlsOptions o;
    o.max_iters = 10;
    const CpAlsResult r = cp_als(t, 1, o);
    EXPECT_GE(r.diagnostics.fit_history.back(), 1.0 - 1e-10);
    EXPECT_LE(r.diagnostics.iterations, 10);
}

TEST(CpAls, FitNonDecreasingAndStartsDeterministic)
{
    const DenseTensor t = random_tensor({5, 4, 6}, 27);
    CpAlsOptions o;
    o.max_iters = 60;
    o.n_starts = 3;
    o.seed = 4;
    const CpAlsResult a = cp_als(t, 3, o);
    const auto& h = a.diagnostics.fit_history;
    for (std::size_t k = 1; k < h.size(); ++k)
        EXPECT_GE(h[k], h[k - 1] - 1e-12) << "sweep " << k;
    EXPECT_EQ(a.diagnostics.start_fits.size(), 3u);
    o.threads = 3;
    const CpAlsResult b = cp_als(t, 3, o);
    EXPECT_EQ(a.diagnostics.start_fits, b.diagnostics.start_fits);
    EXPECT_EQ(cp_reconstruct(a.model), cp_reconstruct(b.model));
}

TEST(CpAls, DiagonalTuckerCoreEqualsCp)
{
    Rng rng(28);
    const Index r = 2;
    TuckerModel tk;
    tk.core = DenseTensor::generate({r, r, r}, [](const MultiIndex& i) {
        return i[0] == i[1] && i[1] == i[2] ? 1.0 + static_cast<double>(i[0]) : 0.0;
    });
    CPModel cp;
    cp.weights = Vector(r);
    cp.weights << 2.0, 3.0;
    for (Index d : {5, 4, 6}) {
        tk.factors.push_back(rng.matrix(d, r));
        cp.factors.push_back(tk.factors.back());
    }
    tk.identity_modes.assign(3, false);
    const DenseTensor t = tucker_reconstruct(tk);
    EXPECT_LT(max_abs_diff(t, cp_reconstruct(cp)), 1e-12);
    CpAlsOptions o;
    o.n_starts = 3;
    EXPECT_NEAR(cp_als(t, r, o).diagnostics.fit_history.back(), cp_fit(t, cp), 1e-6);
}

TEST(CpAls, OverfactoringFlaggedAndErrors)
{
    const DenseTensor t = cp_reconstruct(random_cp({3, 3, 3}, 1, 29));
    CpAlsOptions o;
    o.max_iters = 5;
    EXPECT_TRUE(cp_als(t, 2, o).diagnostics.overfactored);
    EXPECT_THROW(cp_als(DenseTensor({2, 2}), 1), SpecError);
    EXPECT_THROW(cp_als(t, 0), SpecError);
}

// ---------- Tucker

TEST(Tucker, KroneckerVecIdentity)
{
    const TuckerModel m = random_tucker({3, 4, 2}, {2, 3, 2}, 31);
    const DenseTensor t = tucker_reconstruct(m);
    const Matrix k = kron(kron(m.factors[0], m.factors[1]), m.factors[2]);
    EXPECT_LT(max_abs_diff(testkit::naive_big_endian_vec(t), k * testkit::naive_big_endian_vec(m.core)), 1e-12);
    // little-endian form pairs the factors in reverse
    const Matrix kl = kron(kron(m.factors[2], m.factors[1]), m.factors[0]);
    EXPECT_LT(max_abs_diff(vectorize(t), kl * vectorize(m.core)), 1e-12);
}

TEST(Tucker, IdentityFactorsGiveCore)
{
    TuckerModel m;
    m.core = random_tensor({2, 3, 2}, 32);
    m.factors.assign(3, Matrix());
    m.identity_modes.assign(3, true);
    EXPECT_EQ(tucker_reconstruct(m), m.core);
    EXPECT_EQ(tucker_storage(m), 12);
}

TEST(Hosvd, ExactRecoveryAndCoreShape)
{
    const DenseTensor t = testkit::low_multilinear_rank({10, 10, 10}, {2, 2, 2}, 33);
    HosvdOptions o;
    o.ranks = {2, 2, 2};
    const HosvdResult r = hosvd(t, o);
    EXPECT_EQ(r.model.core.dims(), (Dims{2, 2, 2}));
    EXPECT_LT(relative_error(t, tucker_reconstruct(r.model)), 1e-12);
}

TEST(Hosvd, RankOneCoreCarriesNorm)
{
    Rng rng(34);
    DenseTensor t = outer_product(outer_product(DenseTensor::from_vector(rng.matrix(4, 1).col(0)),
                                                DenseTensor::from_vector(rng.matrix(3, 1).col(0))),
                                  DenseTensor::from_vector(rng.matrix(5, 1).col(0)));
    HosvdOptions o;
    o.ranks = {1, 1, 1};
    const HosvdResult r = hosvd(t, o);
    EXPECT_NEAR(std::abs(r.model.core[0]), frobenius_norm(t), 1e-12 * frobenius_norm(t));
}

TEST(Hosvd, FullRankCoreIsAllOrthogonalAndNormPreserving)
{
    const DenseTensor t = random_tensor({4, 5, 3}, 35);
    const HosvdResult r = hosvd(t);
    EXPECT_EQ(r.model.core.dims(), t.dims());
    EXPECT_NEAR(frobenius_norm(r.model.core), frobenius_norm(t), 1e-12 * frobenius_norm(t));
    EXPECT_LT(relative_error(t, tucker_reconstruct(r.model)), 1e-12);
    const OrthogonalityReport rep = check_all_orthogonal(r.model.core);
    EXPECT_TRUE(rep.all_orthogonal);
    EXPECT_TRUE(rep.pseudo_diagonal);
    EXPECT_FALSE(check_all_orthogonal(random_tensor({3, 3, 3}, 36)).all_orthogonal);
    EXPECT_TRUE(check_all_orthogonal(DenseTensor({1, 1, 1}, {2.0})).all_orthogonal);
}

TEST(Hosvd, SingleModeTruncationErrorEqualsDiscardedSigma)
{
    const DenseTensor t = random_tensor({6, 5, 4}, 37);
    HosvdOptions o;
    o.ranks = {6, 3, 4};
    const HosvdResult r = hosvd(t, o);
    const Vector& s = r.singular_values[1];
    EXPECT_NEAR(frobenius_norm(t - tucker_reconstruct(r.model)), s.tail(s.size() - 3).norm(), 1e-10);
}

TEST(Hosvd, EpsBudgetRespectedAndIdentityModes)
{
    const DenseTensor t = random_tensor({6, 6, 6}, 38);
    for (double eps : {0.05, 0.2, 0.5}) {
        HosvdOptions o;
        o.eps = eps;
        const HosvdResult r = hosvd(t, o);
        EXPECT_LE(relative_error(t, tucker_reconstruct(r.model)), eps) << eps;
    }
    HosvdOptions o;
    o.ranks = {6, 2, 2};
    o.identity_modes = {1};
    const HosvdResult r = hosvd(t, o);
    EXPECT_TRUE(r.model.is_identity(0));
    EXPECT_EQ(tucker_storage(r.model), 6 * 2 * 2 + 6 * 2 + 6 * 2);
    o.ranks = {3, 2, 2};
    EXPECT_THROW(hosvd(t, o), SpecError);
    HosvdOptions bad;
    bad.eps = 1.0;
    EXPECT_THROW(hosvd(t, bad), SpecError);
}

TEST(Tucker, ProducerWithNonOrthogonalFactors)
{
    const DenseTensor t = testkit::low_multilinear_rank({6, 5, 4}, {2, 2, 2}, 39);
    Rng rng(40);
    // a producer returning a scrambled (non-orthogonal) basis of the leading subspace
    const FactorProducer skewed = [&rng](const Matrix& unf, Index rank) {
        const Matrix u = thin_svd(unf).U.leftCols(rank);
        return Matrix(u * (rng.matrix(rank, rank) + 3.0 * Matrix::Identity(rank, rank)));
    };
    const TuckerModel m = tucker_with_producer(t, {2, 2, 2}, skewed);
    EXPECT_LT(relative_error(t, tucker_reconstruct(m)), 1e-10);
}

TEST(GramSliced, MatchesDirectSvd)
{
    Rng rng(41);
    const Matrix x = rng.matrix(8, 1000);
    const SvdResult direct = thin_svd(x);
    for (Index q : {1, 10}) {
        const auto slice = [&x, q](Index k) {
            const Index c0 = k * x.cols() / q;
            const Index c1 = (k + 1) * x.cols() / q;
            return Matrix(x.middleCols(c0, c1 - c0));
        };
        const GramFactorResult g = factor_gram_sliced(8, q, slice, true);
        EXPECT_EQ(g.rank, 8);
        for (Index j = 0; j < 8; ++j) {
            const double sign = g.U.col(j).dot(direct.U.col(j)) < 0 ? -1.0 : 1.0;
            EXPECT_LT((g.U.col(j) - sign * direct.U.col(j)).cwiseAbs().maxCoeff(), 1e-8);
            EXPECT_NEAR(g.sigma(j) * g.sigma(j), direct.s(j) * direct.s(j), 1e-8 * direct.s(j) * direct.s(j));
        }
        // stacked V reproduces the right singular vectors
        Matrix v(1000, 8);
        Index row = 0;
        for (const auto& vq : g.V) {
            v.middleRows(row, vq.rows()) = vq;
            row += vq.rows();
        }
        EXPECT_LT(max_abs_diff(g.U * g.sigma.asDiagonal() * v.transpose(), x), 1e-9);
    }
}

TEST(GramSliced, TensorUnfoldingSlices)
{
    const DenseTensor t = random_tensor({3, 4, 5}, 42);
    for (int n = 1; n <= 3; ++n) {
        const Matrix full = unfold(t, n);
        const Index cols = full.cols();
        const auto provider = unfolding_slices(t, n, 3);
        Matrix stacked(full.rows(), 0);
        for (Index q = 0; q < 3; ++q) {
            const Matrix s = provider(q);
            stacked.conservativeResize(Eigen::NoChange, stacked.cols() + s.cols());
            stacked.rightCols(s.cols()) = s;
        }
        EXPECT_EQ(stacked.cols(), cols);
        EXPECT_EQ(stacked, full);
    }
}

TEST(Blockwise, CoreMatchesDenseForAnyOrder)
{
    const DenseTensor t = random_tensor({8, 8, 8}, 43);
    const HosvdResult h = hosvd(t);
    const std::vector<std::vector<Index>> splits = {{3, 5}, {4, 4}, {6, 2}};
    BlockedTensor x = partition(t, splits);
    EXPECT_EQ(assemble(x), t);
    for (int n = 1; n <= 3; ++n) {
        const Matrix ut = h.model.factors[static_cast<std::size_t>(n - 1)].transpose();
        const BlockedMatrix mb = partition(ut, {5, 3}, splits[static_cast<std::size_t>(n - 1)]);
        const std::vector<Index> rev = {1, 0};
        const DenseTensor a = assemble(core_blockwise(x, mb, n));
        const DenseTensor b = assemble(core_blockwise(x, mb, n, rev));
        const DenseTensor dense = mode_n_product(assemble(x), ut, n);
        EXPECT_LT(max_abs_diff(a, dense), 1e-12);
        EXPECT_LT(max_abs_diff(b, dense), 1e-12);
        x = core_blockwise(x, mb, n);
    }
    EXPECT_LT(max_abs_diff(assemble(x), h.model.core), 1e-12);
    const BlockedTensor single = partition(t, {{8}, {8}, {8}});
    const Matrix b = Rng(1).matrix(3, 8);
    EXPECT_LT(max_abs_diff(assemble(core_blockwise(single, partition(b, {3}, {8}), 2)), mode_n_product(t, b, 2)),
              1e-12);
}

TEST(SubtensorHosvd, ExactFromFewFibers)
{
    const DenseTensor t = testkit::low_multilinear_rank({30, 30, 30}, {2, 2, 2}, 44);
    const std::vector<std::vector<Index>> picks = {{4, 17, 29}, {2, 11, 23}, {7, 8, 30}};
    const TuckerModel m = hosvd_from_subtensors(t, picks);
    EXPECT_EQ(m.core.dims(), (Dims{2, 2, 2}));
    EXPECT_LT(relative_error(t, tucker_reconstruct(m)), 1e-8);
    EXPECT_TRUE(check_all_orthogonal(m.core).all_orthogonal);
}

TEST(SubtensorHosvd, FullPicksReduceToHosvd)
{
    const DenseTensor t = testkit::low_multilinear_rank({5, 4, 6}, {2, 3, 2}, 45);
    std::vector<std::vector<Index>> picks(3);
    for (std::size_t n = 0; n < 3; ++n)
        for (Index i = 1; i <= t.dims()[n]; ++i)
            picks[n].push_back(i);
    const TuckerModel m = hosvd_from_subtensors(t, picks);
    HosvdOptions o;
    o.ranks = {2, 3, 2};
    const TuckerModel h = hosvd(t, o).model;
    EXPECT_LT(relative_error(t, tucker_reconstruct(m)), 1e-10);
    // identical singular values of the cores' unfoldings
    for (int n = 1; n <= 3; ++n)
        EXPECT_LT((thin_svd(unfold(m.core, n)).s - thin_svd(unfold(h.core, n)).s).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(SubtensorHosvd, DeficientPicksRaise)
{
    // mode-1 structure lives only in rows 1 and 2; picking rows 5, 6 loses it
    Rng rng(46);
    Matrix a = Matrix::Zero(6, 2);
    a.topRows(2) = rng.matrix(2, 2);
    DenseTensor t = mode_n_product(testkit::low_multilinear_rank({2, 5, 5}, {2, 2, 2}, 47), a, 1);
    EXPECT_THROW(hosvd_from_subtensors(t, {{5, 6}, {1, 2}, {1, 2}}, {{2, 2, 2}, 1e-10}), SingularityError);
}

// ---------- CUR / FSTD

TEST(Cur, ExactForLowRank)
{
    Rng rng(51);
    const Matrix x = rng.matrix(50, 2) * rng.matrix(2, 40);
    const CURModel m = cur_decompose(x, {3, 17}, {5, 33});
    EXPECT_LT(max_abs_diff(m.reconstruct(), x) / x.norm(), 1e-10);
    EXPECT_FALSE(m.w_truncated);
    const Matrix sq = rng.matrix(4, 4);
    EXPECT_LT(max_abs_diff(cur_decompose(sq, {1, 2, 3, 4}, {1, 2, 3, 4}).reconstruct(), sq), 1e-12);
}

TEST(Cur, LeastSquaresNoWorseThanPinvW)
{
    Rng rng(52);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = rng.matrix(20, 3) * rng.matrix(3, 15) + 0.05 * rng.matrix(20, 15);
        const std::vector<Index> rows = {1, 7, 12, 19};
        const std::vector<Index> cols = {2, 5, 9, 14};
        const double e_w = (x - cur_decompose(x, rows, cols).reconstruct()).norm();
        const double e_ls = (x - cur_decompose(x, rows, cols, CurCore::least_squares).reconstruct()).norm();
        EXPECT_LE(e_ls, e_w + 1e-12);
    }
}

TEST(Cur, IndexValidation)
{
    const Matrix x = Matrix::Ones(4, 4);
    EXPECT_THROW(cur_decompose(x, {1, 1}, {1}), SpecError);
    EXPECT_THROW(cur_decompose(x, {5}, {1}), BoundsError);
    EXPECT_THROW(cur_decompose(x, {}, {1}), SpecError);
}

TEST(FiberSelect, RankOneFindsGlobalMax)
{
    Rng rng(53);
    const DenseTensor t = outer_product(outer_product(DenseTensor::from_vector(rng.matrix(7, 1).col(0)),
                                                      DenseTensor::from_vector(rng.matrix(6, 1).col(0))),
                                        DenseTensor::from_vector(rng.matrix(5, 1).col(0)));
    Index arg = 0;
    Eigen::Map<const Vector>(t.data().data(), t.size()).cwiseAbs().maxCoeff(&arg);
    const MultiIndex at = multi_index(arg, t.dims());
    const FiberSelection s = select_fibers_maxmod(t, {1, 1, 1});
    ASSERT_EQ(s.pivots, 1);
    for (std::size_t n = 0; n < 3; ++n)
        EXPECT_EQ(s.indices[n], std::vector<Index>{at[n]});
    EXPECT_LT(s.entries_read, t.size());
}

TEST(FiberSelect, ZeroTensorStopsEarly)
{
    const FiberSelection s = select_fibers_maxmod(DenseTensor({4, 4, 4}), {2, 2, 2});
    EXPECT_TRUE(s.early_stop);
    for (const auto& l : s.indices)
        EXPECT_TRUE(l.empty());
    EXPECT_THROW(fstd(DenseTensor({4, 4, 4}), std::vector<Index>{2, 2, 2}), SingularityError);
}

TEST(FiberSelect, LowRankWGetsFullRankAndIsDeterministic)
{
    const DenseTensor t = testkit::low_multilinear_rank({10, 12, 9}, {2, 2, 2}, 54);
    FiberSelectOptions o;
    o.seed = 3;
    const FiberSelection a = select_fibers_maxmod(t, {2, 2, 2}, o);
    const FiberSelection b = select_fibers_maxmod(t, {2, 2, 2}, o);
    EXPECT_EQ(a.indices, b.indices);
    const DenseTensor w = gather(t, {a.indices[0], a.indices[1], a.indices[2]});
    for (int n = 1; n <= 3; ++n)
        EXPECT_EQ(numerical_rank(thin_svd(unfold(w, n)).s, 1e-10), 2) << "mode " << n;
    for (const auto& l : a.indices)
        EXPECT_EQ(std::set<Index>(l.begin(), l.end()).size(), l.size());
}

TEST(Fstd, ExactOnLowMultilinearRank)
{
    const DenseTensor t = testkit::low_multilinear_rank({20, 30, 20}, {2, 3, 2}, 55);
    const FstdResult r = fstd(t, std::vector<Index>{2, 3, 2});
    EXPECT_LT(relative_error(t, fstd_reconstruct(r.model)), 1e-8);
    EXPECT_LT(relative_error(t, tucker_reconstruct(r.model.tucker)), 1e-8);
    EXPECT_EQ(r.model.fibers[1].rows(), 30);
    EXPECT_EQ(r.model.fibers[1].cols(), 4);
}

TEST(Fstd, AllFibersExactForAnyTensor)
{
    const DenseTensor t = random_tensor({4, 3, 5}, 56);
    const FSTDModel m = fstd(t, {{1, 2, 3, 4}, {1, 2, 3}, {1, 2, 3, 4, 5}});
    EXPECT_LT(relative_error(t, fstd_reconstruct(m)), 1e-12);
}

TEST(Fstd, MatrixCaseEqualsCur)
{
    Rng rng(57);
    const Matrix x = rng.matrix(9, 3) * rng.matrix(3, 7);
    const std::vector<Index> rows = {2, 5, 8};
    const std::vector<Index> cols = {1, 4, 6};
    const FSTDModel f = fstd(DenseTensor::from_matrix(x), {rows, cols});
    const CURModel c = cur_decompose(x, rows, cols);
    EXPECT_LT(max_abs_diff(fstd_reconstruct(f).matrix_view(9), c.reconstruct()), 1e-10);
    EXPECT_LT(max_abs_diff(f.fibers[0], c.C), 0.0 + 1e-300);
}
