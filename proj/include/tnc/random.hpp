#pragma once

// Seeded synthetic models and tensors for tests, benches and the CLI.

#include <cstdint>
#include <random>
#include <vector>

#include "tnc/cpd.hpp"
#include "tnc/linalg.hpp"
#include "tnc/tensor.hpp"
#include "tnc/tt.hpp"
#include "tnc/tt_sweeps.hpp"
#include "tnc/tucker.hpp"

namespace tnc {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return gauss_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    Index integer(Index lo, Index hi) { return std::uniform_int_distribution<Index>(lo, hi)(engine_); }
    std::mt19937_64& engine() { return engine_; }

    Matrix matrix(Index rows, Index cols)
    {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i)
                m(i, j) = normal();
        return m;
    }

    Matrix orthonormal(Index rows, Index cols) { return thin_qr(matrix(rows, cols)).Q; }

    DenseTensor tensor(const Dims& dims)
    {
        return DenseTensor::generate(dims, [this](const MultiIndex&) { return normal(); });
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> gauss_;
};

inline DenseTensor random_tensor(const Dims& dims, std::uint64_t seed) { return Rng(seed).tensor(dims); }

inline CPModel random_cp(const Dims& dims, Index rank, std::uint64_t seed)
{
    Rng rng(seed);
    CPModel m;
    m.weights = Vector::Ones(rank);
    for (Index d : dims)
        m.factors.push_back(rng.matrix(d, rank));
    return m;
}

// Orthonormal factors around a Gaussian core.
inline TuckerModel random_tucker(const Dims& dims, const Dims& ranks, std::uint64_t seed)
{
    Rng rng(seed);
    TuckerModel m;
    m.core = rng.tensor(ranks);
    for (std::size_t n = 0; n < dims.size(); ++n)
        m.factors.push_back(rng.orthonormal(dims[n], ranks[n]));
    m.identity_modes.assign(dims.size(), false);
    return m;
}

inline TTModel random_tt(const Dims& dims, const std::vector<Index>& ranks, std::uint64_t seed)
{
    return detail::random_tt(dims, ranks, seed);
}

inline TTMatrixModel random_ttm(const Dims& rows, const Dims& cols, const std::vector<Index>& ranks,
                                std::uint64_t seed)
{
    Rng rng(seed);
    TTMatrixModel m;
    for (std::size_t n = 0; n < rows.size(); ++n) {
        const Index r0 = n == 0 ? 1 : ranks[n - 1];
        const Index r1 = n + 1 == rows.size() ? 1 : ranks[n];
        m.cores.push_back(rng.tensor({r0, rows[n], cols[n], r1}));
    }
    return m;
}

} // namespace tnc
