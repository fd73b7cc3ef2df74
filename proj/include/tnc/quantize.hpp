#pragma once

// Tensorization of vectors, matrices and tensors into quantized higher-order
// tensors, QTT compression, and the asymptotic storage formulas used by the
// bench reporter.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tnc/tensor.hpp"
#include "tnc/tt.hpp"

namespace tnc {

struct DimFactorization {
    std::vector<Index> factors;
    // I = q^K exactly.
    bool uniform = false;
    // Single factor that cannot be split further (prime, or 1).
    bool unquantizable = false;
};

// [q]*K when I = q^K, otherwise prime factors in ascending order.
inline DimFactorization factorize_dim(Index extent, Index q = 2)
{
    if (extent < 1)
        throw SpecError("dimension must be at least 1");
    if (q < 2)
        throw SpecError("quantization base must be at least 2");
    DimFactorization f;
    Index rest = extent;
    while (rest > 1 && rest % q == 0) {
        f.factors.push_back(q);
        rest /= q;
    }
    if (rest == 1 && !f.factors.empty()) {
        f.uniform = true;
        return f;
    }
    f.factors.clear();
    rest = extent;
    for (Index p = 2; p * p <= rest; ++p)
        while (rest % p == 0) {
            f.factors.push_back(p);
            rest /= p;
        }
    if (rest > 1 || f.factors.empty())
        f.factors.push_back(rest);
    f.unquantizable = f.factors.size() == 1;
    return f;
}

struct QuantizationScheme {
    Dims original;
    std::vector<std::vector<Index>> factors;
    // Virtual modes ordered by digit level across original modes instead of
    // mode by mode.
    bool interleaved = false;
    // Common base when every factor equals q; 0 otherwise.
    Index q = 0;

    // (original mode, digit level), 0-based, in virtual-mode order.
    std::vector<std::pair<std::size_t, std::size_t>> layout() const
    {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        if (!interleaved) {
            for (std::size_t n = 0; n < factors.size(); ++n)
                for (std::size_t k = 0; k < factors[n].size(); ++k)
                    out.emplace_back(n, k);
            return out;
        }
        std::size_t depth = 0;
        for (const auto& f : factors)
            depth = std::max(depth, f.size());
        for (std::size_t k = 0; k < depth; ++k)
            for (std::size_t n = 0; n < factors.size(); ++n)
                if (k < factors[n].size())
                    out.emplace_back(n, k);
        return out;
    }

    Dims virtual_dims() const
    {
        Dims d;
        for (const auto& [n, k] : layout())
            d.push_back(factors[n][k]);
        return d;
    }
};

inline void validate(const QuantizationScheme& s)
{
    if (s.factors.size() != s.original.size())
        throw ShapeError("quantization scheme lists " + std::to_string(s.factors.size()) + " modes for a tensor of order " +
                         std::to_string(s.original.size()));
    for (std::size_t n = 0; n < s.factors.size(); ++n) {
        if (s.factors[n].empty())
            throw ShapeError("quantization scheme has no factors for mode " + std::to_string(n + 1));
        Index p = 1;
        for (Index f : s.factors[n]) {
            if (f < 1)
                throw ShapeError("quantization factors must be positive");
            p *= f;
        }
        if (p != s.original[n])
            throw ShapeError("factors of mode " + std::to_string(n + 1) + " multiply to " + std::to_string(p) +
                             ", not " + std::to_string(s.original[n]));
    }
}

struct SchemeBuild {
    QuantizationScheme scheme;
    std::vector<std::string> warnings;
};

inline SchemeBuild make_scheme(const Dims& dims, Index q = 2, bool interleaved = false)
{
    check_dims(dims);
    SchemeBuild b;
    b.scheme.original = dims;
    b.scheme.interleaved = interleaved;
    bool all_q = true;
    for (std::size_t n = 0; n < dims.size(); ++n) {
        DimFactorization f = factorize_dim(dims[n], q);
        if (f.unquantizable)
            b.warnings.push_back("mode " + std::to_string(n + 1) + " of size " + std::to_string(dims[n]) +
                                 " cannot be quantized; kept as a single mode");
        else if (!f.uniform)
            b.warnings.push_back("mode " + std::to_string(n + 1) + " of size " + std::to_string(dims[n]) +
                                 " is not a power of " + std::to_string(q) + "; using mixed radix");
        for (Index x : f.factors)
            all_q = all_q && x == q;
        b.scheme.factors.push_back(std::move(f.factors));
    }
    b.scheme.q = all_q ? q : 0;
    return b;
}

namespace detail {

inline std::vector<int> interleave_perm(const QuantizationScheme& s)
{
    // position of (mode, level) in the mode-by-mode order
    std::vector<std::size_t> offset(s.factors.size(), 0);
    for (std::size_t n = 1; n < s.factors.size(); ++n)
        offset[n] = offset[n - 1] + s.factors[n - 1].size();
    std::vector<int> perm;
    for (const auto& [n, k] : s.layout())
        perm.push_back(static_cast<int>(offset[n] + k + 1));
    return perm;
}

inline Dims blocked_dims(const QuantizationScheme& s)
{
    Dims d;
    for (const auto& f : s.factors)
        d.insert(d.end(), f.begin(), f.end());
    return d;
}

} // namespace detail

// Relabels entries; digits are little-endian within each original mode.
inline DenseTensor tensorize(const DenseTensor& t, const QuantizationScheme& s)
{
    validate(s);
    if (t.dims() != s.original)
        throw ShapeError("tensor dims " + dims_to_string(t.dims()) + " do not match scheme dims " +
                         dims_to_string(s.original));
    DenseTensor blocked = t.reshaped(detail::blocked_dims(s));
    if (!s.interleaved)
        return blocked;
    return permute_modes(blocked, detail::interleave_perm(s));
}

inline DenseTensor tensorize(const Vector& v, const QuantizationScheme& s)
{
    return tensorize(DenseTensor::from_vector(v), s);
}

inline DenseTensor tensorize(const Matrix& m, const QuantizationScheme& s)
{
    return tensorize(DenseTensor::from_matrix(m), s);
}

inline DenseTensor detensorize(const DenseTensor& t, const QuantizationScheme& s)
{
    validate(s);
    if (t.dims() != s.virtual_dims())
        throw ShapeError("tensor dims " + dims_to_string(t.dims()) + " do not match the scheme's virtual dims " +
                         dims_to_string(s.virtual_dims()));
    if (!s.interleaved)
        return t.reshaped(s.original);
    const std::vector<int> perm = detail::interleave_perm(s);
    std::vector<int> inverse(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k)
        inverse[static_cast<std::size_t>(perm[k] - 1)] = static_cast<int>(k + 1);
    return permute_modes(t, inverse).reshaped(s.original);
}

enum class StorageFormat { cpd, tucker, tt, ttm, qtt };

inline StorageFormat parse_storage_format(const std::string& name)
{
    if (name == "cpd")
        return StorageFormat::cpd;
    if (name == "tucker")
        return StorageFormat::tucker;
    if (name == "tt" || name == "mps")
        return StorageFormat::tt;
    if (name == "ttm" || name == "mpo")
        return StorageFormat::ttm;
    if (name == "qtt")
        return StorageFormat::qtt;
    throw SpecError("unknown storage format '" + name + "'");
}

inline const char* format_name(StorageFormat f)
{
    switch (f) {
    case StorageFormat::cpd:
        return "cpd";
    case StorageFormat::tucker:
        return "tucker";
    case StorageFormat::tt:
        return "tt";
    case StorageFormat::ttm:
        return "ttm";
    case StorageFormat::qtt:
        return "qtt";
    }
    return "?";
}

// Leading-order parameter counts:
//   cpd N I R, tucker N I R + R^N, tt N I R^2, ttm N I^2 R^2,
//   qtt N q R^2 log_q(I).
inline double storage_complexity(StorageFormat format, Index n, Index i, Index r, Index q = 2)
{
    if (n < 1 || i < 1 || r < 1 || q < 2)
        throw SpecError("storage formula arguments must be positive (q >= 2)");
    const double N = static_cast<double>(n);
    const double I = static_cast<double>(i);
    const double R = static_cast<double>(r);
    switch (format) {
    case StorageFormat::cpd:
        return N * I * R;
    case StorageFormat::tucker:
        return N * I * R + std::pow(R, N);
    case StorageFormat::tt:
        return N * I * R * R;
    case StorageFormat::ttm:
        return N * I * I * R * R;
    case StorageFormat::qtt: {
        Index k = 0;
        Index rest = i;
        while (rest > 1 && rest % q == 0) {
            rest /= q;
            ++k;
        }
        const double levels = rest == 1 ? static_cast<double>(k) : std::log(I) / std::log(static_cast<double>(q));
        return N * static_cast<double>(q) * R * R * levels;
    }
    }
    throw SpecError("unknown storage format");
}

inline double storage_complexity(const std::string& format, Index n, Index i, Index r, Index q = 2)
{
    return storage_complexity(parse_storage_format(format), n, i, r, q);
}

struct QttResult {
    TTModel model;
    QuantizationScheme scheme;
    std::vector<SplitInfo> splits;
    std::vector<std::string> warnings;
    Index exact_params = 0;
    // Entries of the original data per stored parameter.
    double compression_ratio = 0.0;
};

// Tensorizes with base q, then runs TT-SVD with the given eps and rank caps.
inline QttResult qtt_compress(const DenseTensor& t, Index q, const TtSvdOptions& opts, bool interleaved = false)
{
    SchemeBuild b = make_scheme(t.dims(), q, interleaved);
    QttResult out;
    out.scheme = std::move(b.scheme);
    out.warnings = std::move(b.warnings);
    TtDecomposition d = tt_svd(tensorize(t, out.scheme), opts);
    out.model = std::move(d.model);
    out.splits = std::move(d.splits);
    out.exact_params = tt_storage(out.model);
    out.compression_ratio = static_cast<double>(t.size()) / static_cast<double>(out.exact_params);
    return out;
}

inline QttResult qtt_compress(const DenseTensor& t, Index q, double eps, bool interleaved = false)
{
    if (eps < 0.0 || eps >= 1.0)
        throw SpecError("eps must lie in [0, 1)");
    return qtt_compress(t, q, TtSvdOptions{eps, {}, false}, interleaved);
}

inline QttResult qtt_compress(const Vector& v, Index q, double eps)
{
    return qtt_compress(DenseTensor::from_vector(v), q, eps);
}

inline DenseTensor qtt_decompress(const TTModel& m, const QuantizationScheme& s, Index cap = kDefaultDenseCap)
{
    validate(s);
    if (m.dims() != s.virtual_dims())
        throw ShapeError("TT dims " + dims_to_string(m.dims()) + " do not match the scheme's virtual dims " +
                         dims_to_string(s.virtual_dims()));
    return detensorize(tt_reconstruct(m, cap), s);
}

} // namespace tnc
