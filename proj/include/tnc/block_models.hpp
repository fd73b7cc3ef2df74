#pragma once

// Kronecker tensor decomposition (sum of Kronecker products of tensor pairs)
// and hierarchical outer-product models, reconstruction and storage only.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tnc/multilinear.hpp"
#include "tnc/tensor.hpp"

namespace tnc {

struct KTDModel {
    std::vector<std::pair<DenseTensor, DenseTensor>> terms;
};

inline Dims ktd_dims(const KTDModel& m)
{
    if (m.terms.empty())
        throw ShapeError("KTD model has no terms");
    Dims out;
    for (std::size_t r = 0; r < m.terms.size(); ++r) {
        const auto& [a, b] = m.terms[r];
        if (a.order() != b.order())
            throw ShapeError("KTD term " + std::to_string(r + 1) + " pairs tensors of order " +
                             std::to_string(a.order()) + " and " + std::to_string(b.order()));
        Dims d;
        for (std::size_t n = 0; n < a.order(); ++n)
            d.push_back(a.dims()[n] * b.dims()[n]);
        if (r == 0)
            out = d;
        else if (d != out)
            throw ShapeError("KTD term " + std::to_string(r + 1) + " produces dims " + dims_to_string(d) +
                             ", expected " + dims_to_string(out));
    }
    return out;
}

inline void validate(const KTDModel& m) { ktd_dims(m); }

inline DenseTensor ktd_reconstruct(const KTDModel& m)
{
    DenseTensor acc(ktd_dims(m));
    for (const auto& [a, b] : m.terms)
        acc = acc + kron_tensor(a, b);
    return acc;
}

inline Index model_storage(const KTDModel& m)
{
    Index n = 0;
    for (const auto& [a, b] : m.terms)
        n += a.size() + b.size();
    return n;
}

struct HOPTANode;

// One summand: the outer product of 2 or 3 child models.
struct HoptaTerm {
    std::vector<HOPTANode> factors;
};

struct HOPTANode {
    std::optional<DenseTensor> leaf;
    std::vector<HoptaTerm> terms;

    static HOPTANode make_leaf(DenseTensor t)
    {
        HOPTANode n;
        n.leaf = std::move(t);
        return n;
    }
    static HOPTANode make_sum(std::vector<HoptaTerm> terms)
    {
        HOPTANode n;
        n.terms = std::move(terms);
        return n;
    }
};

inline DenseTensor hopta_reconstruct(const HOPTANode& node)
{
    if (node.leaf) {
        if (!node.terms.empty())
            throw ShapeError("HOPTA node cannot be both a leaf and a sum");
        return *node.leaf;
    }
    if (node.terms.empty())
        throw ShapeError("HOPTA node has neither a leaf nor terms");
    std::optional<DenseTensor> acc;
    for (std::size_t r = 0; r < node.terms.size(); ++r) {
        const auto& f = node.terms[r].factors;
        if (f.size() < 2 || f.size() > 3)
            throw ShapeError("HOPTA term " + std::to_string(r + 1) + " has " + std::to_string(f.size()) +
                             " factors; 2 or 3 are allowed");
        DenseTensor term = hopta_reconstruct(f[0]);
        for (std::size_t k = 1; k < f.size(); ++k)
            term = outer_product(term, hopta_reconstruct(f[k]));
        if (acc && acc->dims() != term.dims())
            throw ShapeError("HOPTA term " + std::to_string(r + 1) + " has dims " + dims_to_string(term.dims()) +
                             ", expected " + dims_to_string(acc->dims()));
        acc = acc ? *acc + term : std::move(term);
    }
    return *acc;
}

inline Index model_storage(const HOPTANode& node)
{
    if (node.leaf)
        return node.leaf->size();
    Index n = 0;
    for (const auto& t : node.terms)
        for (const auto& f : t.factors)
            n += model_storage(f);
    return n;
}

} // namespace tnc
