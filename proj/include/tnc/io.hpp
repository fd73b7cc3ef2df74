#pragma once

// Binary containers. Every file is
//   4-byte magic | u32 LE version | u32 LE header length | UTF-8 JSON header
//   | little-endian f64 payloads
// .dten holds one tensor in canonical layout; model containers (.cpm, .tkm,
// .ttm, .hop) list their payload shapes under "payloads" in the header.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tnc/block_models.hpp"
#include "tnc/cpd.hpp"
#include "tnc/error.hpp"
#include "tnc/quantize.hpp"
#include "tnc/tensor.hpp"
#include "tnc/tt.hpp"
#include "tnc/tucker.hpp"

namespace tnc::io {

using json = nlohmann::json;

inline constexpr std::uint32_t kFormatVersion = 1;

struct Container {
    std::string magic;
    json header;
    std::vector<DenseTensor> payloads;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v)
{
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is)
{
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw FormatError("truncated container header");
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline void put_doubles(std::ostream& os, std::span<const double> v)
{
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    } else {
        for (double x : v) {
            unsigned char b[8];
            std::memcpy(b, &x, 8);
            std::reverse(b, b + 8);
            os.write(reinterpret_cast<const char*>(b), 8);
        }
    }
}

inline std::vector<double> get_doubles(std::istream& is, Index n)
{
    std::vector<double> v(static_cast<std::size_t>(n));
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double))))
        throw FormatError("payload shorter than its declared dims");
    if constexpr (std::endian::native != std::endian::little) {
        for (auto& x : v) {
            unsigned char b[8];
            std::memcpy(b, &x, 8);
            std::reverse(b, b + 8);
            std::memcpy(&x, b, 8);
        }
    }
    return v;
}

inline Dims dims_from(const json& j, const char* what)
{
    if (!j.is_array() || j.empty())
        throw FormatError(std::string("header field '") + what + "' must be a non-empty array");
    Dims d;
    for (const auto& x : j) {
        if (!x.is_number_integer() || x.get<Index>() < 1)
            throw FormatError(std::string("header field '") + what + "' must hold positive integers");
        d.push_back(x.get<Index>());
    }
    return d;
}

template <class T>
T field(const json& h, const char* key)
{
    if (!h.contains(key))
        throw FormatError(std::string("header lacks field '") + key + "'");
    try {
        return h.at(key).get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("header field '") + key + "': " + e.what());
    }
}

} // namespace detail

inline void write_container(std::ostream& os, const Container& c)
{
    if (c.magic.size() != 4)
        throw FormatError("container magic must be 4 bytes");
    json header = c.header;
    header["payloads"] = json::array();
    for (const auto& p : c.payloads)
        header["payloads"].push_back(p.dims());
    const std::string text = header.dump();
    os.write(c.magic.data(), 4);
    detail::put_u32(os, kFormatVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : c.payloads)
        detail::put_doubles(os, p.data());
    if (!os)
        throw IoError("write failed");
}

inline Container read_container(std::istream& is, const std::string& expected_magic)
{
    Container c;
    c.magic.resize(4);
    if (!is.read(c.magic.data(), 4))
        throw FormatError("file too short for a container");
    if (c.magic != expected_magic)
        throw FormatError("bad magic '" + c.magic + "', expected '" + expected_magic + "'");
    const std::uint32_t version = detail::get_u32(is);
    if (version != kFormatVersion)
        throw FormatError("unsupported container version " + std::to_string(version));
    const std::uint32_t len = detail::get_u32(is);
    std::string text(len, '\0');
    if (!is.read(text.data(), len))
        throw FormatError("truncated container header");
    try {
        c.header = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    }
    if (!c.header.is_object())
        throw FormatError("header must be a JSON object");
    const json payloads = c.header.value("payloads", json::array());
    if (!payloads.is_array())
        throw FormatError("header field 'payloads' must be an array");
    for (const auto& p : payloads) {
        Dims d = detail::dims_from(p, "payloads");
        const Index n = num_elements(d);
        c.payloads.emplace_back(std::move(d), detail::get_doubles(is, n));
    }
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after the declared payloads");
    return c;
}

inline void write_container(const std::string& path, const Container& c)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open '" + path + "' for writing");
    write_container(os, c);
}

inline Container read_container(const std::string& path, const std::string& expected_magic)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path + "'");
    return read_container(is, expected_magic);
}

// Reads the magic of a file without parsing the rest.
inline std::string peek_magic(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path + "'");
    std::string m(4, '\0');
    if (!is.read(m.data(), 4))
        throw FormatError("file too short for a container");
    return m;
}

// .dten: the header declares the tensor and the payload follows directly.
inline void write_dten(std::ostream& os, const DenseTensor& t)
{
    const json header = {{"order", t.order()}, {"dims", t.dims()}, {"scalar", "f64"}, {"convention", "little-endian"}};
    const std::string text = header.dump();
    os.write("DTEN", 4);
    detail::put_u32(os, kFormatVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    detail::put_doubles(os, t.data());
    if (!os)
        throw IoError("write failed");
}

inline DenseTensor read_dten(std::istream& is)
{
    std::string magic(4, '\0');
    if (!is.read(magic.data(), 4) || magic != "DTEN")
        throw FormatError("not a .dten file (bad magic)");
    const std::uint32_t version = detail::get_u32(is);
    if (version != kFormatVersion)
        throw FormatError("unsupported .dten version " + std::to_string(version));
    const std::uint32_t len = detail::get_u32(is);
    std::string text(len, '\0');
    if (!is.read(text.data(), len))
        throw FormatError("truncated .dten header");
    json h;
    try {
        h = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed .dten header: ") + e.what());
    }
    if (!h.is_object())
        throw FormatError(".dten header must be a JSON object");
    if (detail::field<std::string>(h, "scalar") != "f64")
        throw FormatError("unsupported scalar type");
    if (detail::field<std::string>(h, "convention") != "little-endian")
        throw FormatError("unsupported index convention");
    if (!h.contains("dims"))
        throw FormatError("header lacks field 'dims'");
    Dims dims = detail::dims_from(h["dims"], "dims");
    if (detail::field<std::size_t>(h, "order") != dims.size())
        throw FormatError("declared order does not match dims");
    const Index n = num_elements(dims);
    std::vector<double> data = detail::get_doubles(is, n);
    if (is.peek() != std::char_traits<char>::eof())
        throw FormatError("trailing bytes after .dten payload");
    return DenseTensor(std::move(dims), std::move(data));
}

inline void write_dten(const std::string& path, const DenseTensor& t)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open '" + path + "' for writing");
    write_dten(os, t);
}

inline DenseTensor read_dten(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open '" + path + "'");
    return read_dten(is);
}

// ---- CP (.cpm)

inline Container to_container(const CPModel& m)
{
    validate(m);
    Container c{"CPMD", {}, {}};
    c.header = {{"kind", "cpd"}, {"rank", m.rank()}, {"dims", m.dims()},
                {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())}};
    for (const auto& f : m.factors)
        c.payloads.push_back(DenseTensor::from_matrix(f));
    return c;
}

inline CPModel cp_from_container(const Container& c)
{
    const auto w = detail::field<std::vector<double>>(c.header, "weights");
    const Dims dims = detail::dims_from(c.header.value("dims", json()), "dims");
    if (c.payloads.size() != dims.size())
        throw FormatError("CP container needs one factor payload per mode");
    CPModel m;
    m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
    for (const auto& p : c.payloads) {
        if (p.order() != 2)
            throw FormatError("CP factor payloads must be matrices");
        m.factors.push_back(p.matrix_view(p.dims()[0]));
    }
    try {
        validate(m);
    } catch (const ShapeError& e) {
        throw FormatError(e.what());
    }
    if (m.dims() != dims)
        throw FormatError("CP factor shapes disagree with declared dims");
    return m;
}

// ---- Tucker (.tkm)

inline Container to_container(const TuckerModel& m)
{
    validate(m);
    Container c{"TKMD", {}, {}};
    std::vector<bool> ident(m.order());
    for (std::size_t n = 0; n < m.order(); ++n)
        ident[n] = m.is_identity(n);
    c.header = {{"kind", "tucker"}, {"dims", m.dims()}, {"ranks", m.ranks()}, {"identity_modes", ident}};
    c.payloads.push_back(m.core);
    for (std::size_t n = 0; n < m.order(); ++n)
        if (!m.is_identity(n))
            c.payloads.push_back(DenseTensor::from_matrix(m.factors[n]));
    return c;
}

inline TuckerModel tucker_from_container(const Container& c)
{
    const auto ident = detail::field<std::vector<bool>>(c.header, "identity_modes");
    if (c.payloads.empty())
        throw FormatError("Tucker container lacks a core payload");
    TuckerModel m;
    m.core = c.payloads[0];
    if (ident.size() != m.core.order())
        throw FormatError("identity-mode markers must cover every core mode");
    m.identity_modes = ident;
    std::size_t next = 1;
    for (std::size_t n = 0; n < ident.size(); ++n) {
        if (ident[n]) {
            m.factors.emplace_back();
            continue;
        }
        if (next >= c.payloads.size() || c.payloads[next].order() != 2)
            throw FormatError("Tucker container is missing factor " + std::to_string(n + 1));
        const auto& p = c.payloads[next++];
        m.factors.push_back(p.matrix_view(p.dims()[0]));
    }
    if (next != c.payloads.size())
        throw FormatError("Tucker container has extra payloads");
    try {
        validate(m);
    } catch (const ShapeError& e) {
        throw FormatError(e.what());
    }
    return m;
}

// ---- TT (.ttm), MPS or MPO, with an optional quantization block

inline json scheme_to_json(const QuantizationScheme& s)
{
    return {{"original", s.original}, {"factors", s.factors}, {"interleaved", s.interleaved}, {"q", s.q}};
}

inline QuantizationScheme scheme_from_json(const json& j)
{
    QuantizationScheme s;
    s.original = detail::dims_from(j.value("original", json()), "original");
    s.factors = detail::field<std::vector<std::vector<Index>>>(j, "factors");
    s.interleaved = detail::field<bool>(j, "interleaved");
    s.q = detail::field<Index>(j, "q");
    try {
        validate(s);
    } catch (const ShapeError& e) {
        throw FormatError(e.what());
    }
    return s;
}

inline Container to_container(const TTModel& m, const std::optional<QuantizationScheme>& scheme = std::nullopt)
{
    validate(m);
    Container c{"TTMD", {}, {}};
    c.header = {{"kind", "tt"},
                {"variant", "mps"},
                {"N", m.order()},
                {"dims", m.dims()},
                {"ranks", m.ranks()},
                {"canonical", {{"left_orthogonal_through", m.left_orthogonal_through},
                               {"right_orthogonal_from", m.right_orthogonal_from}}}};
    if (scheme)
        c.header["quantization"] = scheme_to_json(*scheme);
    c.payloads = m.cores;
    return c;
}

inline Container to_container(const TTMatrixModel& m)
{
    validate(m);
    Container c{"TTMD", {}, {}};
    c.header = {{"kind", "tt"},      {"variant", "mpo"},        {"N", m.order()},
                {"dims", m.row_dims()}, {"col_dims", m.col_dims()}, {"ranks", m.ranks()}};
    c.payloads = m.cores;
    return c;
}

inline std::string tt_variant(const Container& c) { return detail::field<std::string>(c.header, "variant"); }

inline TTModel tt_from_container(const Container& c)
{
    if (tt_variant(c) != "mps")
        throw FormatError("container holds a TT-matrix, not a TT-vector");
    TTModel m;
    m.cores = c.payloads;
    const json canon = c.header.value("canonical", json::object());
    m.left_orthogonal_through = canon.value("left_orthogonal_through", 0);
    m.right_orthogonal_from = canon.value("right_orthogonal_from", static_cast<int>(m.cores.size()) + 1);
    try {
        validate(m);
    } catch (const ShapeError& e) {
        throw FormatError(e.what());
    }
    if (m.dims() != detail::dims_from(c.header.value("dims", json()), "dims"))
        throw FormatError("TT core shapes disagree with declared dims");
    return m;
}

inline TTMatrixModel ttm_from_container(const Container& c)
{
    if (tt_variant(c) != "mpo")
        throw FormatError("container holds a TT-vector, not a TT-matrix");
    TTMatrixModel m;
    m.cores = c.payloads;
    try {
        validate(m);
    } catch (const ShapeError& e) {
        throw FormatError(e.what());
    }
    return m;
}

inline std::optional<QuantizationScheme> tt_scheme(const Container& c)
{
    if (!c.header.contains("quantization"))
        return std::nullopt;
    return scheme_from_json(c.header["quantization"]);
}

// ---- HOPTA (.hop): the tree is JSON, leaves reference payloads by position

namespace detail {

inline json hopta_tree(const HOPTANode& node, std::vector<DenseTensor>& payloads)
{
    if (node.leaf) {
        payloads.push_back(*node.leaf);
        return {{"leaf", payloads.size() - 1}};
    }
    json terms = json::array();
    for (const auto& t : node.terms) {
        json factors = json::array();
        for (const auto& f : t.factors)
            factors.push_back(hopta_tree(f, payloads));
        terms.push_back(std::move(factors));
    }
    return {{"terms", std::move(terms)}};
}

inline HOPTANode hopta_node(const json& j, const std::vector<DenseTensor>& payloads, int depth)
{
    if (depth > 64)
        throw FormatError("HOPTA tree too deep");
    if (!j.is_object())
        throw FormatError("HOPTA node must be an object");
    if (j.contains("leaf")) {
        const auto k = field<std::size_t>(j, "leaf");
        if (k >= payloads.size())
            throw FormatError("HOPTA leaf references missing payload " + std::to_string(k));
        return HOPTANode::make_leaf(payloads[k]);
    }
    const json terms = j.value("terms", json());
    if (!terms.is_array() || terms.empty())
        throw FormatError("HOPTA node needs a leaf or a non-empty term list");
    std::vector<HoptaTerm> out;
    for (const auto& t : terms) {
        if (!t.is_array())
            throw FormatError("HOPTA term must be an array of factors");
        HoptaTerm term;
        for (const auto& f : t)
            term.factors.push_back(hopta_node(f, payloads, depth + 1));
        out.push_back(std::move(term));
    }
    return HOPTANode::make_sum(std::move(out));
}

} // namespace detail

inline Container to_container(const HOPTANode& root)
{
    Container c{"HOPD", {}, {}};
    c.header = {{"kind", "hopta"}};
    c.header["tree"] = detail::hopta_tree(root, c.payloads);
    return c;
}

inline HOPTANode hopta_from_container(const Container& c)
{
    if (!c.header.contains("tree"))
        throw FormatError("HOPTA container lacks a tree");
    return detail::hopta_node(c.header["tree"], c.payloads, 0);
}

// ---- FSTD sidecar: selected fiber indices next to the Tucker container

inline void write_index_sidecar(const std::string& path, const std::vector<std::vector<Index>>& indices)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open '" + path + "' for writing");
    os << json{{"kind", "fstd-indices"}, {"base", 1}, {"indices", indices}}.dump(2) << '\n';
}

inline std::vector<std::vector<Index>> read_index_sidecar(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open '" + path + "'");
    try {
        return json::parse(is).at("indices").get<std::vector<std::vector<Index>>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed index sidecar: ") + e.what());
    }
}

} // namespace tnc::io
