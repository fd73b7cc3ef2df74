#pragma once

// Command implementations for the tnc front end. Kept in a header so the
// test suite can drive them in-process.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tnc/tnc.hpp"

namespace tnc::cli {

enum ExitCode : int { kOk = 0, kIoFailure = 1, kUsage = 2, kNumerical = 3 };

inline constexpr const char* kBenchHeader = "format,N,I,R,exact_params,asymptotic,rel_error,seconds";
inline constexpr const char* kReportHeader = "format,ranks,params,rel_error,seconds";

class UsageError : public Error {
public:
    using Error::Error;
};

struct JobConfig {
    std::string command;
    std::string input;
    std::string output;
    std::string against;
    std::string format;
    std::vector<Index> rank;
    std::optional<double> eps;
    Index q = 2;
    std::vector<Index> blocks;
    int max_iters = 500;
    double tol = 1e-12;
    std::uint64_t seed = 0;
    int n_starts = 1;
    bool deterministic = false;
    int threads = 1;
    Index order = 3;
    Index size = 8;
};

inline std::string num(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string join(const std::vector<Index>& v, char sep = 'x')
{
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k)
            s += sep;
        s += std::to_string(v[k]);
    }
    return s;
}

class Stopwatch {
public:
    explicit Stopwatch(bool zeroed) : zeroed_(zeroed), start_(std::chrono::steady_clock::now()) {}
    double seconds() const
    {
        if (zeroed_)
            return 0.0;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool zeroed_;
    std::chrono::steady_clock::time_point start_;
};

inline std::string seconds_text(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", s);
    return buf;
}

inline void print_report(std::ostream& out, const std::string& format, const std::vector<Index>& ranks, Index params,
                         double rel_error, double seconds)
{
    out << kReportHeader << '\n'
        << format << ',' << join(ranks) << ',' << params << ',' << num(rel_error) << ',' << seconds_text(seconds)
        << '\n';
}

// Single value broadcast to every mode, otherwise one per mode.
inline std::vector<Index> per_mode(const std::vector<Index>& v, std::size_t count, const char* what)
{
    if (v.size() == 1)
        return std::vector<Index>(count, v[0]);
    if (v.size() != count)
        throw UsageError(std::string(what) + " needs 1 or " + std::to_string(count) + " values, got " +
                         std::to_string(v.size()));
    return v;
}

inline void require_output(const JobConfig& cfg)
{
    if (cfg.output.empty())
        throw UsageError("--output is required");
    std::error_code ec;
    if (cfg.output == cfg.input ||
        (std::filesystem::exists(cfg.input) && std::filesystem::equivalent(cfg.input, cfg.output, ec)))
        throw UsageError("input and output paths must differ");
}

inline std::string sidecar_path(const std::string& model_path) { return model_path + ".idx.json"; }

inline int cmd_decompose(const JobConfig& cfg, std::ostream& out, std::ostream& err)
{
    require_output(cfg);
    const bool has_rank = !cfg.rank.empty();
    if (has_rank == cfg.eps.has_value())
        throw UsageError("decompose needs exactly one of --rank or --eps");
    if (!cfg.blocks.empty() && cfg.format != "tucker")
        throw UsageError("--blocks applies to the tucker format only");
    const DenseTensor t = io::read_dten(cfg.input);
    const std::size_t n_modes = t.order();
    Stopwatch clock(cfg.deterministic);
    int code = kOk;

    if (cfg.format == "cpd") {
        if (!has_rank || cfg.rank.size() != 1)
            throw UsageError("cpd needs a single --rank value");
        CpAlsOptions o;
        o.max_iters = cfg.max_iters;
        o.tol = cfg.tol;
        o.seed = cfg.seed;
        o.n_starts = cfg.n_starts;
        o.threads = cfg.threads;
        CpAlsResult r = cp_als(t, cfg.rank[0], o);
        const double secs = clock.seconds();
        io::write_container(cfg.output, io::to_container(r.model));
        print_report(out, "cpd", {r.model.rank()}, cp_storage(r.model), relative_error(t, cp_reconstruct(r.model)),
                     secs);
        if (r.diagnostics.overfactored)
            err << "warning: rank exceeds the numerical rank of some unfolding\n";
        if (!r.diagnostics.converged) {
            err << "error: CP-ALS did not converge in " << r.diagnostics.iterations << " sweeps (last fit "
                << num(r.diagnostics.fit_history.back()) << ", tol " << num(cfg.tol) << ")\n";
            code = kNumerical;
        }
    } else if (cfg.format == "tucker") {
        TuckerModel m;
        if (!cfg.blocks.empty()) {
            if (!has_rank)
                throw UsageError("--blocks needs --rank");
            const auto ranks = per_mode(cfg.rank, n_modes, "--rank");
            const auto slices = per_mode(cfg.blocks, n_modes, "--blocks");
            m.identity_modes.assign(n_modes, false);
            std::vector<std::optional<Matrix>> proj(n_modes);
            for (std::size_t n = 0; n < n_modes; ++n) {
                const int mode = static_cast<int>(n + 1);
                const Index cols = t.size() / t.dims()[n];
                if (ranks[n] < 1 || ranks[n] > t.dims()[n])
                    throw UsageError("rank of mode " + std::to_string(mode) + " must lie in [1, " +
                                     std::to_string(t.dims()[n]) + "]");
                const GramFactorResult g =
                    factor_gram_sliced(t.dims()[n], slices[n], unfolding_slices(t, mode, std::min(slices[n], cols)));
                m.factors.push_back(g.U.leftCols(ranks[n]));
                proj[n] = m.factors.back().transpose();
            }
            m.core = multilinear_product(t, proj);
        } else {
            HosvdOptions o;
            if (has_rank)
                o.ranks = per_mode(cfg.rank, n_modes, "--rank");
            o.eps = cfg.eps;
            m = hosvd(t, o).model;
        }
        const double secs = clock.seconds();
        io::write_container(cfg.output, io::to_container(m));
        print_report(out, "tucker", m.ranks(), tucker_storage(m), relative_error(t, tucker_reconstruct(m)), secs);
    } else if (cfg.format == "fstd") {
        if (!has_rank)
            throw UsageError("fstd needs --rank with the fiber count of every mode");
        FiberSelectOptions o;
        o.seed = cfg.seed;
        FstdResult r = fstd(t, per_mode(cfg.rank, n_modes, "--rank"), o);
        const double secs = clock.seconds();
        io::write_container(cfg.output, io::to_container(r.model.tucker));
        io::write_index_sidecar(sidecar_path(cfg.output), r.model.indices);
        print_report(out, "fstd", r.model.tucker.ranks(), tucker_storage(r.model.tucker),
                     relative_error(t, tucker_reconstruct(r.model.tucker)), secs);
        if (r.selection.early_stop)
            err << "warning: fiber selection stopped early; fewer fibers than requested\n";
        if (r.model.w_truncated)
            err << "warning: intersection tensor is rank deficient; pseudo-inverse truncated\n";
    } else if (cfg.format == "tt" || cfg.format == "qtt") {
        TtSvdOptions o;
        o.eps = cfg.eps;
        o.max_ranks = cfg.rank;
        TTModel m;
        std::optional<QuantizationScheme> scheme;
        if (cfg.format == "tt") {
            m = tt_svd(t, o).model;
        } else {
            if (cfg.q < 2)
                throw UsageError("--q must be at least 2");
            QttResult r = qtt_compress(t, cfg.q, o);
            for (const auto& w : r.warnings)
                err << "warning: " << w << '\n';
            m = std::move(r.model);
            scheme = std::move(r.scheme);
        }
        const double secs = clock.seconds();
        io::write_container(cfg.output, io::to_container(m, scheme));
        const DenseTensor back = scheme ? qtt_decompress(m, *scheme) : tt_reconstruct(m);
        print_report(out, cfg.format, m.ranks(), tt_storage(m), relative_error(t, back), secs);
    } else {
        throw UsageError("unknown --format '" + cfg.format + "' (cpd, tucker, fstd, tt, qtt)");
    }
    return code;
}

// Dense reconstruction of whatever model the container holds.
inline DenseTensor reconstruct_file(const std::string& path)
{
    const std::string magic = io::peek_magic(path);
    if (magic == "DTEN")
        throw UsageError("'" + path + "' is a tensor, not a model");
    if (magic == "CPMD")
        return cp_reconstruct(io::cp_from_container(io::read_container(path, magic)));
    if (magic == "TKMD")
        return tucker_reconstruct(io::tucker_from_container(io::read_container(path, magic)));
    if (magic == "HOPD")
        return hopta_reconstruct(io::hopta_from_container(io::read_container(path, magic)));
    if (magic == "TTMD") {
        const io::Container c = io::read_container(path, magic);
        if (io::tt_variant(c) == "mpo")
            return ttm_reconstruct(io::ttm_from_container(c));
        const TTModel m = io::tt_from_container(c);
        if (auto s = io::tt_scheme(c))
            return qtt_decompress(m, *s);
        return tt_reconstruct(m);
    }
    throw FormatError("unrecognized container magic '" + magic + "'");
}

inline int cmd_reconstruct(const JobConfig& cfg, std::ostream& out, std::ostream&)
{
    require_output(cfg);
    const DenseTensor t = reconstruct_file(cfg.input);
    io::write_dten(cfg.output, t);
    if (!cfg.against.empty()) {
        const DenseTensor ref = io::read_dten(cfg.against);
        if (ref.dims() != t.dims())
            throw UsageError("--against tensor has dims " + dims_to_string(ref.dims()) + ", model has " +
                             dims_to_string(t.dims()));
        out << "rel_error," << num(relative_error(ref, t)) << '\n';
    }
    return kOk;
}

inline int cmd_round(const JobConfig& cfg, std::ostream& out, std::ostream&)
{
    require_output(cfg);
    if (!cfg.rank.empty() && cfg.eps)
        throw UsageError("round takes --rank or --eps, not both");
    if (io::peek_magic(cfg.input) != "TTMD")
        throw UsageError("round needs a TT model container");
    const io::Container c = io::read_container(cfg.input, "TTMD");
    if (io::tt_variant(c) != "mps")
        throw UsageError("round supports TT-vector (MPS) models only");
    const TTModel m = io::tt_from_container(c);
    Stopwatch clock(cfg.deterministic);
    TtRoundOptions o;
    o.eps = cfg.eps.value_or(0.0);
    o.max_ranks = cfg.rank;
    const TtRoundResult r = tt_round(m, o);
    const double secs = clock.seconds();
    io::write_container(cfg.output, io::to_container(r.model, io::tt_scheme(c)));
    out << "format,old_ranks,new_ranks,params,seconds\n"
        << "tt," << join(m.ranks()) << ',' << join(r.model.ranks()) << ',' << tt_storage(r.model) << ','
        << seconds_text(secs) << '\n';
    return kOk;
}

inline int cmd_bench(const JobConfig& cfg, std::ostream& out, std::ostream& err)
{
    const Index n = cfg.order;
    const Index i = cfg.size;
    if (n < 2 || i < 2)
        throw UsageError("bench needs --order >= 2 and --size >= 2");
    const std::vector<Index> rank_list = cfg.rank.empty() ? std::vector<Index>{2} : cfg.rank;
    const Dims dims(static_cast<std::size_t>(n), i);
    out << kBenchHeader << '\n';
    auto row = [&](const char* fmt, Index r, Index exact, double rel_error, double secs) {
        out << fmt << ',' << n << ',' << i << ',' << r << ',' << exact << ','
            << num(storage_complexity(fmt, n, i, r, cfg.q)) << ',' << num(rel_error) << ',' << seconds_text(secs)
            << '\n';
    };
    // feasible TT ranks for a uniform chain
    auto tt_ranks = [](const Dims& d, Index r) {
        std::vector<Index> out_ranks;
        Index prefix = 1;
        Index suffix = num_elements(d);
        for (std::size_t k = 0; k + 1 < d.size(); ++k) {
            prefix *= d[k];
            suffix /= d[k];
            out_ranks.push_back(std::min({r, prefix, suffix}));
        }
        return out_ranks;
    };
    for (Index r : rank_list) {
        if (r < 1)
            throw UsageError("bench ranks must be positive");
        const std::uint64_t seed = cfg.seed;
        {
            const DenseTensor t = cp_reconstruct(random_cp(dims, r, seed));
            Stopwatch clock(cfg.deterministic);
            CpAlsOptions o;
            o.max_iters = cfg.max_iters;
            o.tol = cfg.tol;
            o.seed = seed;
            o.n_starts = cfg.n_starts;
            o.threads = cfg.threads;
            const CpAlsResult res = cp_als(t, r, o);
            const double secs = clock.seconds();
            row("cpd", r, cp_storage(res.model), relative_error(t, cp_reconstruct(res.model)), secs);
        }
        {
            const Index rr = std::min(r, i);
            const DenseTensor t = tucker_reconstruct(random_tucker(dims, Dims(dims.size(), rr), seed));
            Stopwatch clock(cfg.deterministic);
            HosvdOptions o;
            o.ranks.assign(dims.size(), rr);
            const TuckerModel m = hosvd(t, o).model;
            const double secs = clock.seconds();
            row("tucker", r, tucker_storage(m), relative_error(t, tucker_reconstruct(m)), secs);
        }
        {
            const auto ranks = tt_ranks(dims, r);
            const DenseTensor t = tt_reconstruct(random_tt(dims, ranks, seed));
            Stopwatch clock(cfg.deterministic);
            const TTModel m = tt_svd(t, TtSvdOptions{std::nullopt, ranks, false}).model;
            const double secs = clock.seconds();
            row("tt", r, tt_storage(m), relative_error(t, tt_reconstruct(m)), secs);
        }
        {
            Dims fused(dims.size(), i * i);
            const auto ranks = tt_ranks(fused, r);
            const DenseTensor t = ttm_reconstruct(random_ttm(dims, dims, ranks, seed));
            Stopwatch clock(cfg.deterministic);
            const TTMatrixModel m = ttm_svd(t, {}, TtSvdOptions{std::nullopt, ranks, false}).model;
            const double secs = clock.seconds();
            row("ttm", r, tt_storage(m), relative_error(t, ttm_reconstruct(m)), secs);
        }
        {
            const SchemeBuild b = make_scheme(dims, cfg.q);
            for (const auto& w : b.warnings)
                err << "warning: " << w << '\n';
            const Dims vdims = b.scheme.virtual_dims();
            const auto ranks = tt_ranks(vdims, r);
            const DenseTensor t = detensorize(tt_reconstruct(random_tt(vdims, ranks, seed)), b.scheme);
            Stopwatch clock(cfg.deterministic);
            const QttResult q = qtt_compress(t, cfg.q, TtSvdOptions{std::nullopt, ranks, false});
            const double secs = clock.seconds();
            row("qtt", r, q.exact_params, relative_error(t, qtt_decompress(q.model, q.scheme)), secs);
        }
    }
    return kOk;
}

inline int cmd_info(const JobConfig& cfg, std::ostream& out, std::ostream&)
{
    const std::string magic = io::peek_magic(cfg.input);
    if (magic == "DTEN") {
        const DenseTensor t = io::read_dten(cfg.input);
        out << "kind: tensor\norder: " << t.order() << "\ndims: " << dims_to_string(t.dims())
            << "\nentries: " << t.size() << "\nfrobenius_norm: " << num(frobenius_norm(t)) << '\n';
        return kOk;
    }
    const io::Container c = io::read_container(cfg.input, magic);
    Index params = 0;
    for (const auto& p : c.payloads)
        params += p.size();
    if (magic == "CPMD")
        params += static_cast<Index>(c.header.value("weights", io::json::array()).size());
    io::json h = c.header;
    h.erase("payloads");
    out << "kind: " << h.value("kind", std::string("?")) << "\nparams: " << params << "\nheader: " << h.dump()
        << '\n';
    return kOk;
}

// Parses argv-style arguments (without the program name) and runs the
// command. Every failure maps to an exit code; nothing escapes.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    JobConfig cfg;
    CLI::App app{"tnc: tensor network compression and reconstruction"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_flag("--deterministic", cfg.deterministic, "zero timings so outputs are byte-reproducible");
        sub->add_option("--threads", cfg.threads, "worker cap")->check(CLI::PositiveNumber);
    };
    auto solver = [&](CLI::App* sub) {
        sub->add_option("--max-iters", cfg.max_iters, "ALS sweep cap")->check(CLI::PositiveNumber);
        sub->add_option("--tol", cfg.tol, "ALS stopping tolerance on the fit change");
        sub->add_option("--n-starts", cfg.n_starts, "independent ALS starts")->check(CLI::PositiveNumber);
    };

    CLI::App* dec = app.add_subcommand("decompose", "decompose a .dten tensor into a model container");
    dec->add_option("input", cfg.input, ".dten input")->required();
    dec->add_option("--format", cfg.format, "cpd | tucker | fstd | tt | qtt")->required();
    auto* rank_opt = dec->add_option("--rank", cfg.rank, "ranks r1,... (one value broadcasts)")->delimiter(',');
    dec->add_option("--eps", cfg.eps, "relative accuracy in [0, 1)")->excludes(rank_opt);
    dec->add_option("--q", cfg.q, "quantization base for qtt");
    dec->add_option("--blocks", cfg.blocks, "column slices per mode for the sliced Gram (tucker)")->delimiter(',');
    dec->add_option("--output", cfg.output, "model path");
    common(dec);
    solver(dec);

    CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct a model container to .dten");
    rec->add_option("input", cfg.input, "model path")->required();
    rec->add_option("--output", cfg.output, ".dten path");
    rec->add_option("--against", cfg.against, "original .dten for the residual");
    common(rec);

    CLI::App* rnd = app.add_subcommand("round", "TT-round a TT model");
    rnd->add_option("input", cfg.input, "TT model path")->required();
    auto* rrank = rnd->add_option("--rank", cfg.rank, "rank caps")->delimiter(',');
    rnd->add_option("--eps", cfg.eps, "relative accuracy in [0, 1)")->excludes(rrank);
    rnd->add_option("--output", cfg.output, "model path");
    common(rnd);

    CLI::App* ben = app.add_subcommand("bench", "storage and accuracy table on synthetic models");
    ben->add_option("--order", cfg.order, "tensor order N");
    ben->add_option("--size", cfg.size, "mode size I");
    ben->add_option("--rank", cfg.rank, "ranks R (several give several rows per format)")->delimiter(',');
    ben->add_option("--q", cfg.q, "quantization base for qtt");
    common(ben);
    solver(ben);

    CLI::App* inf = app.add_subcommand("info", "describe a tensor or model file");
    inf->add_option("input", cfg.input, "file")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kUsage;
    }

    try {
        if (dec->parsed())
            return cmd_decompose(cfg, out, err);
        if (rec->parsed())
            return cmd_reconstruct(cfg, out, err);
        if (rnd->parsed())
            return cmd_round(cfg, out, err);
        if (ben->parsed())
            return cmd_bench(cfg, out, err);
        if (inf->parsed())
            return cmd_info(cfg, out, err);
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kIoFailure;
    } catch (const SingularityError& e) {
        err << "numerical error: " << e.what() << '\n';
        return kNumerical;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

} // namespace tnc::cli
