#ifndef FAIRENS_EXPERIMENT_HPP
#define FAIRENS_EXPERIMENT_HPP

#include "fairens/base_ensemble.hpp"
#include "fairens/core.hpp"
#include "fairens/detectors.hpp"
#include "fairens/fairness.hpp"
#include "fairens/ingestion.hpp"
#include "fairens/io.hpp"
#include "fairens/metrics.hpp"
#include "fairens/random.hpp"
#include "fairens/solver.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace fairens {

/// A failure inside one pipeline stage; what() names the stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message)
        : Error("stage '" + stage + "': " + message), stage_(std::move(stage))
    {
    }
    [[nodiscard]] const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

template <typename Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

// ---------------------------------------------------------------------------
// Alpha grids

inline constexpr const char* kDefaultAlphaGrid = "log:50:1e-2:1e6";

/// `count` log-spaced values in [lo, hi], preceded by 0.
inline std::vector<double> log_alpha_grid(int count, double lo, double hi)
{
    if (count < 1 || !(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
        throw InvalidConfig("log alpha grid needs count >= 1 and 0 < min <= max");
    }
    std::vector<double> out{0.0};
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(std::pow(10.0, a + f * (b - a)));
    }
    return out;
}

/// "log:<count>:<min>:<max>" (0 is always included) or a comma list.
inline std::vector<double> parse_alpha_grid(const std::string& text)
{
    std::vector<double> out;
    const std::string spec = text == "default" ? kDefaultAlphaGrid : text;
    if (spec.rfind("log:", 0) == 0) {
        const auto parts = io::split(spec, ':');
        if (parts.size() != 4) {
            throw InvalidConfig("alpha grid '" + text + "': expected log:<count>:<min>:<max>");
        }
        const auto count = io::parse_int(parts[1]);
        const auto lo = io::parse_double(parts[2]);
        const auto hi = io::parse_double(parts[3]);
        if (!count || !lo || !hi) {
            throw InvalidConfig("alpha grid '" + text + "': malformed number");
        }
        out = log_alpha_grid(static_cast<int>(*count), *lo, *hi);
    } else {
        for (const auto& cell : io::split(spec, ',')) {
            const auto v = io::parse_double(cell);
            if (!v) {
                throw InvalidConfig("alpha grid '" + text + "': '" + cell + "' is not a number");
            }
            out.push_back(*v);
        }
    }
    for (double a : out) {
        if (!std::isfinite(a) || a < 0.0) {
            throw InvalidConfig("alpha grid '" + text + "': values must be finite and >= 0");
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) {
        throw InvalidConfig("alpha grid is empty");
    }
    return out;
}

inline std::string format_alpha_grid(const std::vector<double>& grid)
{
    std::string s;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        s += (i ? "," : "") + io::format_double(grid[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Detector lists

/// "default" or a comma list of kind:parameter, e.g. "knn:5,lof:10,iforest:100".
inline std::vector<DetectorConfig> parse_detectors(const std::string& text, std::uint64_t seed)
{
    if (text == "default") {
        return default_detector_grid(seed);
    }
    std::vector<DetectorConfig> out;
    for (const auto& cell : io::split(text, ',')) {
        const auto parts = io::split(cell, ':');
        const auto param = parts.size() == 2 ? io::parse_int(parts[1]) : std::nullopt;
        if (!param) {
            throw InvalidConfig("detector '" + cell + "': expected kind:parameter");
        }
        DetectorConfig c;
        c.parameter = static_cast<int>(*param);
        if (parts[0] == "lof") {
            c.kind = DetectorKind::Lof;
        } else if (parts[0] == "knn") {
            c.kind = DetectorKind::Knn;
        } else if (parts[0] == "iforest") {
            c.kind = DetectorKind::IForest;
            c.seed = mix_seed(seed, static_cast<std::uint64_t>(c.parameter));
        } else {
            throw InvalidConfig("detector '" + cell + "': unknown kind (lof, knn, iforest)");
        }
        out.push_back(c);
    }
    if (out.empty()) {
        throw InvalidConfig("detector list is empty");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::string id = "run";
    std::string dataset;  // benchmark name, or path to a cache-format CSV
    std::filesystem::path data_path;  // raw file for benchmark names
    std::optional<int> groups;  // synthetic group count override
    double bias_strength = kDefaultBiasStrength;
    int group_column = 8;
    std::string detectors = "default";
    bool standardize = true;
    BaseMethod base_method = BaseMethod::Max;
    FairnessKind fairness_kind = FairnessKind::Group;
    bool weighted_f1 = true;
    std::string alpha_grid = kDefaultAlphaGrid;
    int cof_samples = 100;
    double cof_alpha_min = 1e-3;
    double cof_alpha_max = 1e3;
    double ridge = kDefaultRidge;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw InvalidConfig("config key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double parse_real(const std::string& key, const std::string& v)
{
    if (const auto x = io::parse_double(v)) {
        return *x;
    }
    throw InvalidConfig("config key '" + key + "': expected a number, got '" + v + "'");
}

inline long long parse_integer(const std::string& key, const std::string& v)
{
    if (const auto x = io::parse_int(v)) {
        return *x;
    }
    throw InvalidConfig("config key '" + key + "': expected an integer, got '" + v + "'");
}

}  // namespace detail

/// Applies key=value settings on top of `cfg`. Keys starting with "info."
/// are ignored, so a run's meta.txt can be fed back as a config. Relative
/// paths resolve against `base_dir`.
inline void apply_key_values(ExperimentConfig& cfg, const io::KeyValues& kv,
                             const std::filesystem::path& base_dir = {})
{
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    for (const auto& [key, value] : kv) {
        if (key.rfind("info.", 0) == 0) {
            continue;
        }
        if (key == "id") {
            cfg.id = value;
        } else if (key == "dataset") {
            cfg.dataset = find_benchmark(value) ? value : resolve(value).string();
        } else if (key == "data") {
            cfg.data_path = resolve(value);
        } else if (key == "groups") {
            cfg.groups = static_cast<int>(detail::parse_integer(key, value));
        } else if (key == "bias") {
            cfg.bias_strength = detail::parse_real(key, value);
        } else if (key == "group_column") {
            cfg.group_column = static_cast<int>(detail::parse_integer(key, value));
        } else if (key == "detectors") {
            cfg.detectors = value;
        } else if (key == "standardize") {
            cfg.standardize = detail::parse_bool(key, value);
        } else if (key == "base_method") {
            cfg.base_method = parse_base_method(value);
        } else if (key == "fairness") {
            cfg.fairness_kind = parse_fairness_kind(value);
        } else if (key == "weighted_f1") {
            cfg.weighted_f1 = detail::parse_bool(key, value);
        } else if (key == "alpha_grid") {
            cfg.alpha_grid = value;
        } else if (key == "cof_samples") {
            cfg.cof_samples = static_cast<int>(detail::parse_integer(key, value));
        } else if (key == "cof_alpha_min") {
            cfg.cof_alpha_min = detail::parse_real(key, value);
        } else if (key == "cof_alpha_max") {
            cfg.cof_alpha_max = detail::parse_real(key, value);
        } else if (key == "ridge") {
            cfg.ridge = detail::parse_real(key, value);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(detail::parse_integer(key, value));
        } else if (key == "out") {
            cfg.output_dir = value;
        } else {
            throw InvalidConfig("unknown config key '" + key + "'");
        }
    }
}

inline io::KeyValues to_key_values(const ExperimentConfig& cfg)
{
    // Paths are written absolute so the echo can be replayed from anywhere.
    const auto absolute = [](const std::filesystem::path& p) {
        return std::filesystem::absolute(p).lexically_normal().string();
    };
    io::KeyValues kv;
    kv["id"] = cfg.id;
    kv["dataset"] = find_benchmark(cfg.dataset) || cfg.dataset.empty() ? cfg.dataset : absolute(cfg.dataset);
    if (!cfg.data_path.empty()) {
        kv["data"] = absolute(cfg.data_path);
    }
    if (cfg.groups) {
        kv["groups"] = std::to_string(*cfg.groups);
    }
    kv["bias"] = io::format_double(cfg.bias_strength);
    kv["group_column"] = std::to_string(cfg.group_column);
    kv["detectors"] = cfg.detectors;
    kv["standardize"] = cfg.standardize ? "true" : "false";
    kv["base_method"] = to_string(cfg.base_method);
    kv["fairness"] = to_string(cfg.fairness_kind);
    kv["weighted_f1"] = cfg.weighted_f1 ? "true" : "false";
    kv["alpha_grid"] = cfg.alpha_grid;
    kv["cof_samples"] = std::to_string(cfg.cof_samples);
    kv["cof_alpha_min"] = io::format_double(cfg.cof_alpha_min);
    kv["cof_alpha_max"] = io::format_double(cfg.cof_alpha_max);
    kv["ridge"] = io::format_double(cfg.ridge);
    kv["seed"] = std::to_string(cfg.seed);
    kv["out"] = cfg.output_dir.string();
    return kv;
}

inline DatasetSpec dataset_spec(const ExperimentConfig& cfg)
{
    if (cfg.dataset.empty()) {
        throw InvalidConfig("no dataset given");
    }
    DatasetSpec spec;
    if (const auto* b = find_benchmark(cfg.dataset)) {
        if (cfg.data_path.empty()) {
            throw InvalidConfig("dataset '" + cfg.dataset + "' needs a data file path");
        }
        spec = benchmark_spec(cfg.dataset, cfg.data_path, mix_seed(cfg.seed, 0x67726f7570ULL), cfg.bias_strength);
        if (cfg.groups && !b->native_groups) {
            std::get<SyntheticGroups>(spec.group_rule).v_groups = *cfg.groups;
        }
    } else {
        spec.name = "custom";
        spec.source_path = cfg.dataset;
        if (cfg.groups) {
            spec.group_rule = SyntheticGroups{*cfg.groups, cfg.bias_strength, mix_seed(cfg.seed, 0x67726f7570ULL)};
        }
    }
    spec.group_column = cfg.group_column;
    return spec;
}

// ---------------------------------------------------------------------------
// Prepared problem: everything that does not depend on alpha

/// Cross-group pair count up to which kernel blocks are cached in memory.
inline constexpr double kMaxCachedPairs = 2.5e7;

struct PreparedProblem {
    Dataset data;
    DatasetSpec spec;
    std::string checksum;
    GroupPartition part;
    ScoreMatrix S;
    TargetVector t;
    ImportanceWeights beta;
    std::optional<PairKernel> kernel;
    std::vector<PairWeightBlock> blocks;  // empty when the kernel is evaluated lazily
    FitTerms fit_weighted;
    FitTerms fit_unweighted;
    Matrix group_pen;
    Matrix individual_pen;

    [[nodiscard]] const FitTerms& fit(bool weighted) const { return weighted ? fit_weighted : fit_unweighted; }
    [[nodiscard]] const Matrix& penalty(FairnessKind k) const
    {
        return k == FairnessKind::Group ? group_pen : individual_pen;
    }

    [[nodiscard]] double individual_fairness_of(const Vector& y) const
    {
        return blocks.empty() ? individual_fairness(y, *kernel) : individual_fairness(y, part, blocks);
    }
};

inline PreparedProblem prepare(const ExperimentConfig& cfg)
{
    PreparedProblem p;
    run_stage("dataset", [&] {
        p.spec = dataset_spec(cfg);
        p.data = load_dataset(p.spec);
        if (!p.data.labels) {
            throw InvalidInput("dataset '" + p.data.name + "' has no outlier labels; AUC needs them");
        }
        p.checksum = io::file_checksum(p.spec.source_path);
        p.part = partition_groups(p.data.groups);
    });
    run_stage("detectors", [&] {
        DetectorOptions opt;
        opt.standardize = cfg.standardize;
        p.S = build_score_matrix(p.data, parse_detectors(cfg.detectors, cfg.seed), opt);
    });
    run_stage("base_ensemble", [&] {
        p.t = make_target(p.S, cfg.base_method);
        p.beta = importance_weights(p.t);
    });
    run_stage("fairness", [&] {
        p.kernel.emplace(make_pair_kernel(p.data, p.part, cfg.standardize));
        double pairs = 0.0;
        for (const auto& [a, b] : p.part.pairs) {
            pairs += static_cast<double>(p.part.groups[a].members.size()) *
                     static_cast<double>(p.part.groups[b].members.size());
        }
        if (pairs <= kMaxCachedPairs) {
            p.blocks = p.kernel->blocks();
        }
    });
    run_stage("solver", [&] {
        p.fit_weighted = fit_terms(p.S, p.t, p.beta, true);
        p.fit_unweighted = fit_terms(p.S, p.t, p.beta, false);
        p.group_pen = group_penalty(p.S, p.part);
        p.individual_pen = p.blocks.empty() ? individual_penalty(p.S, *p.kernel)
                                            : individual_penalty(p.S, p.part, p.blocks);
    });
    return p;
}

/// Solves at one alpha and evaluates every reported quantity.
inline SweepRecord evaluate_alpha(const PreparedProblem& p, FairnessKind kind, bool weighted, double alpha,
                                  double ridge)
{
    return run_stage("solver", [&] {
        const auto sol = solve_penalized(p.fit(weighted), p.penalty(kind), alpha, ridge);
        SweepRecord rec;
        rec.alpha = alpha;
        rec.w = sol.weights;
        rec.ridge_triggered = sol.ridge_triggered;
        const Vector y = combine(sol.weights, p.S);
        CompensatedSum f1;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double r = y[i] - p.t.values[i];
            f1.add((weighted ? p.beta.beta[i] : 1.0) * r * r);
        }
        rec.f1 = f1.value();
        rec.dp = demographic_parity(y, p.part);
        rec.if_value = p.individual_fairness_of(y);
        rec.f2 = kind == FairnessKind::Group ? rec.dp : rec.if_value;
        rec.auc = auc(y, *p.data.labels);
        return rec;
    });
}

// ---------------------------------------------------------------------------
// Outputs

inline std::string sweep_csv(const std::vector<SweepRecord>& records, Eigen::Index k)
{
    std::string out = "alpha,f1,f2,dp,if,auc,ridge_triggered";
    for (Eigen::Index i = 0; i < k; ++i) {
        out += ",w_" + std::to_string(i);
    }
    out += "\n";
    for (const auto& r : records) {
        out += io::format_double(r.alpha) + "," + io::format_double(r.f1) + "," + io::format_double(r.f2) + "," +
               io::format_double(r.dp) + "," + io::format_double(r.if_value) + "," + io::format_double(r.auc) + "," +
               (r.ridge_triggered ? "1" : "0");
        for (Eigen::Index i = 0; i < r.w.size(); ++i) {
            out += "," + io::format_double(r.w.w[i]);
        }
        out += "\n";
    }
    return out;
}

inline io::KeyValues run_metadata(const ExperimentConfig& cfg, const PreparedProblem& p)
{
    io::KeyValues kv = to_key_values(cfg);
    kv["info.dataset_name"] = p.data.name;
    kv["info.dataset_checksum"] = p.checksum;
    kv["info.n"] = std::to_string(p.data.size());
    kv["info.dims"] = std::to_string(p.data.dims());
    kv["info.k"] = std::to_string(p.S.k());
    std::string sizes;
    for (const auto& g : p.part.groups) {
        sizes += (sizes.empty() ? "" : ",") + std::to_string(g.members.size());
    }
    kv["info.group_sizes"] = sizes;
    if (const auto* syn = std::get_if<SyntheticGroups>(&p.spec.group_rule)) {
        kv["info.injection"] = "synthetic";
        kv["info.injection_groups"] = std::to_string(syn->v_groups);
        kv["info.injection_bias"] = io::format_double(syn->bias_strength);
        kv["info.injection_seed"] = std::to_string(syn->seed);
    } else {
        kv["info.injection"] = "none";
    }
    std::string ids;
    for (const auto& d : p.S.detector_ids) {
        ids += (ids.empty() ? "" : ";") + d;
    }
    kv["info.detectors"] = ids;
    kv["info.target"] = p.t.source;
    kv["info.kernel_degenerate"] = p.kernel && p.kernel->degenerate() ? "true" : "false";
    return kv;
}

struct SweepResult {
    std::vector<SweepRecord> records;  // ascending alpha
    io::KeyValues meta;
};

namespace detail {

/// Evaluates alpha points on up to `threads` workers; the result order is
/// the input order regardless of scheduling.
inline std::vector<SweepRecord> evaluate_many(const PreparedProblem& p, FairnessKind kind, bool weighted,
                                              const std::vector<double>& alphas, double ridge)
{
    std::vector<SweepRecord> out(alphas.size());
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), alphas.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < alphas.size(); ++i) {
            out[i] = evaluate_alpha(p, kind, weighted, alphas[i], ridge);
        }
        return out;
    }
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < alphas.size(); i += workers) {
                out[i] = evaluate_alpha(p, kind, weighted, alphas[i], ridge);
            }
        }));
    }
    for (auto& j : jobs) {
        j.get();
    }
    return out;
}

}  // namespace detail

inline SweepResult sweep(const ExperimentConfig& cfg, const PreparedProblem& p)
{
    const auto alphas = run_stage("config", [&] { return parse_alpha_grid(cfg.alpha_grid); });
    SweepResult r;
    r.records = detail::evaluate_many(p, cfg.fairness_kind, cfg.weighted_f1, alphas, cfg.ridge);
    r.meta = run_metadata(cfg, p);
    r.meta["info.alpha_values"] = format_alpha_grid(alphas);
    std::size_t ridge_hits = 0;
    for (const auto& rec : r.records) {
        ridge_hits += rec.ridge_triggered ? 1 : 0;
    }
    r.meta["info.ridge_triggered_count"] = std::to_string(ridge_hits);
    return r;
}

/// Full sweep: writes sweep.csv and meta.txt into cfg.output_dir.
inline SweepResult run_sweep(const ExperimentConfig& cfg)
{
    const auto p = prepare(cfg);
    auto r = sweep(cfg, p);
    run_stage("output", [&] {
        io::write_text(cfg.output_dir / "sweep.csv", sweep_csv(r.records, p.S.k()));
        io::write_key_values(cfg.output_dir / "meta.txt", r.meta);
    });
    return r;
}

// ---------------------------------------------------------------------------
// Cost of fairness

struct CofSample {
    double alpha = 0.0;
    std::optional<double> weighted;
    std::optional<double> unweighted;
};

struct CofResult {
    SweepRecord baseline_weighted;
    SweepRecord baseline_unweighted;
    std::vector<CofSample> samples;  // ascending alpha
    io::KeyValues meta;
};

/// Seeded log-uniform alpha samples in [lo, hi], sorted.
inline std::vector<double> sample_cof_alphas(int count, double lo, double hi, std::uint64_t seed)
{
    if (count < 1) {
        throw InvalidConfig("cof_samples must be >= 1");
    }
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
        throw InvalidConfig("cof alpha range needs 0 < min <= max");
    }
    Rng rng(mix_seed(seed, 0x636f66ULL));
    const double a = std::log(lo);
    const double b = std::log(hi);
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        out.push_back(std::exp(a + rng.uniform01() * (b - a)));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline CofResult cof(const ExperimentConfig& cfg, const PreparedProblem& p)
{
    const auto alphas = run_stage("config", [&] {
        return sample_cof_alphas(cfg.cof_samples, cfg.cof_alpha_min, cfg.cof_alpha_max, cfg.seed);
    });
    CofResult r;
    r.baseline_weighted = evaluate_alpha(p, cfg.fairness_kind, true, 0.0, cfg.ridge);
    r.baseline_unweighted = evaluate_alpha(p, cfg.fairness_kind, false, 0.0, cfg.ridge);
    const auto weighted = detail::evaluate_many(p, cfg.fairness_kind, true, alphas, cfg.ridge);
    const auto unweighted = detail::evaluate_many(p, cfg.fairness_kind, false, alphas, cfg.ridge);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        r.samples.push_back({alphas[i], cost_of_fairness(r.baseline_weighted, weighted[i]),
                             cost_of_fairness(r.baseline_unweighted, unweighted[i])});
    }
    r.meta = run_metadata(cfg, p);
    r.meta["info.cof_alpha_distribution"] = "log-uniform";
    r.meta["info.cof_alpha_values"] = format_alpha_grid(alphas);
    r.meta["info.baseline_auc_weighted"] = io::format_double(r.baseline_weighted.auc);
    r.meta["info.baseline_auc_unweighted"] = io::format_double(r.baseline_unweighted.auc);
    return r;
}

inline std::string cof_csv(const std::vector<CofSample>& samples)
{
    const auto cell = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string("nan"); };
    std::string out = "alpha,cof_weighted,cof_unweighted,undefined_weighted,undefined_unweighted\n";
    for (const auto& s : samples) {
        out += io::format_double(s.alpha) + "," + cell(s.weighted) + "," + cell(s.unweighted) + "," +
               (s.weighted ? "0" : "1") + "," + (s.unweighted ? "0" : "1") + "\n";
    }
    return out;
}

/// Cost-of-fairness samples for both f1 variants from one detector pass;
/// writes cof.csv and meta.txt.
inline CofResult run_cof(const ExperimentConfig& cfg)
{
    const auto p = prepare(cfg);
    auto r = cof(cfg, p);
    run_stage("output", [&] {
        io::write_text(cfg.output_dir / "cof.csv", cof_csv(r.samples));
        io::write_key_values(cfg.output_dir / "meta.txt", r.meta);
    });
    return r;
}

// ---------------------------------------------------------------------------
// Manifests

/// One config per non-comment line, as whitespace-separated key=value
/// tokens layered over `defaults`. Paths resolve against the manifest's
/// directory. Missing ids become cfg000, cfg001, ...
inline std::vector<ExperimentConfig> parse_manifest(const std::vector<std::string>& lines,
                                                    const ExperimentConfig& defaults,
                                                    const std::filesystem::path& base_dir,
                                                    const std::string& origin = "manifest")
{
    std::vector<ExperimentConfig> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = io::trim(lines[i]);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        io::KeyValues kv;
        for (const auto& tok : io::split(line, ' ')) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) {
                throw ParseError(origin + ":" + std::to_string(i + 1) + ": token '" + tok + "' is not key=value");
            }
            kv[tok.substr(0, eq)] = tok.substr(eq + 1);
        }
        ExperimentConfig cfg = defaults;
        cfg.id = fmt::format("cfg{:03}", out.size());
        apply_key_values(cfg, kv, base_dir);
        out.push_back(std::move(cfg));
    }
    return out;
}

inline std::vector<ExperimentConfig> read_manifest(const std::filesystem::path& path, const ExperimentConfig& defaults)
{
    return parse_manifest(io::read_lines(path), defaults, path.parent_path(), path.string());
}

struct SummaryRow {
    std::string id;
    std::string dataset;
    std::string base_method;
    std::string fairness;
    bool weighted_f1 = true;
    bool ok = false;
    std::string message;
    SweepRecord first;
    SweepRecord last;
    std::size_t ridge_hits = 0;
    std::size_t points = 0;
};

inline std::string summary_csv(const std::vector<SummaryRow>& rows)
{
    std::string out =
        "id,dataset,base_method,fairness,weighted_f1,status,points,f2_alpha0,f2_alphamax,auc_alpha0,auc_alphamax,"
        "ridge_incidence,message\n";
    for (const auto& r : rows) {
        std::string msg = r.message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        const auto num = [&](double v) { return r.ok ? io::format_double(v) : std::string("nan"); };
        out += r.id + "," + r.dataset + "," + r.base_method + "," + r.fairness + "," +
               (r.weighted_f1 ? "true" : "false") + "," + (r.ok ? "ok" : "failed") + "," + std::to_string(r.points) +
               "," + num(r.first.f2) + "," + num(r.last.f2) + "," + num(r.first.auc) + "," + num(r.last.auc) + "," +
               std::to_string(r.ridge_hits) + "," + msg + "\n";
    }
    return out;
}

/// Runs every config (in parallel) into `out_dir/<id>/` and writes
/// `out_dir/summary.csv`. A failing config is recorded and the rest continue.
inline std::vector<SummaryRow> run_all(const std::vector<ExperimentConfig>& manifest,
                                       const std::filesystem::path& out_dir)
{
    std::vector<SummaryRow> rows(manifest.size());
    const auto run_one = [&](std::size_t i) {
        ExperimentConfig cfg = manifest[i];
        cfg.output_dir = out_dir / cfg.id;
        auto& row = rows[i];
        row.id = cfg.id;
        row.dataset = std::filesystem::path(cfg.dataset).stem().string();
        row.base_method = to_string(cfg.base_method);
        row.fairness = to_string(cfg.fairness_kind);
        row.weighted_f1 = cfg.weighted_f1;
        try {
            const auto r = run_sweep(cfg);
            row.ok = true;
            row.points = r.records.size();
            row.first = r.records.front();
            row.last = r.records.back();
            for (const auto& rec : r.records) {
                row.ridge_hits += rec.ridge_triggered ? 1 : 0;
            }
        } catch (const std::exception& e) {
            row.ok = false;
            row.message = e.what();
        }
    };
    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), manifest.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < manifest.size(); ++i) {
            run_one(i);
        }
    } else {
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 0; w < workers; ++w) {
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < manifest.size(); i += workers) {
                    run_one(i);
                }
            }));
        }
        for (auto& j : jobs) {
            j.get();
        }
    }
    io::write_text(out_dir / "summary.csv", summary_csv(rows));
    return rows;
}

}  // namespace fairens

#endif  // FAIRENS_EXPERIMENT_HPP
