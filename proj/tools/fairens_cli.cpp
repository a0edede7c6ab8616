// fairens: experiment runner for fairness-aware outlier ensembles.
//
//   fairens sweep   --dataset data/fixtures/cardio.csv --fairness group --out out/cardio
//   fairens cof     --dataset data/fixtures/pima.csv --fairness individual --out out/pima
//   fairens run-all --manifest data/fixtures/manifest.txt --out out/all
//   fairens make-fixtures --out data/fixtures

#include "fairens/fairens.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

struct CommonFlags {
    std::string config;
    std::string dataset;
    std::string data;
    std::string base_method;
    std::string fairness;
    std::string alpha_grid;
    std::string detectors;
    bool unweighted = false;
    bool no_standardize = false;
    std::uint64_t seed = 0;
    int cof_samples = 0;
    int groups = 0;
    double bias = 0.0;
    int group_column = 0;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f)
{
    cmd->add_option("--config", f.config, "key=value config file; flags override it");
    cmd->add_option("--dataset", f.dataset, "benchmark name or path to a dataset CSV");
    cmd->add_option("--data", f.data, "raw data file for a benchmark name");
    cmd->add_option("--base-method", f.base_method, "max | average | greedy");
    cmd->add_option("--fairness", f.fairness, "group | individual");
    cmd->add_option("--alpha-grid", f.alpha_grid, "comma list or log:<count>:<min>:<max>");
    cmd->add_option("--detectors", f.detectors, "default or kind:param list, e.g. knn:5,lof:10");
    cmd->add_flag("--unweighted-f1", f.unweighted, "drop the rank-based importance weights from f1");
    cmd->add_flag("--no-standardize", f.no_standardize, "use raw feature scales for distances");
    cmd->add_option("--seed", f.seed, "seed for forests, group injection and cof sampling");
    cmd->add_option("--cof-samples", f.cof_samples, "number of sampled alpha values for cof");
    cmd->add_option("--groups", f.groups, "inject a synthetic protected attribute with this many groups");
    cmd->add_option("--bias", f.bias, "bias strength of the injected attribute, in [0,1]");
    cmd->add_option("--group-column", f.group_column, "German Credit personal-status column (zero-based)");
    cmd->add_option("--out", f.out, "output directory");
}

fairens::ExperimentConfig resolve(CLI::App* cmd, const CommonFlags& f)
{
    fairens::ExperimentConfig cfg;
    if (!f.config.empty()) {
        const std::filesystem::path path(f.config);
        fairens::apply_key_values(cfg, fairens::io::read_key_values(path), path.parent_path());
    }
    fairens::io::KeyValues kv;
    const auto given = [&](const char* name) { return cmd->count(name) > 0; };
    if (given("--dataset")) kv["dataset"] = f.dataset;
    if (given("--data")) kv["data"] = f.data;
    if (given("--base-method")) kv["base_method"] = f.base_method;
    if (given("--fairness")) kv["fairness"] = f.fairness;
    if (given("--alpha-grid")) kv["alpha_grid"] = f.alpha_grid;
    if (given("--detectors")) kv["detectors"] = f.detectors;
    if (given("--unweighted-f1")) kv["weighted_f1"] = "false";
    if (given("--no-standardize")) kv["standardize"] = "false";
    if (given("--seed")) kv["seed"] = std::to_string(f.seed);
    if (given("--cof-samples")) kv["cof_samples"] = std::to_string(f.cof_samples);
    if (given("--groups")) kv["groups"] = std::to_string(f.groups);
    if (given("--bias")) kv["bias"] = fairens::io::format_double(f.bias);
    if (given("--group-column")) kv["group_column"] = std::to_string(f.group_column);
    if (given("--out")) kv["out"] = f.out;
    fairens::apply_key_values(cfg, kv);
    return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fairness-aware outlier ensemble experiments"};
    app.require_subcommand(1);

    CommonFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "alpha sweep: writes sweep.csv and meta.txt");
    add_common(sweep, sweep_flags);

    CommonFlags cof_flags;
    auto* cof = app.add_subcommand("cof", "cost of fairness for weighted and unweighted f1: writes cof.csv");
    add_common(cof, cof_flags);

    CommonFlags all_flags;
    std::string manifest;
    auto* all = app.add_subcommand("run-all", "run every config of a manifest and write summary.csv");
    add_common(all, all_flags);
    all->add_option("--manifest", manifest, "manifest file, one key=value config per line")->required();

    std::string fixture_dir = "data/fixtures";
    std::uint64_t fixture_seed = 2021;
    auto* fixtures = app.add_subcommand("make-fixtures", "regenerate the bundled synthetic datasets");
    fixtures->add_option("--out", fixture_dir, "output directory");
    fixtures->add_option("--seed", fixture_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sweep) {
            const auto cfg = resolve(sweep, sweep_flags);
            const auto r = fairens::run_sweep(cfg);
            std::cout << "wrote " << r.records.size() << " sweep records to " << (cfg.output_dir / "sweep.csv").string()
                      << '\n';
        } else if (*cof) {
            const auto cfg = resolve(cof, cof_flags);
            const auto r = fairens::run_cof(cfg);
            std::cout << "wrote " << r.samples.size() << " cof samples to " << (cfg.output_dir / "cof.csv").string()
                      << '\n';
        } else if (*all) {
            const auto defaults = resolve(all, all_flags);
            const auto configs = fairens::read_manifest(manifest, defaults);
            const auto rows = fairens::run_all(configs, defaults.output_dir);
            std::size_t failed = 0;
            for (const auto& r : rows) {
                if (!r.ok) {
                    ++failed;
                    std::cerr << r.id << ": " << r.message << '\n';
                }
            }
            std::cout << rows.size() - failed << "/" << rows.size() << " configs completed; summary at "
                      << (defaults.output_dir / "summary.csv").string() << '\n';
            return failed == 0 ? 0 : 2;
        } else if (*fixtures) {
            std::string manifest_text = "# 8 fixtures x 2 fairness kinds x 2 base methods\n";
            for (const auto& shape : fairens::fixtures::kShapes) {
                const auto d = fairens::fixtures::make_fixture(shape, fixture_seed);
                const std::filesystem::path path = std::filesystem::path(fixture_dir) / (std::string(shape.name) + ".csv");
                fairens::io::KeyValues meta{{"generator_seed", std::to_string(fixture_seed)},
                                            {"groups", std::to_string(shape.groups)},
                                            {"group_rule", shape.native_groups ? "native" : "synthetic"}};
                if (!shape.native_groups) {
                    meta["injection_bias"] = fairens::io::format_double(shape.bias_strength);
                    meta["injection_seed"] = std::to_string(fairens::mix_seed(fixture_seed, 1));
                }
                fairens::save_dataset(d, path, meta);
                for (const char* fairness : {"group", "individual"}) {
                    for (const char* base : {"max", "greedy"}) {
                        manifest_text += std::string("id=") + shape.name + "_" + fairness + "_" + base +
                                         " dataset=" + shape.name + ".csv fairness=" + fairness +
                                         " base_method=" + base + "\n";
                    }
                }
                std::cout << "wrote " << path.string() << '\n';
            }
            fairens::io::write_text(std::filesystem::path(fixture_dir) / "manifest.txt", manifest_text);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
