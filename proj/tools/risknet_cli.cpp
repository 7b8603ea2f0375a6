// risknet command line: run | simulate | indices | export

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "risknet/risknet.h"

namespace {

int status_exit(rn_status s) {
    switch (s) {
        case RN_OK: return 0;
        case RN_ERR_CONFIG:
        case RN_ERR_INVALID_ARGUMENT: return 1;
        case RN_ERR_DATA:
        case RN_ERR_IO: return 2;
        case RN_ERR_ESTIMATION:
        case RN_ERR_DOMAIN: return 3;
        default: return 2;
    }
}

int report(rn_status s) {
    std::fprintf(stderr, "risknet: %s: %s\n", rn_status_name(s), rn_last_error());
    return status_exit(s);
}

struct Options {
    std::string input;
    std::string out;
    std::uint64_t seed = 0;
    int jobs = 1;
    int bootstrap = 1000;
    std::string innovations = "skewt";
    std::vector<std::string> trees;
    std::vector<std::string> formats;
    bool verbose = false;
};

struct ConfigHandle {
    rn_config* ptr = nullptr;
    ~ConfigHandle() { rn_config_destroy(ptr); }
};

rn_status build_config(const Options& o, ConfigHandle& h) {
    rn_status s = rn_config_create(&h.ptr);
    if (s == RN_OK) s = rn_config_set_input(h.ptr, o.input.c_str());
    if (s == RN_OK) s = rn_config_set_output(h.ptr, o.out.c_str());
    if (s == RN_OK) s = rn_config_set_seed(h.ptr, o.seed);
    if (s == RN_OK) s = rn_config_set_jobs(h.ptr, o.jobs);
    if (s == RN_OK) s = rn_config_set_bootstrap(h.ptr, o.bootstrap);
    if (s == RN_OK) s = rn_config_set_innovations(h.ptr, o.innovations.c_str());
    if (s == RN_OK) s = rn_config_set_verbose(h.ptr, o.verbose ? 1 : 0);
    if (s == RN_OK && !o.formats.empty()) {
        s = rn_config_clear_formats(h.ptr);
        for (const auto& f : o.formats)
            if (s == RN_OK) s = rn_config_add_format(h.ptr, f.c_str());
    }
    for (const auto& t : o.trees)
        if (s == RN_OK) s = rn_config_add_tree(h.ptr, t.c_str());
    return s;
}

int execute(const Options& o, rn_status (*fn)(const rn_config*, rn_manifest**)) {
    ConfigHandle h;
    rn_status s = build_config(o, h);
    if (s != RN_OK) return report(s);
    rn_manifest* m = nullptr;
    s = fn(h.ptr, &m);
    if (s != RN_OK) return report(s);
    const int code = rn_manifest_exit_code(m);
    std::printf("wrote %zu files to %s\n", rn_manifest_artifact_count(m), o.out.c_str());
    const std::size_t n = rn_manifest_failure_count(m);
    if (n > 0) {
        std::printf("%zu estimation flags:\n", n);
        for (std::size_t i = 0; i < n; ++i) std::printf("  %s\n", rn_manifest_failure(m, i));
    }
    rn_manifest_destroy(m);
    return code;
}

void add_common(CLI::App* cmd, Options& o, bool estimation) {
    cmd->add_option("--out", o.out, "Output directory")->required();
    cmd->add_option("--seed", o.seed, "Global seed for the power-law bootstrap");
    cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates per period")->check(CLI::NonNegativeNumber);
    if (estimation)
        cmd->add_option("--innovations", o.innovations, "Marginal innovation law")
            ->check(CLI::IsMember({"normal", "skewt"}));
    cmd->add_option("--trees", o.trees, "Period labels to export as DOT (comma separated)")->delimiter(',');
    cmd->add_option("--format", o.formats, "Output formats: csv, json, dot, svg (repeatable)")
        ->check(CLI::IsMember({"csv", "json", "dot", "svg"}))
        ->delimiter(',');
    cmd->add_flag("-v,--verbose", o.verbose, "Progress on stderr");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Copula-DCC correlation networks and their topology"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rn_version()));

    Options run_opts, idx_opts, exp_opts;
    auto* run = app.add_subcommand("run", "Full estimation from a price CSV");
    run->add_option("--input", run_opts.input, "Price CSV (period column, one column per asset)")->required();
    add_common(run, run_opts, true);

    auto* indices = app.add_subcommand("indices", "Trees and indices from an existing cube.json");
    indices->add_option("--input", idx_opts.input, "cube.json written by run")->required();
    add_common(indices, idx_opts, false);

    auto* exporter = app.add_subcommand("export", "Charts, CSV and DOT from topology.json and trees.json");
    exporter->add_option("--input", exp_opts.input, "Directory holding topology.json and trees.json")->required();
    add_common(exporter, exp_opts, false);

    std::string sim_out, sim_spec;
    std::uint64_t sim_seed = 0;
    std::size_t sim_assets = 0, sim_periods = 0, stress_start = 0, stress_end = 0;
    auto* simulate = app.add_subcommand("simulate", "Write a synthetic price panel and its ground truth");
    simulate->add_option("--out", sim_out, "Price CSV to write; truth goes to <stem>_truth.json")->required();
    simulate->add_option("--seed", sim_seed, "Generator seed");
    simulate->add_option("--spec", sim_spec, "Generator spec (JSON)")->check(CLI::ExistingFile);
    simulate->add_option("--assets", sim_assets, "Number of assets");
    simulate->add_option("--periods", sim_periods, "Number of return periods");
    simulate->add_option("--stress-start", stress_start, "First period of the stress window");
    simulate->add_option("--stress-end", stress_end, "One past the last stressed period");

    CLI11_PARSE(app, argc, argv);

    if (*run) return execute(run_opts, rn_run);
    if (*indices) return execute(idx_opts, rn_run_indices);
    if (*exporter) return execute(exp_opts, rn_export);

    nlohmann::json spec = nlohmann::json::object();
    if (!sim_spec.empty()) {
        std::ifstream f(sim_spec);
        try {
            spec = nlohmann::json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            std::fprintf(stderr, "risknet: bad spec file: %s\n", e.what());
            return 1;
        }
    }
    if (sim_assets) spec["assets"] = sim_assets;
    if (sim_periods) spec["periods"] = sim_periods;
    if (stress_end > stress_start)
        spec["stress"] = {{"start", stress_start}, {"end", stress_end}, {"hub", 0}};
    const std::filesystem::path csv(sim_out);
    const auto truth = (csv.parent_path() / (csv.stem().string() + "_truth.json")).string();
    const rn_status s = rn_simulate(spec.dump().c_str(), sim_seed, sim_out.c_str(), truth.c_str());
    if (s != RN_OK) return report(s);
    std::printf("wrote %s and %s\n", sim_out.c_str(), truth.c_str());
    return 0;
}
