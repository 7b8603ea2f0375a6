#include "risknet/risknet.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "core/error.hpp"
#include "ingest/price_panel.hpp"
#include "network/network.hpp"
#include "pipeline/exports.hpp"
#include "pipeline/pipeline.hpp"
#include "pipeline/simulate.hpp"
#include "topology/power_law.hpp"
#include "topology/topology.hpp"

using namespace risknet;

struct rn_config {
    pipeline::RunConfig config;
};

struct rn_manifest {
    pipeline::RunManifest manifest;
    std::string json;
};

struct rn_panel {
    ingest::PricePanel panel;
};

struct rn_tree {
    network::SpanningTree tree;
};

namespace {

thread_local std::string last_error;

rn_status fail(rn_status s, const std::string& msg) {
    last_error = msg;
    return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
rn_status guarded(F&& f) {
    try {
        last_error.clear();
        f();
        return RN_OK;
    } catch (const ConfigError& e) {
        return fail(RN_ERR_CONFIG, e.what());
    } catch (const DataError& e) {
        return fail(RN_ERR_DATA, e.what());
    } catch (const EstimationError& e) {
        return fail(RN_ERR_ESTIMATION, e.what());
    } catch (const DomainError& e) {
        return fail(RN_ERR_DOMAIN, e.what());
    } catch (const IoError& e) {
        return fail(RN_ERR_IO, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(RN_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(RN_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(RN_ERR_INTERNAL, e.what());
    }
}

#define RN_REQUIRE(cond, msg) \
    if (!(cond)) return fail(RN_ERR_INVALID_ARGUMENT, msg)

rn_status run_with(const rn_config* config, rn_manifest** out,
                   pipeline::RunManifest (*fn)(const pipeline::RunConfig&)) {
    RN_REQUIRE(config && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto m = std::make_unique<rn_manifest>();
        m->manifest = fn(config->config);
        m->json = m->manifest.content.dump(1);
        *out = m.release();
    });
}

}  // namespace

extern "C" {

const char* rn_version(void) { return "0.1.0"; }

const char* rn_last_error(void) { return last_error.c_str(); }

const char* rn_status_name(rn_status status) {
    switch (status) {
        case RN_OK: return "ok";
        case RN_ERR_CONFIG: return "configuration error";
        case RN_ERR_DATA: return "data error";
        case RN_ERR_ESTIMATION: return "estimation error";
        case RN_ERR_DOMAIN: return "domain error";
        case RN_ERR_IO: return "i/o error";
        case RN_ERR_INVALID_ARGUMENT: return "invalid argument";
        case RN_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

rn_status rn_config_create(rn_config** out) {
    RN_REQUIRE(out, "null argument");
    return guarded([&] { *out = new rn_config(); });
}

void rn_config_destroy(rn_config* config) { delete config; }

rn_status rn_config_set_input(rn_config* config, const char* path) {
    RN_REQUIRE(config && path, "null argument");
    config->config.input = path;
    return RN_OK;
}

rn_status rn_config_set_output(rn_config* config, const char* dir) {
    RN_REQUIRE(config && dir, "null argument");
    config->config.out = dir;
    return RN_OK;
}

rn_status rn_config_set_cache_dir(rn_config* config, const char* dir) {
    RN_REQUIRE(config, "null argument");
    if (dir)
        config->config.cache_dir = std::filesystem::path(dir);
    else
        config->config.cache_dir.reset();
    return RN_OK;
}

rn_status rn_config_set_seed(rn_config* config, uint64_t seed) {
    RN_REQUIRE(config, "null argument");
    config->config.seed = seed;
    return RN_OK;
}

rn_status rn_config_set_jobs(rn_config* config, int jobs) {
    RN_REQUIRE(config, "null argument");
    if (jobs < 1) return fail(RN_ERR_CONFIG, "jobs must be at least 1");
    config->config.jobs = jobs;
    return RN_OK;
}

rn_status rn_config_set_bootstrap(rn_config* config, int replicates) {
    RN_REQUIRE(config, "null argument");
    if (replicates < 0) return fail(RN_ERR_CONFIG, "bootstrap replicate count must be non-negative");
    config->config.bootstrap = replicates;
    return RN_OK;
}

rn_status rn_config_set_innovations(rn_config* config, const char* family) {
    RN_REQUIRE(config && family, "null argument");
    return guarded([&] {
        try {
            config->config.innovations = marginal::family_from_string(family);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    });
}

rn_status rn_config_set_dcc_order(rn_config* config, int m, int n) {
    RN_REQUIRE(config, "null argument");
    if (m < 0 || n < 0 || m + n < 1) return fail(RN_ERR_CONFIG, "DCC orders must be non-negative, not both zero");
    config->config.dcc_m = m;
    config->config.dcc_n = n;
    return RN_OK;
}

rn_status rn_config_set_optimizer(rn_config* config, double gradient_tolerance, int max_iterations) {
    RN_REQUIRE(config, "null argument");
    if (!(gradient_tolerance > 0.0) || max_iterations < 1) return fail(RN_ERR_CONFIG, "invalid optimizer settings");
    config->config.optimizer = {gradient_tolerance, max_iterations};
    return RN_OK;
}

rn_status rn_config_clear_formats(rn_config* config) {
    RN_REQUIRE(config, "null argument");
    config->config.formats.clear();
    return RN_OK;
}

rn_status rn_config_add_format(rn_config* config, const char* format) {
    RN_REQUIRE(config && format, "null argument");
    return guarded([&] { config->config.formats.insert(pipeline::format_from_string(format)); });
}

rn_status rn_config_add_tree(rn_config* config, const char* period) {
    RN_REQUIRE(config && period, "null argument");
    config->config.trees.emplace_back(period);
    return RN_OK;
}

rn_status rn_config_set_verbose(rn_config* config, int verbose) {
    RN_REQUIRE(config, "null argument");
    config->config.verbose = verbose != 0;
    return RN_OK;
}

rn_status rn_run(const rn_config* config, rn_manifest** out) { return run_with(config, out, pipeline::run_full); }

rn_status rn_run_indices(const rn_config* config, rn_manifest** out) {
    return run_with(config, out, pipeline::run_indices);
}

rn_status rn_export(const rn_config* config, rn_manifest** out) { return run_with(config, out, pipeline::run_export); }

int rn_manifest_exit_code(const rn_manifest* manifest) { return manifest ? manifest->manifest.exit_code() : -1; }

const char* rn_manifest_json(const rn_manifest* manifest) { return manifest ? manifest->json.c_str() : nullptr; }

size_t rn_manifest_failure_count(const rn_manifest* manifest) {
    return manifest ? manifest->manifest.failures.size() : 0;
}

const char* rn_manifest_failure(const rn_manifest* manifest, size_t index) {
    if (!manifest || index >= manifest->manifest.failures.size()) return nullptr;
    return manifest->manifest.failures[index].c_str();
}

size_t rn_manifest_artifact_count(const rn_manifest* manifest) {
    return manifest ? manifest->manifest.artifacts.size() : 0;
}

const char* rn_manifest_artifact_path(const rn_manifest* manifest, size_t index) {
    if (!manifest || index >= manifest->manifest.artifacts.size()) return nullptr;
    return manifest->manifest.artifacts[index].path.c_str();
}

const char* rn_manifest_artifact_hash(const rn_manifest* manifest, size_t index) {
    if (!manifest || index >= manifest->manifest.artifacts.size()) return nullptr;
    const auto& h = manifest->manifest.artifacts[index].hash;
    return h.empty() ? nullptr : h.c_str();
}

void rn_manifest_destroy(rn_manifest* manifest) { delete manifest; }

rn_status rn_simulate(const char* spec_json, uint64_t seed, const char* csv_path, const char* truth_path) {
    RN_REQUIRE(csv_path, "null argument");
    return guarded([&] {
        sim::SimSpec spec;
        if (spec_json) {
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(spec_json);
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(std::string("simulation spec is not valid JSON: ") + e.what());
            }
            spec = sim::sim_spec_from_json(j);
        }
        const auto result = sim::simulate_panel(spec, seed);
        const std::filesystem::path csv(csv_path);
        if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
        ingest::write_price_csv(result.prices, csv_path);
        if (truth_path) pipeline::write_file(truth_path, result.truth.dump(1) + "\n");
    });
}

rn_status rn_panel_load(const char* path, rn_panel** out) {
    RN_REQUIRE(path && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        auto p = std::make_unique<rn_panel>();
        p->panel = ingest::parse_price_csv(path);
        *out = p.release();
    });
}

size_t rn_panel_asset_count(const rn_panel* panel) { return panel ? panel->panel.asset_count() : 0; }

size_t rn_panel_period_count(const rn_panel* panel) { return panel ? panel->panel.period_count() : 0; }

const char* rn_panel_asset(const rn_panel* panel, size_t index) {
    if (!panel || index >= panel->panel.asset_count()) return nullptr;
    return panel->panel.assets[index].c_str();
}

const char* rn_panel_period(const rn_panel* panel, size_t index) {
    if (!panel || index >= panel->panel.period_count()) return nullptr;
    return panel->panel.periods[index].c_str();
}

double rn_panel_price(const rn_panel* panel, size_t period, size_t asset) {
    if (!panel || period >= panel->panel.period_count() || asset >= panel->panel.asset_count())
        return std::numeric_limits<double>::quiet_NaN();
    return panel->panel.price(period, asset);
}

rn_status rn_panel_write_returns(const rn_panel* panel, const char* path) {
    RN_REQUIRE(panel && path, "null argument");
    return guarded([&] { ingest::write_return_csv(ingest::log_returns(panel->panel), path); });
}

void rn_panel_destroy(rn_panel* panel) { delete panel; }

rn_status rn_mst_from_correlation(const double* rho, size_t k, rn_tree** out) {
    RN_REQUIRE(rho && out, "null argument");
    *out = nullptr;
    return guarded([&] {
        std::vector<std::string> names;
        for (size_t i = 0; i < k; ++i) names.push_back(std::to_string(i));
        auto t = std::make_unique<rn_tree>();
        t->tree = network::kruskal_mst(network::to_distance({rho, k * k}, names));
        *out = t.release();
    });
}

size_t rn_tree_node_count(const rn_tree* tree) { return tree ? tree->tree.size() : 0; }

size_t rn_tree_edge_count(const rn_tree* tree) { return tree ? tree->tree.edges.size() : 0; }

rn_status rn_tree_edge(const rn_tree* tree, size_t index, size_t* a, size_t* b, double* weight) {
    RN_REQUIRE(tree && a && b && weight, "null argument");
    RN_REQUIRE(index < tree->tree.edges.size(), "edge index out of range");
    const auto& e = tree->tree.edges[index];
    *a = e.a;
    *b = e.b;
    *weight = e.w;
    return RN_OK;
}

double rn_tree_apl(const rn_tree* tree) {
    return tree ? topology::average_path_length(tree->tree) : std::numeric_limits<double>::quiet_NaN();
}

int rn_tree_max_degree(const rn_tree* tree) { return tree ? topology::max_degree(tree->tree) : -1; }

rn_status rn_tree_betweenness(const rn_tree* tree, double* out, size_t capacity) {
    RN_REQUIRE(tree && out, "null argument");
    RN_REQUIRE(capacity >= tree->tree.size(), "output buffer too small");
    return guarded([&] {
        const auto bc = topology::betweenness_centrality(tree->tree);
        std::copy(bc.begin(), bc.end(), out);
    });
}

void rn_tree_destroy(rn_tree* tree) { delete tree; }

rn_status rn_fit_power_law(const int* values, size_t n, int replicates, uint64_t seed, double* alpha, double* pvalue,
                           int* alpha_valid) {
    RN_REQUIRE(values && alpha && pvalue && alpha_valid, "null argument");
    return guarded([&] {
        const auto fit = topology::fit_power_law({values, n}, {replicates, seed});
        *alpha = fit.alpha;
        *pvalue = fit.pvalue;
        *alpha_valid = fit.alpha_valid ? 1 : 0;
    });
}

}  // extern "C"
