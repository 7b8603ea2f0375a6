#include "pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include "copula/copula_dcc.hpp"
#include "copula/cube.hpp"
#include "core/error.hpp"
#include "core/hash.hpp"
#include "core/parallel.hpp"
#include "ingest/price_panel.hpp"
#include "network/network.hpp"
#include "pipeline/exports.hpp"
#include "topology/topology.hpp"

namespace fs = std::filesystem;

namespace risknet::pipeline {

Format format_from_string(const std::string& s) {
    if (s == "csv") return Format::csv;
    if (s == "json") return Format::json;
    if (s == "dot") return Format::dot;
    if (s == "svg") return Format::svg;
    throw ConfigError("unknown format '" + s + "' (expected csv, json, dot or svg)");
}

std::string to_string(Format f) {
    switch (f) {
        case Format::csv: return "csv";
        case Format::json: return "json";
        case Format::dot: return "dot";
        case Format::svg: return "svg";
    }
    return "?";
}

void RunConfig::validate() const {
    if (input.empty()) throw ConfigError("no input given");
    if (out.empty()) throw ConfigError("no output directory given");
    if (!(optimizer.gradient_tolerance > 0.0)) throw ConfigError("gradient tolerance must be positive");
    if (optimizer.max_iterations < 1) throw ConfigError("iteration limit must be at least 1");
    if (dcc_m < 0 || dcc_n < 0 || dcc_m + dcc_n < 1) throw ConfigError("DCC orders must be non-negative, not both zero");
    if (orders.p < 0 || orders.q < 0 || orders.pv < 0 || orders.qv < 0) throw ConfigError("ARMA/eGARCH orders must be non-negative");
    if (bootstrap < 0) throw ConfigError("bootstrap replicate count must be non-negative");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

nlohmann::json RunConfig::to_json() const {
    std::vector<std::string> fmts;
    for (auto f : formats) fmts.push_back(pipeline::to_string(f));
    return {{"seed", seed},
            {"gradient_tolerance", optimizer.gradient_tolerance},
            {"max_iterations", optimizer.max_iterations},
            {"innovations", marginal::to_string(innovations)},
            {"orders", {orders.p, orders.q, orders.pv, orders.qv}},
            {"dcc", {dcc_m, dcc_n}},
            {"bootstrap", bootstrap},
            {"formats", fmts},
            {"trees", trees}};
}

std::string RunConfig::hash() const { return to_hex(hash_bytes(to_json().dump())); }

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return exit_config;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const IoError*>(&e)) return exit_data;
    if (dynamic_cast<const EstimationError*>(&e) || dynamic_cast<const DomainError*>(&e)) return exit_estimation;
    return exit_data;
}

namespace {

using Clock = std::chrono::steady_clock;

class Stopwatch {
public:
    double lap() {
        const auto now = Clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    Clock::time_point last_ = Clock::now();
};

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p) {
    try {
        return nlohmann::json::parse(read_text(p));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

void write_atomic(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    write_file(tmp, text);
    fs::rename(tmp, path);
}

fs::path cache_root(const RunConfig& c) {
    if (c.cache_dir) return *c.cache_dir;
    if (const char* env = std::getenv("RISKNET_CACHE_DIR"); env && *env) return fs::path(env);
    return c.out / "cache";
}

// Collects output files; hashes them at the end in path order.
class Outputs {
public:
    explicit Outputs(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

    const fs::path& root() const { return root_; }
    void write(const std::string& rel, const std::string& text) {
        write_file(root_ / rel, text);
        add(rel);
    }
    void add(const std::string& rel) { files_.push_back(rel); }
    void add(const fs::path& abs) { files_.push_back(fs::relative(abs, root_).generic_string()); }

    std::vector<Artifact> hashed() const {
        std::vector<std::string> sorted = files_;
        std::sort(sorted.begin(), sorted.end());
        sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
        std::vector<Artifact> out;
        for (const auto& rel : sorted) out.push_back({rel, hash_file_hex((root_ / rel).string())});
        return out;
    }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

void log(const RunConfig& c, const std::string& msg) {
    if (c.verbose) std::cerr << msg << '\n';
}

struct MarginalOutcome {
    std::optional<marginal::MarginalFit> fit;
    bool cached = false;
    std::string failure;
};

struct PairOutcome {
    std::size_t i = 0, j = 0;
    copula::DccFit fit;
    bool fallback = false;
    bool cached = false;
    std::string failure;
};

std::string marginal_key(std::span<const double> r, const RunConfig& c) {
    Fnv1a h;
    h.update(std::string_view("marginal/v1"));
    h.update(r);
    h.update(nlohmann::json({c.orders.p, c.orders.q, c.orders.pv, c.orders.qv, marginal::to_string(c.innovations),
                             c.optimizer.gradient_tolerance, c.optimizer.max_iterations})
                 .dump());
    return h.hex();
}

std::string pair_key(std::span<const double> u1, std::span<const double> u2, const RunConfig& c) {
    Fnv1a h;
    h.update(std::string_view("pair/v1"));
    h.update(u1);
    h.update(u2);
    h.update(nlohmann::json({c.dcc_m, c.dcc_n, c.optimizer.gradient_tolerance, c.optimizer.max_iterations}).dump());
    return h.hex();
}

MarginalOutcome fit_asset(std::span<const double> r, const RunConfig& c, const fs::path& cache) {
    MarginalOutcome out;
    const fs::path file = cache / "marginal" / (marginal_key(r, c) + ".json");
    if (fs::exists(file)) {
        try {
            const auto j = read_json(file);
            out.fit = marginal::marginal_fit_from_json(j.at("fit"), r);
            out.failure = j.at("failure").get<std::string>();
            out.cached = true;
            return out;
        } catch (const std::exception&) {
            // unreadable cache entry: refit
        }
    }
    marginal::MarginalConfig mc;
    mc.orders = c.orders;
    mc.family = c.innovations;
    mc.optimizer = c.optimizer;
    try {
        out.fit = marginal::fit_marginal(r, mc);
    } catch (const marginal::MarginalConvergenceError& e) {
        out.fit = e.best();
        out.failure = e.what();
    } catch (const EstimationError& e) {
        out.failure = e.what();
        return out;
    } catch (const DomainError& e) {
        out.failure = e.what();
        return out;
    }
    write_atomic(file, nlohmann::json({{"fit", marginal::to_json(*out.fit)}, {"failure", out.failure}}).dump());
    return out;
}

PairOutcome fit_one_pair(std::size_t i, std::size_t j, std::span<const double> u1, std::span<const double> u2,
                         const RunConfig& c, const fs::path& cache) {
    PairOutcome out;
    out.i = i;
    out.j = j;
    const fs::path file = cache / "pair" / (pair_key(u1, u2, c) + ".json");
    if (fs::exists(file)) {
        try {
            const auto jj = read_json(file);
            out.fit = copula::dcc_fit_from_json(jj.at("fit"));
            out.fallback = jj.at("fallback").get<bool>();
            out.failure = jj.at("failure").get<std::string>();
            out.cached = true;
            return out;
        } catch (const std::exception&) {
        }
    }
    copula::DccConfig dc;
    dc.m = c.dcc_m;
    dc.n = c.dcc_n;
    dc.optimizer = c.optimizer;
    double nu_fallback = 8.0;
    copula::PairDiagnostics diag;
    try {
        out.fit = copula::fit_pair(u1, u2, dc);
    } catch (const copula::PairConvergenceError& e) {
        out.failure = e.what();
        nu_fallback = e.best().params.nu;
        diag = e.best().diagnostics;
    } catch (const EstimationError& e) {
        out.failure = e.what();
    } catch (const DomainError& e) {
        out.failure = e.what();
    }
    if (!out.failure.empty()) {
        // Constant path at the targeted unconditional correlation.
        copula::DccParams p;
        p.c.assign(static_cast<std::size_t>(c.dcc_m), 0.0);
        p.d.assign(static_cast<std::size_t>(c.dcc_n), 0.0);
        p.nu = nu_fallback;
        out.fit = copula::make_pair_fit(u1, u2, p);
        diag.converged = false;
        diag.message = out.failure;
        out.fit.diagnostics = diag;
        out.fallback = true;
    }
    write_atomic(file, nlohmann::json({{"fit", copula::to_json(out.fit)},
                                       {"fallback", out.fallback},
                                       {"failure", out.failure}})
                           .dump());
    return out;
}

std::vector<network::SpanningTree> build_trees(const copula::CorrelationCube& cube, int jobs) {
    std::vector<network::SpanningTree> trees(cube.period_count());
    parallel_for(cube.period_count(), jobs, [&](std::size_t t) {
        const auto slice = cube.slice(t);
        trees[t] = network::kruskal_mst(network::to_distance(slice, cube.assets), cube.periods[t]);
    });
    return trees;
}

nlohmann::json trees_json(const std::vector<network::SpanningTree>& trees) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : trees) arr.push_back(network::to_json(t));
    return arr;
}

// Stage-two outputs shared by run_full, run_indices and run_export.
void emit_stage_two(const RunConfig& c, Outputs& out, const std::vector<network::SpanningTree>& trees,
                    const topology::TopologySeries& series, bool write_json) {
    if (c.formats.count(Format::json) && write_json) {
        out.write("trees.json", trees_json(trees).dump(1) + "\n");
        out.write("topology.json", topology::to_json(series).dump(1) + "\n");
    }
    if (c.formats.count(Format::csv)) {
        topology::write_series_csv(series, out.root() / "topology.csv");
        out.add(std::string("topology.csv"));
        topology::write_bc_mean_csv(series, out.root() / "bc_mean.csv");
        out.add(std::string("bc_mean.csv"));
    }
    if (c.formats.count(Format::svg))
        for (const auto& f : export_plots(series, out.root() / "plots")) out.add(f);
    if (c.formats.count(Format::dot))
        for (const auto& f : export_dot(trees, c.trees, out.root() / "trees")) out.add(f);
}

void topology_failures(const topology::TopologySeries& series, std::vector<std::string>& failures) {
    for (const auto& r : series.records)
        if (!r.error.empty()) failures.push_back("topology " + r.period + ": " + r.error);
}

RunManifest finish(const std::string& command, const RunConfig& c, Outputs& out, nlohmann::json body,
                   std::vector<std::string> failures, nlohmann::json stats) {
    RunManifest m;
    m.command = command;
    m.failures = std::move(failures);
    m.stats = std::move(stats);
    write_file(out.root() / "run_stats.json", m.stats.dump(1) + "\n");
    m.artifacts = out.hashed();
    m.artifacts.push_back({"run_stats.json", ""});
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& a : m.artifacts)
        artifacts.push_back({{"path", a.path}, {"hash", a.hash.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.hash)}});
    body["command"] = command;
    body["config_hash"] = c.hash();
    body["config"] = c.to_json();
    body["failures"] = m.failures;
    body["status"] = m.failures.empty() ? "ok" : "flagged";
    body["artifacts"] = std::move(artifacts);
    m.content = std::move(body);
    write_file(out.root() / "manifest.json", m.content.dump(1) + "\n");
    return m;
}

}  // namespace

RunManifest run_full(const RunConfig& c) {
    c.validate();
    Stopwatch clock;
    nlohmann::json timings;
    const auto panel = ingest::parse_price_csv(c.input);
    const auto returns = ingest::log_returns(panel);
    const std::size_t k = returns.asset_count(), T = returns.period_count();
    if (k < 2) throw DataError("need at least two assets");
    if (T < 10) throw DataError("need at least 10 return periods");
    timings["ingest"] = clock.lap();
    log(c, "ingested " + std::to_string(k) + " assets x " + std::to_string(T) + " returns");

    Outputs out(c.out);
    const fs::path cache = cache_root(c);
    std::vector<std::string> failures;

    std::vector<MarginalOutcome> margins(k);
    parallel_for(k, c.jobs, [&](std::size_t i) {
        const auto r = returns.column(i);
        margins[i] = fit_asset(r, c, cache);
        log(c, "marginal " + returns.assets[i] + (margins[i].failure.empty() ? " ok" : " flagged"));
    });
    timings["marginals"] = clock.lap();

    nlohmann::json marginal_summary = nlohmann::json::array();
    std::vector<std::vector<double>> pit(k);
    int marginal_hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto& m = margins[i];
        marginal_hits += m.cached;
        if (!m.failure.empty()) failures.push_back("marginal " + returns.assets[i] + ": " + m.failure);
        nlohmann::json entry = {{"asset", returns.assets[i]}, {"usable", m.fit.has_value()}};
        if (m.fit) {
            pit[i] = m.fit->pit;
            entry["converged"] = m.fit->diagnostics.converged;
            entry["iterations"] = m.fit->diagnostics.iterations;
            entry["gradient_norm"] = m.fit->diagnostics.gradient_norm;
            entry["loglik"] = m.fit->loglik;
        }
        marginal_summary.push_back(std::move(entry));
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (margins[i].fit && margins[j].fit) pairs.emplace_back(i, j);
    std::vector<PairOutcome> fits(pairs.size());
    std::mutex log_mutex;
    std::size_t done = 0;
    parallel_for(pairs.size(), c.jobs, [&](std::size_t p) {
        const auto [i, j] = pairs[p];
        fits[p] = fit_one_pair(i, j, pit[i], pit[j], c, cache);
        if (c.verbose) {
            std::lock_guard lock(log_mutex);
            ++done;
            if (done % 25 == 0 || done == pairs.size())
                log(c, "pair fits " + std::to_string(done) + "/" + std::to_string(pairs.size()));
        }
    });
    timings["pairs"] = clock.lap();

    nlohmann::json pair_summary = nlohmann::json::array();
    std::vector<copula::PairPath> paths;
    int pair_hits = 0, fallbacks = 0, gaussian = 0;
    for (const auto& f : fits) {
        pair_hits += f.cached;
        fallbacks += f.fallback;
        gaussian += f.fit.diagnostics.effectively_gaussian;
        const std::string name = returns.assets[f.i] + "/" + returns.assets[f.j];
        if (!f.failure.empty()) failures.push_back("pair " + name + ": " + f.failure);
        pair_summary.push_back({{"pair", name},
                                {"converged", f.fit.diagnostics.converged},
                                {"fallback", f.fallback},
                                {"iterations", f.fit.diagnostics.iterations},
                                {"c", f.fit.params.c},
                                {"d", f.fit.params.d},
                                {"nu", f.fit.params.nu},
                                {"effectively_gaussian", f.fit.diagnostics.effectively_gaussian},
                                {"loglik", f.fit.loglik}});
        paths.push_back({f.i, f.j, f.fit.rho_path});
    }

    if (fits.size() != k * (k - 1) / 2) {
        std::string lost;
        for (const auto& f : failures) lost += "\n  " + f;
        throw EstimationError("unusable marginal fits leave pairs without PIT series:" + lost);
    }
    const auto cube = copula::assemble_cube(returns.assets, returns.periods, paths);
    const auto trees = build_trees(cube, c.jobs);
    timings["trees"] = clock.lap();
    const auto series = topology::compute_series(trees, {c.bootstrap, c.seed, c.jobs});
    topology_failures(series, failures);
    timings["topology"] = clock.lap();

    if (c.formats.count(Format::json)) {
        out.write("cube.json", copula::to_json(cube).dump() + "\n");
        nlohmann::json fits_doc = {{"marginals", nlohmann::json::array()}, {"pairs", nlohmann::json::array()}};
        for (std::size_t i = 0; i < k; ++i) {
            nlohmann::json e = {{"asset", returns.assets[i]}};
            if (margins[i].fit) e["fit"] = marginal::to_json(*margins[i].fit);
            fits_doc["marginals"].push_back(std::move(e));
        }
        for (const auto& f : fits) {
            auto e = copula::to_json(f.fit);
            e.erase("rho_path");
            fits_doc["pairs"].push_back(
                {{"pair", returns.assets[f.i] + "/" + returns.assets[f.j]}, {"fallback", f.fallback}, {"fit", e}});
        }
        out.write("fits.json", fits_doc.dump(1) + "\n");
    }
    if (c.formats.count(Format::csv))
        for (const auto& f : copula::write_cube_csv(cube, out.root() / "cube")) out.add(f);
    emit_stage_two(c, out, trees, series, true);
    timings["exports"] = clock.lap();

    nlohmann::json body = {
        {"input", {{"file", c.input.filename().string()}, {"hash", hash_file_hex(c.input.string())}}},
        {"dimensions", {{"assets", k}, {"periods", T}, {"pairs", k * (k - 1) / 2}, {"trees", trees.size()}}},
        {"summary",
         {{"marginal_fits", k},
          {"marginal_failures", std::count_if(margins.begin(), margins.end(), [](const auto& m) { return !m.failure.empty(); })},
          {"pair_fits", fits.size()},
          {"pair_fallbacks", fallbacks},
          {"effectively_gaussian", gaussian},
          {"topology_errors", std::count_if(series.records.begin(), series.records.end(),
                                            [](const auto& r) { return !r.error.empty(); })}}},
        {"marginals", std::move(marginal_summary)},
        {"pairs", std::move(pair_summary)},
    };
    nlohmann::json stats = {{"timings_seconds", timings},
                            {"jobs", c.jobs},
                            {"cache_dir", cache.string()},
                            {"marginal_cache_hits", marginal_hits},
                            {"marginal_fits_computed", static_cast<int>(k) - marginal_hits},
                            {"pair_cache_hits", pair_hits},
                            {"pair_fits_computed", static_cast<int>(fits.size()) - pair_hits}};
    return finish("run", c, out, std::move(body), std::move(failures), std::move(stats));
}

RunManifest run_indices(const RunConfig& c) {
    c.validate();
    Stopwatch clock;
    const auto cube = copula::cube_from_json(read_json(c.input));
    Outputs out(c.out);
    const auto trees = build_trees(cube, c.jobs);
    const auto series = topology::compute_series(trees, {c.bootstrap, c.seed, c.jobs});
    std::vector<std::string> failures;
    topology_failures(series, failures);
    emit_stage_two(c, out, trees, series, true);
    nlohmann::json body = {
        {"input", {{"file", c.input.filename().string()}, {"hash", hash_file_hex(c.input.string())}}},
        {"dimensions", {{"assets", cube.asset_count()}, {"periods", cube.period_count()}, {"trees", trees.size()}}},
    };
    return finish("indices", c, out, std::move(body), std::move(failures),
                  {{"timings_seconds", {{"indices", clock.lap()}}}, {"jobs", c.jobs}});
}

RunManifest run_export(const RunConfig& c) {
    c.validate();
    Stopwatch clock;
    const auto series = topology::series_from_json(read_json(c.input / "topology.json"));
    std::vector<network::SpanningTree> trees;
    const auto tj = read_json(c.input / "trees.json");
    if (!tj.is_array()) throw DataError("trees.json must hold an array");
    for (const auto& t : tj) trees.push_back(network::tree_from_json(t));
    Outputs out(c.out);
    const bool same_dir = fs::weakly_canonical(c.input) == fs::weakly_canonical(c.out);
    emit_stage_two(c, out, trees, series, !same_dir);
    std::vector<std::string> failures;
    topology_failures(series, failures);
    nlohmann::json body = {{"input", {{"topology_hash", hash_file_hex((c.input / "topology.json").string())},
                                      {"trees_hash", hash_file_hex((c.input / "trees.json").string())}}}};
    return finish("export", c, out, std::move(body), std::move(failures),
                  {{"timings_seconds", {{"export", clock.lap()}}}});
}

}  // namespace risknet::pipeline
