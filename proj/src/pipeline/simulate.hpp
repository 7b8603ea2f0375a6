#pragma once

// Synthetic data from the model equations: ARMA-eGARCH margins coupled by a
// Student-t copula whose correlation follows a DCC(1,1) recursion. The
// recursion targets a base correlation matrix (global factor plus a banded
// chain); an optional stress window switches the target to a one-factor
// matrix with a dominant hub asset.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "ingest/price_panel.hpp"
#include "json.hpp"
#include "marginal/marginal.hpp"

namespace risknet::sim {

struct StressWindow {
    std::size_t start = 0;  // first stressed return period
    std::size_t end = 0;    // one past the last
    std::size_t hub = 0;
    double hub_loading = 0.97;
    double loading = 0.7;
};

struct SimSpec {
    std::size_t assets = 28;
    std::size_t periods = 747;  // return periods; the panel has one more price row
    std::string start_date = "2005-01-07";
    int step_days = 7;
    marginal::ModelOrders orders;
    marginal::MarginalParams marginal = default_marginal_truth();
    std::optional<double> copula_nu = 6.0;  // nullopt: Gaussian copula
    double dcc_c = 0.05;
    double dcc_d = 0.90;
    double base_global = 0.3;  // target rho(i,j) = g + (1 - g) chain^|i-j|
    double base_chain = 0.2;
    std::optional<StressWindow> stress;
    std::size_t burn_in = 200;
    double initial_price = 100.0;

    static marginal::MarginalParams default_marginal_truth();
    /// Throws ConfigError for infeasible settings (c + d >= 1, bad loadings, ...).
    void validate() const;
};

nlohmann::json to_json(const SimSpec& spec);
SimSpec sim_spec_from_json(const nlohmann::json& j);

struct SimResult {
    ingest::PricePanel prices;
    std::vector<double> true_rho;  // T x k x k conditional correlations of the generator
    nlohmann::json truth;
};

SimResult simulate_panel(const SimSpec& spec, std::uint64_t seed);

/// One return series of length T from the marginal model (burn-in discarded).
std::vector<double> simulate_marginal(const marginal::MarginalParams& params, const marginal::ModelOrders& orders,
                                      std::size_t T, Rng& rng, std::size_t burn_in = 500);

struct PairSample {
    std::vector<double> u1;
    std::vector<double> u2;
    std::vector<double> rho;  // true conditional correlation
};

/// PIT pair from a bivariate t copula with DCC(1,1) correlation around rho_bar.
PairSample simulate_dcc_pair(double c, double d, double nu, double rho_bar, std::size_t T, Rng& rng,
                             std::size_t burn_in = 500);

/// ISO dates start, start + step, ...
std::vector<std::string> date_labels(const std::string& start, int step_days, std::size_t n);

}  // namespace risknet::sim
