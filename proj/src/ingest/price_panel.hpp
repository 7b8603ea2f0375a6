#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace risknet::ingest {

/// Aligned closing prices: one row per period, one column per asset.
/// Invariants (checked by validate()): unique asset ids, strictly increasing
/// ISO-8601 period labels, strictly positive finite prices, rectangular shape.
struct PricePanel {
    std::vector<std::string> assets;
    std::vector<std::string> periods;
    std::vector<double> prices;  // row-major, periods.size() x assets.size()

    std::size_t asset_count() const { return assets.size(); }
    std::size_t period_count() const { return periods.size(); }
    double price(std::size_t t, std::size_t i) const { return prices[t * assets.size() + i]; }
    std::vector<double> column(std::size_t i) const;

    void validate() const;
};

/// Log returns; periods[t] labels the return realised over (t-1, t] of the
/// source panel, so there is one label fewer than price rows.
struct ReturnPanel {
    std::vector<std::string> assets;
    std::vector<std::string> periods;
    std::vector<double> returns;  // row-major, T x k

    std::size_t asset_count() const { return assets.size(); }
    std::size_t period_count() const { return periods.size(); }
    double at(std::size_t t, std::size_t i) const { return returns[t * assets.size() + i]; }
    std::vector<double> column(std::size_t i) const;
};

struct IngestOptions {
    char delimiter = ',';
    std::size_t min_rows = 2;
};

PricePanel parse_price_csv(const std::filesystem::path& path, const IngestOptions& options = {});
PricePanel parse_price_csv_text(const std::string& text, const IngestOptions& options = {});

ReturnPanel log_returns(const PricePanel& panel);

/// Inverse of log_returns given the first price row.
PricePanel cumulate_returns(const ReturnPanel& returns, std::span<const double> first_prices,
                            const std::string& first_period);

/// Same layout as the input CSV: header `period,<assets...>`, one row per period.
void write_return_csv(const ReturnPanel& panel, const std::filesystem::path& path);
void write_price_csv(const PricePanel& panel, const std::filesystem::path& path);

bool is_iso_period_label(const std::string& label);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

}  // namespace risknet::ingest
