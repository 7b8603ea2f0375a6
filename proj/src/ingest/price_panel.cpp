#include "ingest/price_panel.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"

namespace risknet::ingest {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == delim && !quoted) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(trim(cur));
    return out;
}

std::string where(std::size_t line, std::size_t col, const std::string& asset) {
    return "line " + std::to_string(line) + ", column " + std::to_string(col + 1) + " (" + asset + ")";
}

bool all_digits(std::string_view s) {
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return !s.empty();
}

}  // namespace

bool is_iso_period_label(const std::string& s) {
    // YYYY-MM-DD, optionally followed by THH:MM[:SS]
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return false;
    if (!all_digits(std::string_view(s).substr(0, 4)) || !all_digits(std::string_view(s).substr(5, 2)) ||
        !all_digits(std::string_view(s).substr(8, 2)))
        return false;
    const int month = std::stoi(s.substr(5, 2));
    const int day = std::stoi(s.substr(8, 2));
    if (month < 1 || month > 12 || day < 1 || day > 31) return false;
    if (s.size() == 10) return true;
    if (s[10] != 'T' && s[10] != ' ') return false;
    const std::string_view time = std::string_view(s).substr(11);
    if (time.size() != 5 && time.size() != 8) return false;
    if (time[2] != ':' || !all_digits(time.substr(0, 2)) || !all_digits(time.substr(3, 2))) return false;
    if (time.size() == 8 && (time[5] != ':' || !all_digits(time.substr(6, 2)))) return false;
    return true;
}

std::string format_double(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::vector<double> PricePanel::column(std::size_t i) const {
    std::vector<double> out(periods.size());
    for (std::size_t t = 0; t < periods.size(); ++t) out[t] = price(t, i);
    return out;
}

std::vector<double> ReturnPanel::column(std::size_t i) const {
    std::vector<double> out(periods.size());
    for (std::size_t t = 0; t < periods.size(); ++t) out[t] = at(t, i);
    return out;
}

void PricePanel::validate() const {
    if (assets.empty()) throw DataError("price panel has no asset columns");
    if (prices.size() != assets.size() * periods.size())
        throw DataError("price panel is not rectangular");
    std::unordered_set<std::string> seen;
    for (const auto& a : assets) {
        if (a.empty()) throw DataError("empty asset identifier");
        if (!seen.insert(a).second) throw DataError("duplicate asset identifier: " + a);
    }
    for (std::size_t t = 0; t < periods.size(); ++t) {
        if (!is_iso_period_label(periods[t]))
            throw DataError("period label is not an ISO date: '" + periods[t] + "' (row " +
                            std::to_string(t + 1) + ")");
        if (t > 0 && !(periods[t - 1] < periods[t]))
            throw DataError("period labels not strictly increasing at row " + std::to_string(t + 1) +
                            ": '" + periods[t - 1] + "' then '" + periods[t] + "'");
    }
    for (std::size_t t = 0; t < periods.size(); ++t)
        for (std::size_t i = 0; i < assets.size(); ++i) {
            const double p = price(t, i);
            if (!std::isfinite(p) || p <= 0.0)
                throw DataError("non-positive price at period " + periods[t] + ", asset " + assets[i]);
        }
}

PricePanel parse_price_csv_text(const std::string& text, const IngestOptions& options) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;

    PricePanel panel;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
            static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
            line.erase(0, 3);  // UTF-8 BOM
        if (trim(line).empty()) continue;
        auto fields = split_fields(line, options.delimiter);
        if (!have_header) {
            if (fields.size() < 2) throw DataError("header needs a period column and at least one asset");
            panel.assets.assign(fields.begin() + 1, fields.end());
            have_header = true;
            continue;
        }
        const std::size_t k = panel.assets.size();
        if (fields.size() != k + 1)
            throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                            std::to_string(k + 1) + " fields, found " + std::to_string(fields.size()));
        const std::string& label = fields[0];
        if (!is_iso_period_label(label))
            throw DataError("period label is not an ISO date at line " + std::to_string(line_no) + ": '" +
                            label + "'");
        if (!panel.periods.empty() && !(panel.periods.back() < label))
            throw DataError("non-monotone period labels at line " + std::to_string(line_no) + ": '" +
                            panel.periods.back() + "' then '" + label + "'");
        panel.periods.push_back(label);
        for (std::size_t i = 0; i < k; ++i) {
            const std::string& cell = fields[i + 1];
            if (cell.empty())
                throw DataError("missing price at " + where(line_no, i + 1, panel.assets[i]));
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw DataError("unparseable price '" + cell + "' at " + where(line_no, i + 1, panel.assets[i]));
            if (!std::isfinite(value) || value <= 0.0)
                throw DataError("non-positive price '" + cell + "' at " + where(line_no, i + 1, panel.assets[i]));
            panel.prices.push_back(value);
        }
    }
    if (!have_header) throw DataError("empty CSV input");
    if (panel.periods.size() < options.min_rows)
        throw DataError("need at least " + std::to_string(options.min_rows) + " price rows, found " +
                        std::to_string(panel.periods.size()));
    panel.validate();
    return panel;
}

PricePanel parse_price_csv(const std::filesystem::path& path, const IngestOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open price file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_price_csv_text(ss.str(), options);
}

ReturnPanel log_returns(const PricePanel& panel) {
    ReturnPanel out;
    out.assets = panel.assets;
    const std::size_t k = panel.asset_count();
    const std::size_t rows = panel.period_count();
    if (rows < 2) throw DataError("need at least two price rows for returns");
    out.periods.assign(panel.periods.begin() + 1, panel.periods.end());
    out.returns.resize((rows - 1) * k);
    for (std::size_t t = 0; t + 1 < rows; ++t)
        for (std::size_t i = 0; i < k; ++i)
            out.returns[t * k + i] = std::log(panel.price(t + 1, i) / panel.price(t, i));
    return out;
}

PricePanel cumulate_returns(const ReturnPanel& returns, std::span<const double> first_prices,
                            const std::string& first_period) {
    const std::size_t k = returns.asset_count();
    if (first_prices.size() != k) throw DataError("first price row has wrong width");
    PricePanel out;
    out.assets = returns.assets;
    out.periods.push_back(first_period);
    out.periods.insert(out.periods.end(), returns.periods.begin(), returns.periods.end());
    out.prices.assign(first_prices.begin(), first_prices.end());
    std::vector<double> log_level(k);
    for (std::size_t i = 0; i < k; ++i) log_level[i] = std::log(first_prices[i]);
    for (std::size_t t = 0; t < returns.period_count(); ++t)
        for (std::size_t i = 0; i < k; ++i) {
            log_level[i] += returns.at(t, i);
            out.prices.push_back(std::exp(log_level[i]));
        }
    return out;
}

namespace {

void write_matrix_csv(const std::filesystem::path& path, const std::vector<std::string>& assets,
                      const std::vector<std::string>& periods, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "period";
    for (const auto& a : assets) out << ',' << a;
    out << '\n';
    const std::size_t k = assets.size();
    for (std::size_t t = 0; t < periods.size(); ++t) {
        out << periods[t];
        for (std::size_t i = 0; i < k; ++i) out << ',' << format_double(values[t * k + i]);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

void write_return_csv(const ReturnPanel& panel, const std::filesystem::path& path) {
    write_matrix_csv(path, panel.assets, panel.periods, panel.returns);
}

void write_price_csv(const PricePanel& panel, const std::filesystem::path& path) {
    write_matrix_csv(path, panel.assets, panel.periods, panel.prices);
}

}  // namespace risknet::ingest
