#include "premia/panel_data.hpp"

#include "premia/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace premia {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n\"");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n\"");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* begin = s.data();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

bool valid_month(int p) {
    const int month = p % 100;
    return p >= 100001 && p <= 999912 && month >= 1 && month <= 12;
}

std::string parse_error(const std::string& source, std::size_t line_no, const std::string& msg) {
    return source + ":" + std::to_string(line_no) + ": " + msg;
}

void check_increasing(const std::vector<Period>& periods, const char* what) {
    for (std::size_t t = 1; t < periods.size(); ++t) {
        if (periods[t] <= periods[t - 1]) {
            throw Error(ErrorKind::contract, std::string(what) + ": period labels not strictly increasing at " +
                                                 std::to_string(periods[t]));
        }
    }
}

template <typename Panel>
void write_panel(std::ostream& out, const std::vector<std::string>& names, const std::vector<Period>& periods,
                 const Panel& value_at) {
    out << "period";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (std::size_t t = 0; t < periods.size(); ++t) {
        out << periods[t];
        for (std::size_t c = 0; c < names.size(); ++c) out << ',' << format_double(value_at(t, c));
        out << '\n';
    }
}

RawTable read_canonical(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, "canonical csv: empty input");
    ++line_no;
    auto header = split_fields(line);
    if (header.empty() || header[0] != "period") {
        throw Error(ErrorKind::parse, parse_error("canonical csv", line_no, "header must start with 'period'"));
    }
    RawTable table;
    table.columns.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorKind::parse, parse_error("canonical csv", line_no, "ragged row"));
        }
        int period = 0;
        if (!parse_int(fields[0], period)) {
            throw Error(ErrorKind::parse, parse_error("canonical csv", line_no, "malformed period '" + fields[0] + "'"));
        }
        std::vector<double> row(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (!parse_double(fields[c], row[c - 1])) {
                throw Error(ErrorKind::parse, parse_error("canonical csv", line_no, "malformed value '" + fields[c] + "'"));
            }
        }
        table.periods.push_back(period);
        rows.push_back(std::move(row));
    }
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(table.columns.size()));
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t c = 0; c < rows[t].size(); ++c) {
            table.values(static_cast<Index>(t), static_cast<Index>(c)) = rows[t][c];
        }
    }
    return table;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    if (ec != std::errc()) throw Error(ErrorKind::contract, "format_double: conversion failed");
    return std::string(buf, ptr);
}

bool RawTable::has_column(const std::string& name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
}

Index RawTable::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorKind::parse, "column '" + name + "' not found");
    return static_cast<Index>(it - columns.begin());
}

RawTable RawTable::without_column(const std::string& name) const {
    const Index drop = column_index(name);
    RawTable out;
    out.periods = periods;
    out.values.resize(n_periods(), n_columns() - 1);
    Index dst = 0;
    for (Index c = 0; c < n_columns(); ++c) {
        if (c == drop) continue;
        out.columns.push_back(columns[static_cast<std::size_t>(c)]);
        out.values.col(dst++) = values.col(c);
    }
    return out;
}

PeriodSeries column_series(const RawTable& table, const std::string& name) {
    return {table.periods, table.values.col(table.column_index(name))};
}

void ReturnsPanel::validate() const {
    if (values.rows() < 1) throw Error(ErrorKind::insufficient_data, "returns panel has no assets");
    if (values.cols() < 8) {
        throw Error(ErrorKind::insufficient_data,
                    "returns panel needs at least 8 periods, got " + std::to_string(values.cols()));
    }
    if (static_cast<Index>(assets.size()) != values.rows() || static_cast<Index>(periods.size()) != values.cols()) {
        throw Error(ErrorKind::dimension, "returns panel labels do not match value shape");
    }
    if (!values.allFinite()) throw Error(ErrorKind::contract, "returns panel contains non-finite values");
    check_increasing(periods, "returns panel");
}

void FactorPanel::validate() const {
    if (values.cols() < 1) throw Error(ErrorKind::dimension, "factor panel has no factors");
    if (static_cast<Index>(names.size()) != values.cols() || static_cast<Index>(periods.size()) != values.rows()) {
        throw Error(ErrorKind::dimension, "factor panel labels do not match value shape");
    }
    if (!values.allFinite()) throw Error(ErrorKind::contract, "factor panel contains non-finite values");
    check_increasing(periods, "factor panel");
}

FactorPanel FactorPanel::select(const std::vector<Index>& columns) const {
    FactorPanel out;
    out.periods = periods;
    out.values.resize(n_periods(), static_cast<Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        const Index c = columns[k];
        if (c < 0 || c >= n_factors()) throw Error(ErrorKind::dimension, "factor column out of range");
        out.names.push_back(names[static_cast<std::size_t>(c)]);
        out.values.col(static_cast<Index>(k)) = values.col(c);
    }
    return out;
}

RawTable parse_french_csv(std::istream& in, const LoadOptions& options, const std::string& source) {
    if (options.block < 0) throw Error(ErrorKind::config, "block selector must be non-negative");

    // A block is a run of rows whose first field starts with a digit, labelled
    // by the nearest preceding line with an empty first field. Monthly blocks
    // are recognised by a six-digit date in their first row; annual blocks
    // (four-digit years) and free text are skipped.
    struct Block {
        std::vector<std::string> header;
        std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    };
    std::vector<Block> blocks;
    std::vector<std::string> header;
    bool in_block = false;
    std::size_t line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            in_block = false;
            continue;
        }
        auto fields = split_fields(line);
        const bool data_row = !fields[0].empty() && std::isdigit(static_cast<unsigned char>(fields[0][0]));
        if (!data_row) {
            in_block = false;
            header = fields[0].empty() && fields.size() > 1 ? fields : std::vector<std::string>{};
            continue;
        }
        if (!in_block) {
            blocks.push_back({header, {}});
            in_block = true;
        }
        blocks.back().rows.emplace_back(line_no, std::move(fields));
    }

    const Block* chosen = nullptr;
    int monthly_seen = 0;
    for (const auto& b : blocks) {
        if (b.rows.front().second[0].size() == 4) continue;
        if (monthly_seen++ == options.block) {
            chosen = &b;
            break;
        }
    }
    if (chosen == nullptr) {
        throw Error(ErrorKind::parse, source + ": monthly block " + std::to_string(options.block) + " not found");
    }

    const std::size_t width = chosen->header.empty() ? chosen->rows.front().second.size() : chosen->header.size();
    RawTable table;
    if (chosen->header.empty()) {
        for (std::size_t c = 1; c < width; ++c) table.columns.push_back("c" + std::to_string(c));
    } else {
        table.columns.assign(chosen->header.begin() + 1, chosen->header.end());
    }
    table.values.resize(static_cast<Index>(chosen->rows.size()), static_cast<Index>(width - 1));
    for (std::size_t t = 0; t < chosen->rows.size(); ++t) {
        const auto& [at, fields] = chosen->rows[t];
        int period = 0;
        if (!all_digits(fields[0]) || fields[0].size() != 6 || !parse_int(fields[0], period) || !valid_month(period)) {
            throw Error(ErrorKind::parse, parse_error(source, at, "malformed date '" + fields[0] + "'"));
        }
        if (fields.size() != width) {
            throw Error(ErrorKind::parse, parse_error(source, at,
                                                      "ragged row: expected " + std::to_string(width) +
                                                          " fields, got " + std::to_string(fields.size())));
        }
        for (std::size_t c = 1; c < width; ++c) {
            double v = 0.0;
            if (!parse_double(fields[c], v)) {
                throw Error(ErrorKind::parse, parse_error(source, at, "malformed value '" + fields[c] + "'"));
            }
            for (double code : options.missing_codes) {
                if (v == code) v = 0.0;
            }
            table.values(static_cast<Index>(t), static_cast<Index>(c - 1)) = v;
        }
        table.periods.push_back(period);
    }
    check_increasing(table.periods, source.c_str());
    return table;
}

RawTable load_french_portfolios(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    return parse_french_csv(in, options, path.string());
}

ReturnsPanel build_excess_returns(const RawTable& raw_returns, const PeriodSeries& risk_free) {
    const std::size_t n = std::min(raw_returns.periods.size(), risk_free.periods.size());
    for (std::size_t t = 0; t < n; ++t) {
        if (raw_returns.periods[t] != risk_free.periods[t]) {
            throw Error(ErrorKind::alignment,
                        "risk-free periods do not match returns; first mismatch at " +
                            std::to_string(raw_returns.periods[t]));
        }
    }
    if (raw_returns.periods.size() != risk_free.periods.size()) {
        const auto& longer = raw_returns.periods.size() > n ? raw_returns.periods : risk_free.periods;
        throw Error(ErrorKind::alignment,
                    "risk-free periods do not match returns; first mismatch at " + std::to_string(longer[n]));
    }
    ReturnsPanel panel;
    panel.assets = raw_returns.columns;
    panel.periods = raw_returns.periods;
    panel.values = (raw_returns.values.colwise() - risk_free.values).transpose();
    return panel;
}

ReturnsPanel returns_from_table(const RawTable& table) {
    ReturnsPanel panel;
    panel.assets = table.columns;
    panel.periods = table.periods;
    panel.values = table.values.transpose();
    return panel;
}

FactorPanel factors_from_table(const RawTable& table) {
    FactorPanel panel;
    panel.names = table.columns;
    panel.periods = table.periods;
    panel.values = table.values;
    return panel;
}

AlignedPanels align(const ReturnsPanel& returns, const FactorPanel& factors) {
    std::map<Period, Index> factor_pos;
    for (std::size_t t = 0; t < factors.periods.size(); ++t) factor_pos[factors.periods[t]] = static_cast<Index>(t);

    std::vector<std::pair<Period, std::pair<Index, Index>>> common;
    for (std::size_t t = 0; t < returns.periods.size(); ++t) {
        auto it = factor_pos.find(returns.periods[t]);
        if (it != factor_pos.end()) common.push_back({returns.periods[t], {static_cast<Index>(t), it->second}});
    }
    if (common.empty()) throw Error(ErrorKind::alignment, "returns and factors share no periods");
    std::sort(common.begin(), common.end());

    AlignedPanels out;
    out.returns.assets = returns.assets;
    out.factors.names = factors.names;
    const auto T = static_cast<Index>(common.size());
    out.returns.values.resize(returns.n_assets(), T);
    out.factors.values.resize(T, factors.n_factors());
    for (Index t = 0; t < T; ++t) {
        const auto& [period, pos] = common[static_cast<std::size_t>(t)];
        out.returns.periods.push_back(period);
        out.factors.periods.push_back(period);
        out.returns.values.col(t) = returns.values.col(pos.first);
        out.factors.values.row(t) = factors.values.row(pos.second);
    }
    return out;
}

FactorPanel append_factor(const FactorPanel& factors, const PeriodSeries& series, const std::string& name) {
    std::map<Period, double> lookup;
    for (std::size_t t = 0; t < series.periods.size(); ++t) lookup[series.periods[t]] = series.values(static_cast<Index>(t));
    FactorPanel out;
    out.names = factors.names;
    out.names.push_back(name);
    out.values.resize(factors.n_periods(), factors.n_factors() + 1);
    Index kept = 0;
    for (Index t = 0; t < factors.n_periods(); ++t) {
        auto it = lookup.find(factors.periods[static_cast<std::size_t>(t)]);
        if (it == lookup.end()) continue;
        out.periods.push_back(factors.periods[static_cast<std::size_t>(t)]);
        out.values.row(kept).head(factors.n_factors()) = factors.values.row(t);
        out.values(kept, factors.n_factors()) = it->second;
        ++kept;
    }
    if (kept == 0) throw Error(ErrorKind::alignment, "factor '" + name + "' shares no periods with the factor panel");
    out.values.conservativeResize(kept, Eigen::NoChange);
    return out;
}

void write_csv(std::ostream& out, const ReturnsPanel& panel) {
    write_panel(out, panel.assets, panel.periods,
                [&](std::size_t t, std::size_t i) { return panel.values(static_cast<Index>(i), static_cast<Index>(t)); });
}

void write_csv(std::ostream& out, const FactorPanel& panel) {
    write_panel(out, panel.names, panel.periods,
                [&](std::size_t t, std::size_t k) { return panel.values(static_cast<Index>(t), static_cast<Index>(k)); });
}

ReturnsPanel read_returns_csv(std::istream& in) { return returns_from_table(read_canonical(in)); }

FactorPanel read_factors_csv(std::istream& in) { return factors_from_table(read_canonical(in)); }

}  // namespace premia
