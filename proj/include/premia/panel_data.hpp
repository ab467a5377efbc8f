#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace premia {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Monthly period label encoded as YYYYMM.
using Period = int;

/// Table as read from a French-library file: one row per period, one column
/// per series.
struct RawTable {
    std::vector<std::string> columns;
    std::vector<Period> periods;
    MatrixXd values;  // periods x columns

    Index n_periods() const { return static_cast<Index>(periods.size()); }
    Index n_columns() const { return static_cast<Index>(columns.size()); }

    bool has_column(const std::string& name) const;
    Index column_index(const std::string& name) const;
    RawTable without_column(const std::string& name) const;
};

/// A single time series with period labels (risk-free rate, momentum, ...).
struct PeriodSeries {
    std::vector<Period> periods;
    VectorXd values;
};

PeriodSeries column_series(const RawTable& table, const std::string& name);

/// N x T excess returns in percent per month.
struct ReturnsPanel {
    std::vector<std::string> assets;
    std::vector<Period> periods;
    MatrixXd values;  // N x T

    Index n_assets() const { return values.rows(); }
    Index n_periods() const { return values.cols(); }

    /// Throws on broken invariants (shape, finiteness, ordering, T >= 8).
    void validate() const;
};

/// T x k_F observed factor realisations in percent per month.
struct FactorPanel {
    std::vector<std::string> names;
    std::vector<Period> periods;
    MatrixXd values;  // T x k_F

    Index n_factors() const { return values.cols(); }
    Index n_periods() const { return values.rows(); }

    void validate() const;
    VectorXd means() const { return values.colwise().mean().transpose(); }
    FactorPanel select(const std::vector<Index>& columns) const;
};

struct LoadOptions {
    std::vector<double> missing_codes{-99.99, -999.0};
    /// Zero-based index of the monthly block to read.
    int block = 0;
};

/// Reads a French-library style CSV: free text header lines, a column header
/// line, then rows "YYYYMM, v1, ..., vN". Only the selected monthly block is
/// returned; annual blocks and text trailers are skipped. Sentinel values are
/// replaced by zero.
RawTable load_french_portfolios(const std::filesystem::path& path, const LoadOptions& options = {});
RawTable parse_french_csv(std::istream& in, const LoadOptions& options = {},
                          const std::string& source = "<stream>");

ReturnsPanel build_excess_returns(const RawTable& raw_returns, const PeriodSeries& risk_free);
/// Raw table taken as already in excess-return units.
ReturnsPanel returns_from_table(const RawTable& table);
FactorPanel factors_from_table(const RawTable& table);

struct AlignedPanels {
    ReturnsPanel returns;
    FactorPanel factors;
};

/// Restricts both panels to their common periods.
AlignedPanels align(const ReturnsPanel& returns, const FactorPanel& factors);
/// Appends a series as an extra factor column over the factor panel's periods.
FactorPanel append_factor(const FactorPanel& factors, const PeriodSeries& series, const std::string& name);

// Canonical CSV: header "period,<names>", one row per period, "%.17g" values.
void write_csv(std::ostream& out, const ReturnsPanel& panel);
void write_csv(std::ostream& out, const FactorPanel& panel);
ReturnsPanel read_returns_csv(std::istream& in);
FactorPanel read_factors_csv(std::istream& in);

std::string format_double(double value);

}  // namespace premia
