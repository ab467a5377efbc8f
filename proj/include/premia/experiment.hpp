#pragma once

#include "premia/dgp.hpp"
#include "premia/two_pass.hpp"

#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace premia {

struct EstimatorSpec {
    Method method = Method::four_split;
    Index k_v = 1;
    bool shanken = false;

    std::string label() const;
};

struct ExperimentConfig {
    std::vector<DgpParams> grid;
    Index R_t = 1;
    Index R_i = 1;
    std::vector<EstimatorSpec> estimators{{Method::two_pass}, {Method::four_split}};
    Index target = 3;
    Index nw_lags = 4;
    unsigned threads = 1;
};

/// Outcome of one estimator on one replication.
struct ReplicationRecord {
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double error = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    bool tested = false;
    bool rejected = false;
};

struct McMetrics {
    double bias = 0.0;
    double abs_bias = 0.0;
    double std_dev = 0.0;
    /// NaN when no replication produced a usable standard error.
    double rejection_rate = std::numeric_limits<double>::quiet_NaN();
    double mean_std_error = std::numeric_limits<double>::quiet_NaN();
    double missing_strength = std::numeric_limits<double>::quiet_NaN();
    double target_strength = std::numeric_limits<double>::quiet_NaN();
    double loading_correlation = std::numeric_limits<double>::quiet_NaN();
    Index R_t = 0;
    Index R_i = 0;
    Index successes = 0;
    Index failures = 0;
    std::string first_failure;

    double coverage() const { return 1.0 - rejection_rate; }
};

/// Records are laid out time-series-major: index t * R_i + i.
/// bias and std_dev use all successful replications; abs_bias averages the
/// absolute per-time-series mean error over time-series draws.
McMetrics compute_metrics(const std::vector<ReplicationRecord>& records, Index R_t, Index R_i);

struct ExperimentRow {
    DgpParams params;
    EstimatorSpec estimator;
    McMetrics metrics;
};

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

/// Key-value config: "key = value" per line, lists comma separated, '#'
/// comments. Relative calibration paths resolve against base_dir.
ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

void write_metrics_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);
void write_metrics_json(std::ostream& out, const std::vector<ExperimentRow>& rows);

/// Order-independent-precision summation (Neumaier).
double compensated_sum(const std::vector<double>& values);

}  // namespace premia
