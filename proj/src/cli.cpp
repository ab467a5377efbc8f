#include "premia/cli.hpp"

#include "premia/calibration.hpp"
#include "premia/experiment.hpp"
#include "premia/four_split.hpp"
#include "premia/inference.hpp"
#include "premia/two_pass.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

namespace premia {

namespace {

constexpr const char* kRiskFreeColumn = "RF";

bool looks_canonical(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    return first.rfind("period,", 0) == 0;
}

RawTable read_canonical_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    const FactorPanel p = read_factors_csv(in);
    RawTable t;
    t.columns = p.names;
    t.periods = p.periods;
    t.values = p.values;
    return t;
}

MatrixXd read_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw Error(ErrorKind::parse, path.string() + ": malformed matrix entry '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw Error(ErrorKind::parse, path.string() + ": ragged matrix row");
        }
        rows.push_back(std::move(row));
    }
    MatrixXd m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
    return m;
}

// Output goes to --out when given, otherwise to the supplied stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw Error(ErrorKind::io, "cannot write '" + path + "'");
            stream_ = &file_;
        }
    }
    std::ostream& get() { return *stream_; }

private:
    std::ofstream file_;
    std::ostream* stream_;
};

struct DataOptions {
    std::string returns;
    std::string factors;
    std::string riskfree;
    std::string momentum;
    int block = 0;

    InputPaths paths() const {
        InputPaths p;
        p.returns = returns;
        p.factors = factors;
        if (!riskfree.empty()) p.riskfree = riskfree;
        if (!momentum.empty()) p.momentum = momentum;
        p.block = block;
        return p;
    }
};

void add_data_options(CLI::App* cmd, DataOptions& d, bool momentum_required) {
    cmd->add_option("--returns", d.returns, "Portfolio returns (French CSV or canonical CSV)")->required();
    cmd->add_option("--factors", d.factors, "Factor returns; an RF column is used as the risk-free rate")->required();
    cmd->add_option("--riskfree", d.riskfree, "Separate risk-free file (column RF or the first column)");
    auto* mom = cmd->add_option("--momentum", d.momentum, "Momentum factor file, appended as factor 'mom'");
    if (momentum_required) mom->required();
    cmd->add_option("--block", d.block, "Zero-based monthly block to read from French files")->check(CLI::NonNegativeNumber);
}

struct EstimateOptions {
    DataOptions data;
    std::string method = "both";
    Index k_v = 1;
    Index nw_lags = 4;
    std::string a_matrix;
    std::string out;
    std::string format = "csv";
    bool shanken = false;
    bool zero_beta = false;
};

struct MethodReport {
    std::string label;
    EstimateResult estimate;
    TestResult spec;
};

std::vector<MethodReport> run_estimates(const LoadedData& data, const EstimateOptions& opt) {
    const Index kF = data.factors.n_factors();
    if (opt.k_v > kF) {
        throw Error(ErrorKind::identification, "k_v = " + std::to_string(opt.k_v) + " exceeds the number of factors (" +
                                                   std::to_string(kF) + ")");
    }
    const bool both = opt.method == "both";
    const bool want_tp = both || parse_method(opt.method) == Method::two_pass;
    const bool want_fs = both || parse_method(opt.method) == Method::four_split;
    const MatrixXd lrv = newey_west(data.factors, opt.nw_lags).omega;
    const VectorXd means = data.factors.means();

    std::vector<MethodReport> out;
    if (want_tp) {
        TwoPassOptions tp;
        tp.shanken = opt.shanken;
        tp.zero_beta_intercept = opt.zero_beta;
        MethodReport r;
        r.label = to_string(Method::two_pass);
        r.estimate = two_pass_estimate(data.returns, data.factors, lrv, tp);
        r.spec = specification_test(r.estimate, means);
        out.push_back(std::move(r));
    }
    if (want_fs) {
        FourSplitOptions fs;
        fs.k_v = opt.k_v;
        if (!opt.a_matrix.empty()) fs.A = read_matrix(opt.a_matrix);
        const auto res = four_split_estimate(data.returns, data.factors, lrv, fs);
        MethodReport r;
        r.label = to_string(Method::four_split);
        r.estimate = res.as_estimate();
        r.spec = specification_test(res, means);
        out.push_back(std::move(r));
    }
    return out;
}

void write_report(std::ostream& os, const std::string& format, const LoadedData& data,
                  const std::vector<MethodReport>& reports, bool spec_only) {
    const auto& names = data.factors.names;
    const VectorXd means = data.factors.means();
    // Standard errors of the factor means from the same Newey-West matrix.
    const VectorXd mean_se = reports.empty()
                                 ? VectorXd::Zero(means.size())
                                 : VectorXd(reports.front().estimate.factor_mean_covariance.diagonal().cwiseSqrt());

    if (format == "json") {
        nlohmann::json j;
        j["N"] = data.returns.n_assets();
        j["T"] = data.returns.n_periods();
        j["factors"] = names;
        j["average_excess_return"] = nlohmann::json::array();
        for (Index k = 0; k < means.size(); ++k) {
            j["average_excess_return"].push_back({{"factor", names[static_cast<std::size_t>(k)]},
                                                  {"estimate", means(k)},
                                                  {"std_error", mean_se(k)}});
        }
        for (const auto& r : reports) {
            nlohmann::json m;
            m["method"] = r.label;
            if (!spec_only) {
                for (Index k = 0; k < r.estimate.lambda.size(); ++k) {
                    m["lambda"].push_back({{"factor", names[static_cast<std::size_t>(k)]},
                                           {"estimate", r.estimate.lambda(k)},
                                           {"std_error", r.estimate.std_errors(k)}});
                }
            }
            m["spec_test"] = {{"statistic", r.spec.statistic},
                              {"dof", r.spec.dof},
                              {"p_value", r.spec.p_value},
                              {"weight_not_psd", r.spec.weight_not_psd}};
            for (const auto& [k, v] : r.estimate.diagnostics) m["diagnostics"][k] = v;
            j["methods"].push_back(m);
        }
        os << j.dump(2) << '\n';
        return;
    }
    os << "row,method,factor,estimate,std_error,statistic,dof,p_value\n";
    if (!spec_only) {
        for (const auto& r : reports) {
            for (Index k = 0; k < r.estimate.lambda.size(); ++k) {
                os << "lambda," << r.label << ',' << names[static_cast<std::size_t>(k)] << ','
                   << format_double(r.estimate.lambda(k)) << ',' << format_double(r.estimate.std_errors(k))
                   << ",,,\n";
            }
        }
    }
    for (Index k = 0; k < means.size(); ++k) {
        os << "average_excess_return,sample," << names[static_cast<std::size_t>(k)] << ',' << format_double(means(k))
           << ',' << format_double(mean_se(k)) << ",,,\n";
    }
    for (const auto& r : reports) {
        os << "spec_test," << r.label << ",all,,," << format_double(r.spec.statistic) << ',' << r.spec.dof << ','
           << format_double(r.spec.p_value) << '\n';
    }
}

int cmd_estimate(const EstimateOptions& opt, std::ostream& out, bool spec_only) {
    if (opt.format != "csv" && opt.format != "json") throw Error(ErrorKind::config, "format must be csv or json");
    if (opt.method != "both") (void)parse_method(opt.method);
    const LoadedData data = load_inputs(opt.data.paths());
    const auto reports = run_estimates(data, opt);
    Sink sink(opt.out, out);
    write_report(sink.get(), opt.format, data, reports, spec_only);
    return exit_ok;
}

struct CalibrateOptions {
    DataOptions data;
    std::string out;
};

int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out) {
    const LoadedData data = load_inputs(opt.data.paths());
    const Index k = data.factors.n_factors();
    if (k < 4) throw Error(ErrorKind::dimension, "calibrate needs three observed factors plus momentum");
    const FactorPanel ff = data.factors.select({0, 1, 2});
    const VectorXd mom = data.factors.values.col(k - 1);
    const CalibrationSummary c = calibrate(data.returns, ff, mom);
    const StrengthReport strengths = strength_report(data.returns, ff);
    Sink sink(opt.out, out);
    sink.get() << to_json(c, &strengths);
    return exit_ok;
}

struct SimulateOptions {
    std::string config;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
    if (opt.format != "csv" && opt.format != "json") throw Error(ErrorKind::config, "format must be csv or json");
    ExperimentConfig cfg = load_experiment_config(opt.config);
    if (opt.seed) {
        for (auto& p : cfg.grid) p.seed = *opt.seed;
    }
    if (opt.threads > 0) cfg.threads = opt.threads;
    const auto rows = run_experiment(cfg);
    Sink sink(opt.out, out);
    if (opt.format == "json") write_metrics_json(sink.get(), rows);
    else write_metrics_csv(sink.get(), rows);
    return exit_ok;
}

}  // namespace

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::io:
        case ErrorKind::parse:
        case ErrorKind::alignment:
            return exit_io;
        case ErrorKind::singular:
        case ErrorKind::identification:
        case ErrorKind::insufficient_data:
        case ErrorKind::degenerate_variance:
            return exit_identification;
        case ErrorKind::config:
        case ErrorKind::parameter:
        case ErrorKind::bandwidth:
            return exit_config;
        case ErrorKind::dimension:
        case ErrorKind::contract:
            return exit_internal;
    }
    return exit_internal;
}

RawTable read_table(const std::filesystem::path& path, int block) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::io, "file not found: '" + path.string() + "'");
    if (looks_canonical(path)) return read_canonical_table(path);
    LoadOptions opt;
    opt.block = block;
    return load_french_portfolios(path, opt);
}

LoadedData load_inputs(const InputPaths& paths) {
    const RawTable raw_returns = read_table(paths.returns, paths.block);
    RawTable factor_table = read_table(paths.factors, 0);

    std::optional<PeriodSeries> rf;
    if (paths.riskfree) {
        const RawTable rft = read_table(*paths.riskfree, 0);
        rf = column_series(rft, rft.has_column(kRiskFreeColumn) ? kRiskFreeColumn : rft.columns.front());
    } else if (factor_table.has_column(kRiskFreeColumn)) {
        rf = column_series(factor_table, kRiskFreeColumn);
    }
    if (factor_table.has_column(kRiskFreeColumn)) factor_table = factor_table.without_column(kRiskFreeColumn);

    FactorPanel factors = factors_from_table(factor_table);
    if (paths.momentum) {
        const RawTable mt = read_table(*paths.momentum, 0);
        factors = append_factor(factors, column_series(mt, mt.columns.front()), "mom");
    }
    // Carry the risk-free rate through alignment as a temporary factor column.
    const std::string rf_tmp = "__rf";
    if (rf) factors = append_factor(factors, *rf, rf_tmp);

    auto aligned = align(returns_from_table(raw_returns), factors);
    LoadedData out;
    if (rf) {
        const Index last = aligned.factors.n_factors() - 1;
        const VectorXd rate = aligned.factors.values.col(last);
        aligned.returns.values.rowwise() -= rate.transpose();
        std::vector<Index> keep;
        for (Index k = 0; k < last; ++k) keep.push_back(k);
        aligned.factors = aligned.factors.select(keep);
    }
    out.returns = std::move(aligned.returns);
    out.factors = std::move(aligned.factors);
    out.returns.validate();
    out.factors.validate();
    return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Risk premia estimation for linear factor models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "premia 1.0.0");

    EstimateOptions est;
    auto* c_est = app.add_subcommand("estimate", "Two-pass and four-split risk premia on a return panel");
    add_data_options(c_est, est.data, false);
    c_est->add_option("--method", est.method, "two-pass, four-split or both")->capture_default_str();
    c_est->add_option("--kv", est.k_v, "Number of missing-factor proxies for the four-split estimator")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    c_est->add_option("--nw-lags", est.nw_lags, "Newey-West lags for the factor long-run variance")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    c_est->add_option("--a-matrix", est.a_matrix, "CSV with the k_v x k_F proxy matrix A");
    c_est->add_option("--out", est.out, "Output path (default standard output)");
    c_est->add_option("--format", est.format, "csv or json")->capture_default_str();
    c_est->add_flag("--shanken", est.shanken, "Apply the Shanken multiplier to the two-pass covariance");
    c_est->add_flag("--zero-beta", est.zero_beta, "Add a zero-beta rate to the two-pass second stage");

    EstimateOptions spec;
    auto* c_spec = app.add_subcommand("spec-test", "Specification test of premia against factor means");
    add_data_options(c_spec, spec.data, false);
    c_spec->add_option("--method", spec.method, "two-pass, four-split or both")->capture_default_str();
    c_spec->add_option("--kv", spec.k_v, "Number of missing-factor proxies")->check(CLI::NonNegativeNumber);
    c_spec->add_option("--nw-lags", spec.nw_lags, "Newey-West lags")->check(CLI::NonNegativeNumber);
    c_spec->add_option("--a-matrix", spec.a_matrix, "CSV with the k_v x k_F proxy matrix A");
    c_spec->add_option("--out", spec.out, "Output path (default standard output)");
    c_spec->add_option("--format", spec.format, "csv or json");

    CalibrateOptions cal;
    auto* c_cal = app.add_subcommand("calibrate", "Calibrate the simulation design and report factor strengths");
    add_data_options(c_cal, cal.data, true);
    c_cal->add_option("--out", cal.out, "Output JSON path (default standard output)");

    SimulateOptions sim;
    std::uint64_t seed = 0;
    auto* c_sim = app.add_subcommand("simulate", "Monte Carlo experiment driven by a config file");
    c_sim->add_option("--config", sim.config, "Experiment config file")->required();
    c_sim->add_option("--out", sim.out, "Output path (default standard output)");
    c_sim->add_option("--format", sim.format, "csv or json")->capture_default_str();
    auto* seed_opt = c_sim->add_option("--seed", seed, "Override the config seed");
    c_sim->add_option("--threads", sim.threads, "Worker threads (default from config, else 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_config;
    }

    try {
        if (c_est->parsed()) return cmd_estimate(est, out, false);
        if (c_spec->parsed()) return cmd_estimate(spec, out, true);
        if (c_cal->parsed()) return cmd_calibrate(cal, out);
        if (c_sim->parsed()) {
            if (seed_opt->count() > 0) sim.seed = seed;
            return cmd_simulate(sim, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return exit_internal;
    }
    return exit_internal;
}

}  // namespace premia
