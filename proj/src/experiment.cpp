#include "premia/experiment.hpp"

#include "premia/errors.hpp"
#include "premia/four_split.hpp"
#include "premia/inference.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace premia {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SampleDiagnostics {
    double missing_strength = kNaN;
    double target_strength = kNaN;
    double loading_correlation = kNaN;
};

SampleDiagnostics sample_diagnostics(const SimulatedSample& s, Index target) {
    SampleDiagnostics d;
    const double T = static_cast<double>(s.factors.n_periods());
    d.missing_strength = s.truth.phi.squaredNorm() / T;
    const VectorXd col = s.factors.values.col(target);
    const double var = (col.array() - col.mean()).square().sum() / T;
    const VectorXd b = s.truth.betas.col(target);
    d.target_strength = b.squaredNorm() * var;
    const VectorXd pc = s.truth.phi.array() - s.truth.phi.mean();
    const VectorXd bc = b.array() - b.mean();
    const double denom = std::sqrt(pc.squaredNorm() * bc.squaredNorm());
    d.loading_correlation = denom > 0.0 ? pc.dot(bc) / denom : kNaN;
    return d;
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? kNaN : compensated_sum(v) / static_cast<double>(v.size());
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_number(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw Error(ErrorKind::config, "config: '" + key + "' expects a number, got '" + v + "'");
    }
}

Index to_count(const std::string& key, const std::string& v, Index min_value) {
    const double x = to_number(key, v);
    if (x != std::floor(x) || x < static_cast<double>(min_value)) {
        throw Error(ErrorKind::config, "config: '" + key + "' expects an integer >= " + std::to_string(min_value));
    }
    return static_cast<Index>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::config, "config: '" + key + "' expects true or false");
}

std::string csv_number(double x) { return std::isnan(x) ? "nan" : format_double(x); }

}  // namespace

std::string EstimatorSpec::label() const {
    if (method == Method::two_pass) return shanken ? "two-pass-shanken" : "two-pass";
    return "four-split";
}

double compensated_sum(const std::vector<double>& values) {
    double sum = 0.0;
    double comp = 0.0;
    for (double x : values) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) comp += (sum - t) + x;
        else comp += (x - t) + sum;
        sum = t;
    }
    return sum + comp;
}

McMetrics compute_metrics(const std::vector<ReplicationRecord>& records, Index R_t, Index R_i) {
    if (R_t < 1 || R_i < 1) throw Error(ErrorKind::config, "replication counts must be at least 1");
    if (static_cast<Index>(records.size()) != R_t * R_i) {
        throw Error(ErrorKind::dimension, "metrics: record count does not match R_t * R_i");
    }
    McMetrics m;
    m.R_t = R_t;
    m.R_i = R_i;
    std::vector<double> errors;
    std::vector<double> abs_means;
    std::vector<double> ses;
    Index tested = 0;
    Index rejected = 0;
    for (Index t = 0; t < R_t; ++t) {
        std::vector<double> inner;
        for (Index i = 0; i < R_i; ++i) {
            const auto& r = records[static_cast<std::size_t>(t * R_i + i)];
            if (!r.ok) {
                ++m.failures;
                continue;
            }
            errors.push_back(r.error);
            inner.push_back(r.error);
            if (r.tested) {
                ++tested;
                if (r.rejected) ++rejected;
                ses.push_back(r.std_error);
            }
        }
        if (!inner.empty()) abs_means.push_back(std::abs(mean_of(inner)));
    }
    m.successes = static_cast<Index>(errors.size());
    if (errors.empty()) {
        m.bias = m.abs_bias = m.std_dev = kNaN;
        return m;
    }
    m.bias = mean_of(errors);
    m.abs_bias = mean_of(abs_means);
    if (errors.size() > 1) {
        std::vector<double> sq;
        sq.reserve(errors.size());
        for (double e : errors) sq.push_back((e - m.bias) * (e - m.bias));
        m.std_dev = std::sqrt(compensated_sum(sq) / static_cast<double>(errors.size() - 1));
    } else {
        m.std_dev = 0.0;
    }
    if (tested > 0) {
        m.rejection_rate = static_cast<double>(rejected) / static_cast<double>(tested);
        m.mean_std_error = mean_of(ses);
    }
    return m;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
    if (config.R_t < 1 || config.R_i < 1) throw Error(ErrorKind::config, "R_t and R_i must be at least 1");
    if (config.grid.empty()) throw Error(ErrorKind::config, "experiment grid is empty");
    if (config.estimators.empty()) throw Error(ErrorKind::config, "no estimators selected");
    if (config.target < 0 || config.target >= 4) throw Error(ErrorKind::config, "target component must be in 0..3");
    for (const auto& p : config.grid) p.validate();

    const std::size_t G = config.grid.size();
    const std::size_t E = config.estimators.size();
    const auto reps = static_cast<std::size_t>(config.R_t * config.R_i);
    std::vector<std::vector<std::vector<ReplicationRecord>>> records(
        G, std::vector<std::vector<ReplicationRecord>>(E, std::vector<ReplicationRecord>(reps)));
    std::vector<std::vector<std::string>> messages(G, std::vector<std::string>(E * reps));
    std::vector<std::vector<SampleDiagnostics>> diags(G, std::vector<SampleDiagnostics>(reps));

    auto run_job = [&](std::size_t job) {
        const std::size_t g = job / reps;
        const std::size_t rep = job % reps;
        const auto t = static_cast<std::uint64_t>(rep / static_cast<std::size_t>(config.R_i));
        const DrawIndex index{t, static_cast<std::uint64_t>(rep)};
        const SimulatedSample sample = simulate(config.grid[g], index);
        diags[g][rep] = sample_diagnostics(sample, config.target);
        const double truth = sample.truth.lambda(config.target);
        const MatrixXd lrv = newey_west(sample.factors, config.nw_lags).omega;
        for (std::size_t e = 0; e < E; ++e) {
            const auto& spec = config.estimators[e];
            ReplicationRecord rec;
            try {
                EstimateResult est;
                if (spec.method == Method::two_pass) {
                    TwoPassOptions opt;
                    opt.shanken = spec.shanken;
                    est = two_pass_estimate(sample.returns, sample.factors, lrv, opt);
                } else {
                    FourSplitOptions opt;
                    opt.k_v = spec.k_v;
                    est = four_split_estimate(sample.returns, sample.factors, lrv, opt).as_estimate();
                }
                rec.estimate = est.lambda(config.target);
                rec.error = rec.estimate - truth;
                rec.ok = std::isfinite(rec.estimate);
                rec.std_error = est.std_errors(config.target);
                if (rec.std_error > 0.0) {
                    const auto test = t_test(est, config.target, truth);
                    rec.tested = true;
                    rec.rejected = test.decision_at_5pct;
                }
                if (!rec.ok) messages[g][e * reps + rep] = "non-finite estimate";
            } catch (const Error& err) {
                rec = ReplicationRecord{};
                messages[g][e * reps + rep] = err.what();
            }
            records[g][e][rep] = rec;
        }
    };

    const std::size_t jobs = G * reps;
    const unsigned threads = std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(jobs)));
    if (threads == 1) {
        for (std::size_t j = 0; j < jobs; ++j) run_job(j);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (std::size_t j = next++; j < jobs; j = next++) {
                    try {
                        run_job(j);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<ExperimentRow> rows;
    for (std::size_t g = 0; g < G; ++g) {
        std::vector<double> ms, ts, lc;
        for (const auto& d : diags[g]) {
            ms.push_back(d.missing_strength);
            ts.push_back(d.target_strength);
            lc.push_back(d.loading_correlation);
        }
        for (std::size_t e = 0; e < E; ++e) {
            ExperimentRow row;
            row.params = config.grid[g];
            row.estimator = config.estimators[e];
            row.metrics = compute_metrics(records[g][e], config.R_t, config.R_i);
            row.metrics.missing_strength = mean_of(ms);
            row.metrics.target_strength = mean_of(ts);
            row.metrics.loading_correlation = mean_of(lc);
            for (std::size_t r = 0; r < reps; ++r) {
                if (!messages[g][e * reps + r].empty()) {
                    row.metrics.first_failure = messages[g][e * reps + r];
                    break;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

ExperimentConfig parse_experiment_config(std::istream& in, const std::filesystem::path& base_dir) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::config, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (kv.count(key) != 0) {
            throw Error(ErrorKind::config, "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        kv[key] = trim(line.substr(eq + 1));
    }

    static const std::vector<std::string> known{"theta_phi", "sigma_xi2", "alpha",    "varphi",  "R_t",
                                                "R_i",       "seed",      "estimators", "k_v",   "shanken",
                                                "xi_draw",   "N",         "T",        "target",  "nw_lags",
                                                "calibration", "threads"};
    for (const auto& [k, v] : kv) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw Error(ErrorKind::config, "config: unknown key '" + k + "'");
        }
    }

    DgpParams base;
    if (kv.count("calibration")) {
        std::filesystem::path p = kv["calibration"];
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        base.calibration = load_calibration(p);
    }
    if (kv.count("alpha")) base.alpha = to_number("alpha", kv["alpha"]);
    if (kv.count("varphi")) base.varphi = to_number("varphi", kv["varphi"]);
    if (kv.count("xi_draw")) base.xi_draw = parse_xi_draw(kv["xi_draw"]);
    if (kv.count("seed")) {
        const std::string& s = kv["seed"];
        try {
            std::size_t pos = 0;
            base.seed = std::stoull(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "config: 'seed' expects a non-negative integer");
        }
    }
    if (kv.count("N")) base.N = to_count("N", kv["N"], 1);
    if (kv.count("T")) base.T = to_count("T", kv["T"], 8);

    std::vector<double> thetas{base.theta_phi};
    std::vector<double> xis{base.sigma_xi2};
    if (kv.count("theta_phi")) {
        thetas.clear();
        for (const auto& s : split_list(kv["theta_phi"])) thetas.push_back(to_number("theta_phi", s));
    }
    if (kv.count("sigma_xi2")) {
        xis.clear();
        for (const auto& s : split_list(kv["sigma_xi2"])) xis.push_back(to_number("sigma_xi2", s));
    }
    if (thetas.empty() || xis.empty()) throw Error(ErrorKind::config, "config: empty grid list");

    ExperimentConfig cfg;
    for (double th : thetas) {
        for (double x : xis) {
            DgpParams p = base;
            p.theta_phi = th;
            p.sigma_xi2 = x;
            cfg.grid.push_back(p);
        }
    }
    if (kv.count("R_t")) cfg.R_t = to_count("R_t", kv["R_t"], 1);
    if (kv.count("R_i")) cfg.R_i = to_count("R_i", kv["R_i"], 1);
    if (kv.count("target")) cfg.target = to_count("target", kv["target"], 0);
    if (kv.count("nw_lags")) cfg.nw_lags = to_count("nw_lags", kv["nw_lags"], 0);
    if (kv.count("threads")) cfg.threads = static_cast<unsigned>(to_count("threads", kv["threads"], 1));
    const Index k_v = kv.count("k_v") ? to_count("k_v", kv["k_v"], 0) : 1;
    const bool shanken = kv.count("shanken") ? to_bool("shanken", kv["shanken"]) : false;
    if (kv.count("estimators")) {
        cfg.estimators.clear();
        for (const auto& s : split_list(kv["estimators"])) {
            EstimatorSpec e;
            e.method = parse_method(s);
            e.k_v = k_v;
            e.shanken = shanken;
            cfg.estimators.push_back(e);
        }
        if (cfg.estimators.empty()) throw Error(ErrorKind::config, "config: no estimators listed");
    } else {
        for (auto& e : cfg.estimators) {
            e.k_v = k_v;
            e.shanken = shanken;
        }
    }
    for (const auto& p : cfg.grid) {
        try {
            p.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::config, std::string("config: ") + e.what());
        }
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config '" + path.string() + "'");
    return parse_experiment_config(in, path.parent_path());
}

void write_metrics_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    out << "theta_phi,sigma_xi2,alpha,varphi,xi_draw,missing_strength,target_strength,loading_correlation,"
           "estimator,bias,abs_bias,std_dev,rejection_rate,coverage,mean_std_error,R_t,R_i,successes,failures\n";
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        out << csv_number(r.params.theta_phi) << ',' << csv_number(r.params.sigma_xi2) << ','
            << csv_number(r.params.alpha) << ',' << csv_number(r.params.varphi) << ','
            << to_string(r.params.xi_draw) << ',' << csv_number(m.missing_strength) << ','
            << csv_number(m.target_strength) << ',' << csv_number(m.loading_correlation) << ','
            << r.estimator.label() << ',' << csv_number(m.bias) << ',' << csv_number(m.abs_bias) << ','
            << csv_number(m.std_dev) << ',' << csv_number(m.rejection_rate) << ',' << csv_number(m.coverage())
            << ',' << csv_number(m.mean_std_error) << ',' << m.R_t << ',' << m.R_i << ',' << m.successes << ','
            << m.failures << '\n';
    }
}

void write_metrics_json(std::ostream& out, const std::vector<ExperimentRow>& rows) {
    auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        nlohmann::json j;
        j["theta_phi"] = r.params.theta_phi;
        j["sigma_xi2"] = r.params.sigma_xi2;
        j["alpha"] = r.params.alpha;
        j["varphi"] = r.params.varphi;
        j["xi_draw"] = to_string(r.params.xi_draw);
        j["missing_strength"] = num(m.missing_strength);
        j["target_strength"] = num(m.target_strength);
        j["loading_correlation"] = num(m.loading_correlation);
        j["estimator"] = r.estimator.label();
        j["bias"] = num(m.bias);
        j["abs_bias"] = num(m.abs_bias);
        j["std_dev"] = num(m.std_dev);
        j["rejection_rate"] = num(m.rejection_rate);
        j["coverage"] = num(m.coverage());
        j["mean_std_error"] = num(m.mean_std_error);
        j["R_t"] = m.R_t;
        j["R_i"] = m.R_i;
        j["successes"] = m.successes;
        j["failures"] = m.failures;
        if (!m.first_failure.empty()) j["first_failure"] = m.first_failure;
        arr.push_back(j);
    }
    out << arr.dump(2) << '\n';
}

}  // namespace premia
