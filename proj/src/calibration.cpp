#include "premia/calibration.hpp"

#include "premia/errors.hpp"
#include "premia/numkernel.hpp"
#include "premia/two_pass.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace premia {

namespace {

using nlohmann::json;

json vec_json(const VectorXd& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json mat_json(const MatrixXd& m) {
    json a = json::array();
    for (Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
    return a;
}

VectorXd json_vec(const json& j, const char* key, Index expected) {
    if (!j.contains(key)) throw Error(ErrorKind::config, std::string("calibration: missing '") + key + "'");
    const auto& a = j.at(key);
    if (!a.is_array() || static_cast<Index>(a.size()) != expected) {
        throw Error(ErrorKind::config, std::string("calibration: '") + key + "' must have " +
                                           std::to_string(expected) + " entries");
    }
    VectorXd v(expected);
    for (Index i = 0; i < expected; ++i) v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

MatrixXd json_mat(const json& j, const char* key, Index rows, Index cols) {
    if (!j.contains(key)) throw Error(ErrorKind::config, std::string("calibration: missing '") + key + "'");
    const auto& a = j.at(key);
    if (!a.is_array() || static_cast<Index>(a.size()) != rows) {
        throw Error(ErrorKind::config, std::string("calibration: '") + key + "' has the wrong shape");
    }
    MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = a.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            throw Error(ErrorKind::config, std::string("calibration: '") + key + "' has the wrong shape");
        }
        for (Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return m;
}

double json_num(const json& j, const char* key) {
    if (!j.contains(key)) throw Error(ErrorKind::config, std::string("calibration: missing '") + key + "'");
    return j.at(key).get<double>();
}

bool is_psd(const MatrixXd& S) {
    if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff())) return false;
    return min_eigenvalue(S) >= -1e-10 * std::max(1.0, S.trace());
}

}  // namespace

void CalibrationSummary::validate() const {
    if (mu_gamma.size() != 3 || V_gamma.rows() != 3 || V_gamma.cols() != 3 || eta0_F.size() != 3 ||
        eta_F.rows() != 3 || eta_F.cols() != 3 || Sigma_res.rows() != 3 || Sigma_res.cols() != 3 ||
        eta_mom.size() != 3 || lambda_true.size() != 4) {
        throw Error(ErrorKind::parameter, "calibration: field has the wrong dimension");
    }
    if (!is_psd(V_gamma)) throw Error(ErrorKind::parameter, "calibration: V_gamma is not symmetric PSD");
    if (!is_psd(Sigma_res)) throw Error(ErrorKind::parameter, "calibration: Sigma_res is not symmetric PSD");
    if (!(v_phi > 0.0)) throw Error(ErrorKind::parameter, "calibration: v_phi must be positive");
    if (!(sigma_eps2 > 0.0)) throw Error(ErrorKind::parameter, "calibration: sigma_eps2 must be positive");
    if (!(sigma_mom2 > 0.0)) throw Error(ErrorKind::parameter, "calibration: sigma_mom2 must be positive");
    if (N < 1 || T < 8) throw Error(ErrorKind::parameter, "calibration: need N >= 1 and T >= 8");
    if (factor_names.size() != 4) throw Error(ErrorKind::parameter, "calibration: need four factor names");
}

StrengthReport strength_report(const ReturnsPanel& returns, const FactorPanel& factors) {
    StrengthReport rep;
    const Index m = std::min<Index>(4, std::min(returns.n_assets(), returns.n_periods()));
    const auto pc = pca(returns.values, m, true);
    const double T = static_cast<double>(returns.n_periods());
    // Each factor has unit sum of squares, hence variance 1/T.
    rep.pc_strengths = pc.singular_values.head(m).array().square() / T;
    rep.pc_explained = pc.explained_fraction;

    const BetaSet bs = first_pass_betas(returns, factors);
    const VectorXd var = factor_covariance(factors).diagonal();
    rep.factor_strengths = bs.betas.colwise().squaredNorm().transpose().cwiseProduct(var);
    rep.factor_names = factors.names;
    return rep;
}

CalibrationSummary calibrate(const ReturnsPanel& returns, const FactorPanel& ff_factors, const VectorXd& momentum) {
    const Index N = returns.n_assets();
    const Index T = returns.n_periods();
    if (N < 5 || T <= 20) throw Error(ErrorKind::insufficient_data, "calibrate: need N >= 5 and T > 20");
    if (ff_factors.n_factors() != 3) throw Error(ErrorKind::dimension, "calibrate: expects three observed factors");
    if (ff_factors.n_periods() != T || momentum.size() != T) {
        throw Error(ErrorKind::alignment, "calibrate: returns, factors and momentum must share periods");
    }

    const auto pc = pca(returns.values, 4, true);
    const MatrixXd G = pc.factors.leftCols(3);
    const MatrixXd gamma = pc.loadings.topRows(3).transpose();  // N x 3
    const VectorXd phi = pc.loadings.row(3).transpose();
    const double n = static_cast<double>(N);
    const double t = static_cast<double>(T);

    CalibrationSummary c;
    c.N = N;
    c.T = T;
    c.mu_gamma = gamma.colwise().mean().transpose();
    const MatrixXd gc = gamma.rowwise() - c.mu_gamma.transpose();
    c.V_gamma = gc.transpose() * gc / n;
    c.mu_phi = phi.mean();
    c.v_phi = (phi.array() - c.mu_phi).square().sum() / n;
    c.sigma_eps2 = pc.singular_values.tail(pc.singular_values.size() - 4).squaredNorm() / (n * t);

    const auto ff = ols_multi(ff_factors.values, G, true);
    c.eta0_F = ff.intercepts;
    c.eta_F = ff.coefficients.transpose();
    c.Sigma_res = ff.residuals.transpose() * ff.residuals / t;

    const auto mom = ols(momentum, G, true);
    c.eta0_mom = mom.intercept;
    c.eta_mom = mom.coefficients;
    c.sigma_mom2 = mom.residuals.squaredNorm() / t;

    c.lambda_true.resize(4);
    c.lambda_true.head(3) = ff_factors.means();
    c.lambda_true(3) = momentum.mean();
    c.factor_names = ff_factors.names;
    c.factor_names.push_back("mom");
    return c;
}

CalibrationSummary reference_calibration() {
    CalibrationSummary c;
    c.N = 100;
    c.T = 504;
    const double sT = std::sqrt(504.0);
    c.mu_gamma = (VectorXd(3) << 117.0, 5.0, 2.0).finished();
    MatrixXd second = VectorXd((VectorXd(3) << 14193.0, 1204.6, 569.5).finished()).asDiagonal();
    c.V_gamma = second - c.mu_gamma * c.mu_gamma.transpose();
    c.mu_phi = 1.0;
    c.v_phi = 251.0;
    c.sigma_eps2 = 6.39;
    c.lambda_true = (VectorXd(4) << 0.527, 0.187, 0.401, 0.708).finished();
    c.eta0_F = c.lambda_true.head(3);
    c.eta0_mom = c.lambda_true(3);
    c.eta_F = (MatrixXd(3, 3) << 3.872903952006621, 1.5187741948555717, 1.2137270917532292,
               0.023361724226756135, 3.0247543611782093, -0.25751677157137626,
               -1.437150755598924, -0.7292180387070849, 1.9262238210377147)
                  .finished() *
              sT;
    c.Sigma_res = (MatrixXd(3, 3) << 0.5808064770585949, -0.14784164334920777, -0.7684457237103842,
                   -0.14784164334920777, 1.024000431976288, 0.4153147518726718,
                   -0.7684457237103842, 0.4153147518726718, 2.102500535304766)
                      .finished();
    c.eta_mom = (VectorXd(3) << -1.0109711012265767, 0.34102701373344485, -2.002143936583606).finished() * sT;
    c.sigma_mom2 = 12.453057665590276;
    return c;
}

std::string to_json(const CalibrationSummary& c, const StrengthReport* strengths) {
    json j;
    j["N"] = c.N;
    j["T"] = c.T;
    j["factor_names"] = c.factor_names;
    j["mu_gamma"] = vec_json(c.mu_gamma);
    j["V_gamma"] = mat_json(c.V_gamma);
    j["mu_phi"] = c.mu_phi;
    j["v_phi"] = c.v_phi;
    j["sigma_eps2"] = c.sigma_eps2;
    j["eta0_F"] = vec_json(c.eta0_F);
    j["eta_F"] = mat_json(c.eta_F);
    j["Sigma_res"] = mat_json(c.Sigma_res);
    j["eta0_mom"] = c.eta0_mom;
    j["eta_mom"] = vec_json(c.eta_mom);
    j["sigma_mom2"] = c.sigma_mom2;
    j["lambda_true"] = vec_json(c.lambda_true);
    if (strengths != nullptr) {
        j["strengths"]["pc_strengths"] = vec_json(strengths->pc_strengths);
        j["strengths"]["pc_explained_fraction"] = vec_json(strengths->pc_explained);
        j["strengths"]["factor_strengths"] = vec_json(strengths->factor_strengths);
        j["strengths"]["factor_names"] = strengths->factor_names;
    }
    return j.dump(2) + "\n";
}

CalibrationSummary calibration_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("calibration: invalid JSON: ") + e.what());
    }
    CalibrationSummary c;
    try {
        c.N = j.at("N").get<Index>();
        c.T = j.at("T").get<Index>();
        if (j.contains("factor_names")) c.factor_names = j.at("factor_names").get<std::vector<std::string>>();
        c.mu_gamma = json_vec(j, "mu_gamma", 3);
        c.V_gamma = json_mat(j, "V_gamma", 3, 3);
        c.mu_phi = json_num(j, "mu_phi");
        c.v_phi = json_num(j, "v_phi");
        c.sigma_eps2 = json_num(j, "sigma_eps2");
        c.eta0_F = json_vec(j, "eta0_F", 3);
        c.eta_F = json_mat(j, "eta_F", 3, 3);
        c.Sigma_res = json_mat(j, "Sigma_res", 3, 3);
        c.eta0_mom = json_num(j, "eta0_mom");
        c.eta_mom = json_vec(j, "eta_mom", 3);
        c.sigma_mom2 = json_num(j, "sigma_mom2");
        c.lambda_true = json_vec(j, "lambda_true", 4);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, std::string("calibration: ") + e.what());
    }
    c.validate();
    return c;
}

CalibrationSummary load_calibration(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open calibration '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return calibration_from_json(ss.str());
}

}  // namespace premia
