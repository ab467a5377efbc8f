#include "premia/dgp.hpp"

#include "premia/errors.hpp"
#include "premia/numkernel.hpp"

#include <cmath>
#include <string>

namespace premia {

namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

MatrixXd standard_normal(std::mt19937_64& eng, Index rows, Index cols) {
    std::normal_distribution<double> nd(0.0, 1.0);
    MatrixXd m(rows, cols);
    // Row-major fill so the draw order does not depend on Eigen's storage.
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) m(r, c) = nd(eng);
    }
    return m;
}

// Symmetric square root of a PSD matrix; negative round-off eigenvalues clamp to zero.
MatrixXd psd_sqrt(const MatrixXd& S) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
    const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

const char* to_string(XiDraw x) noexcept { return x == XiDraw::variance ? "variance" : "std_dev"; }

XiDraw parse_xi_draw(const std::string& name) {
    if (name == "variance") return XiDraw::variance;
    if (name == "std_dev" || name == "sd") return XiDraw::std_dev;
    throw Error(ErrorKind::config, "unknown xi_draw '" + name + "' (expected variance or std_dev)");
}

void DgpParams::validate() const {
    calibration.validate();
    if (!(theta_phi >= 0.0)) throw Error(ErrorKind::parameter, "theta_phi must be non-negative");
    if (!(sigma_xi2 > 0.0)) throw Error(ErrorKind::parameter, "sigma_xi2 must be positive");
    if (!(varphi > 0.0 && varphi < 1.0)) throw Error(ErrorKind::parameter, "varphi must lie in (0, 1)");
    if (!std::isfinite(alpha)) throw Error(ErrorKind::parameter, "alpha must be finite");
    if (n_assets() < 1 || n_periods() < 8) throw Error(ErrorKind::parameter, "need N >= 1 and T >= 8");
}

DrawIndex DrawIndex::next(DrawScope scope) const {
    DrawIndex out = *this;
    if (scope != DrawScope::new_cross_section) ++out.ts;
    if (scope != DrawScope::new_time_series) ++out.cs;
    return out;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
    const std::uint64_t h = fnv1a(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

MatrixXd implied_factor_variance(const CalibrationSummary& c, Index periods) {
    const double T = static_cast<double>(periods > 0 ? periods : c.T);
    MatrixXd V(4, 4);
    V.topLeftCorner(3, 3) = c.eta_F * c.eta_F.transpose() / T + c.Sigma_res;
    const VectorXd cross = c.eta_F * c.eta_mom / T;
    V.block(0, 3, 3, 1) = cross;
    V.block(3, 0, 1, 3) = cross.transpose();
    V(3, 3) = c.eta_mom.squaredNorm() / T + c.sigma_mom2;
    return V;
}

SimulatedSample simulate(const DgpParams& params, const DrawIndex& index) {
    params.validate();
    const CalibrationSummary& c = params.calibration;
    const Index N = params.n_assets();
    const Index T = params.n_periods();
    const double t = static_cast<double>(T);
    const double sT = std::sqrt(t);

    auto ts_stream = [&](std::string_view name) { return make_stream(params.seed, name, index.ts); };
    auto cs_stream = [&](std::string_view name) { return make_stream(params.seed, name, index.cs); };

    // Time-series objects.
    auto eG = ts_stream("G");
    const MatrixXd G = standard_normal(eG, T, 3) / sT;
    auto ew = ts_stream("w");
    const MatrixXd w = standard_normal(ew, T, 3) * psd_sqrt(c.Sigma_res);
    auto eg = ts_stream("g");
    const VectorXd g = standard_normal(eg, T, 1).col(0) / sT;
    auto eu = ts_stream("u");
    const VectorXd u = standard_normal(eu, T, 1).col(0) * std::sqrt((1.0 - params.varphi) * c.sigma_mom2);
    auto ev = ts_stream("v");
    const VectorXd v = standard_normal(ev, T, 1).col(0) * std::sqrt(params.varphi * c.sigma_mom2);

    MatrixXd F(T, 4);
    F.leftCols(3) = (G * c.eta_F.transpose() + w).rowwise() + c.eta0_F.transpose();
    F.col(3) = (G * c.eta_mom).array() + c.eta0_mom + u.array() + v.array();

    // Cross-section objects.
    auto egam = cs_stream("gamma");
    const MatrixXd gamma = (standard_normal(egam, N, 3) * psd_sqrt(c.V_gamma)).rowwise() + c.mu_gamma.transpose();
    auto ephi = cs_stream("phi");
    const VectorXd phi =
        params.theta_phi * (standard_normal(ephi, N, 1).col(0).array() * std::sqrt(c.v_phi) + c.mu_phi).matrix();
    auto exi = cs_stream("xi");
    const double xi_sd = params.xi_draw == XiDraw::variance ? std::sqrt(params.sigma_xi2) : params.sigma_xi2;
    const VectorXd xi = standard_normal(exi, N, 1).col(0) * xi_sd;
    const double su = std::sqrt((1.0 - params.varphi) * c.sigma_mom2);
    const VectorXd delta = (params.alpha * phi / sT + xi) / su;
    auto eeps = cs_stream("eps");
    const MatrixXd eps = standard_normal(eeps, N, T) * std::sqrt(c.sigma_eps2);

    const MatrixXd rstar = gamma * G.transpose() + phi * g.transpose() + delta * u.transpose() + eps;

    const MatrixXd V = implied_factor_variance(c, T);
    if (min_eigenvalue(V) <= 0.0) throw Error(ErrorKind::parameter, "implied factor variance is not positive definite");
    MatrixXd cov(4, N);
    cov.topRows(3) = c.eta_F * gamma.transpose() / t;
    cov.row(3) = (gamma * c.eta_mom / t + (1.0 - params.varphi) * c.sigma_mom2 * delta).transpose();
    const MatrixXd betas = V.ldlt().solve(cov).transpose();  // N x 4

    SimulatedSample out;
    DgpTruth& truth = out.truth;
    truth.lambda = c.lambda_true;
    truth.betas = betas;
    truth.phi = phi;
    truth.g = g;
    truth.delta = delta;
    truth.factor_mean.resize(4);
    truth.factor_mean.head(3) = c.eta0_F;
    truth.factor_mean(3) = c.eta0_mom;
    truth.factor_variance = V;
    truth.rstar = rstar;

    const VectorXd priced = betas * truth.lambda;
    out.returns.values = rstar.colwise() + priced;
    const MatrixXd Fdev = F.rowwise() - truth.factor_mean.transpose();
    truth.idiosyncratic = out.returns.values.colwise() - priced;
    truth.idiosyncratic -= betas * Fdev.transpose() + phi * g.transpose();
    truth.lambda_tilde = truth.lambda + F.colwise().mean().transpose() - truth.factor_mean;

    out.returns.assets.reserve(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) out.returns.assets.push_back("p" + std::to_string(i + 1));
    // Synthetic monthly labels starting January 1960.
    std::vector<Period> periods(static_cast<std::size_t>(T));
    for (Index s = 0; s < T; ++s) {
        periods[static_cast<std::size_t>(s)] = static_cast<Period>((1960 + s / 12) * 100 + s % 12 + 1);
    }
    out.returns.periods = periods;
    out.factors.periods = periods;
    out.factors.names = c.factor_names;
    out.factors.values = F;
    return out;
}

}  // namespace premia
