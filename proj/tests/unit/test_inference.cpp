#include <doctest.h>

#include "premia/errors.hpp"
#include "premia/inference.hpp"
#include "premia/numkernel.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace premia;

namespace {

MatrixXd sample_cov(const MatrixXd& x) {
    const MatrixXd c = x.rowwise() - x.colwise().mean();
    return c.transpose() * c / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("zero lags gives the sample covariance") {
    std::mt19937_64 rng(1);
    const MatrixXd x = oracle::random_matrix(rng, 50, 3);
    const auto lrv = newey_west(x, 0);
    CHECK(lrv.lags == 0);
    CHECK((lrv.omega - sample_cov(x)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("newey-west matches the looped oracle and is PSD") {
    std::mt19937_64 rng(2);
    for (Index lags : {1, 4, 12}) {
        const MatrixXd x = oracle::random_matrix(rng, 80, 3);
        const auto lrv = newey_west(x, lags);
        CHECK((lrv.omega - oracle::newey_west(x, lags)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(min_eigenvalue(lrv.omega) >= -1e-12);
        CHECK((lrv.omega - lrv.omega.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("newey-west is invariant to a constant shift") {
    std::mt19937_64 rng(3);
    const MatrixXd x = oracle::random_matrix(rng, 40, 2);
    MatrixXd y = x;
    y.col(0).array() += 5.0;
    y.col(1).array() -= 2.0;
    CHECK((newey_west(x, 3).omega - newey_west(y, 3).omega).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("newey-west on AR(1) approaches the long-run variance") {
    const double rho = 0.5;
    const Index T = 20000;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    MatrixXd x(T, 1);
    x(0, 0) = nd(rng) / std::sqrt(1.0 - rho * rho);
    for (Index t = 1; t < T; ++t) x(t, 0) = rho * x(t - 1, 0) + nd(rng);
    const double target = 1.0 / ((1.0 - rho) * (1.0 - rho));
    const double nw = newey_west(x, 40).omega(0, 0);
    CHECK(std::abs(nw - target) / target < 0.1);
    // Ignoring autocorrelation understates it.
    CHECK(newey_west(x, 0).omega(0, 0) < 0.5 * target);
}

TEST_CASE("newey-west on i.i.d. data is close to the identity") {
    std::mt19937_64 rng(5);
    const MatrixXd x = oracle::random_matrix(rng, 5000, 2);
    const MatrixXd omega = newey_west(x, 4).omega;
    CHECK((omega - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("bandwidth validation") {
    std::mt19937_64 rng(6);
    const MatrixXd x = oracle::random_matrix(rng, 10, 2);
    for (Index bad : {-1, 10, 11}) {
        try {
            newey_west(x, bad);
            FAIL("expected bandwidth error");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::bandwidth);
        }
    }
    CHECK_NOTHROW(newey_west(x, 9));
}

TEST_CASE("distribution helpers") {
    CHECK(normal_two_sided_p(0.0) == doctest::Approx(1.0));
    CHECK(normal_two_sided_p(1.959963984540054) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(normal_two_sided_p(-1.959963984540054) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi2_upper_p(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi2_upper_p(5.991464547107979, 2) == doctest::Approx(0.05).epsilon(1e-10));
    CHECK(chi2_upper_p(0.0, 3) == doctest::Approx(1.0));
    double prev = 1.0;
    for (double s = 0.5; s < 30.0; s += 0.5) {
        const double p = chi2_upper_p(s, 3);
        CHECK(p < prev);
        prev = p;
    }
}

TEST_CASE("t-test statistic and one-dimensional Wald identity") {
    EstimateResult r;
    r.lambda = (VectorXd(2) << 1.0, 0.3).finished();
    r.covariance = (MatrixXd(2, 2) << 0.25, 0.01, 0.01, 0.04).finished();
    r.std_errors = r.covariance.diagonal().cwiseSqrt();
    const auto t = t_test(r, 0, 0.5);
    CHECK(t.statistic == doctest::Approx(1.0));
    CHECK(t.p_value == doctest::Approx(normal_two_sided_p(1.0)));
    CHECK_FALSE(t.decision_at_5pct);
    const auto w = wald_test(r.lambda, r.covariance, {0}, (VectorXd(1) << 0.5).finished());
    CHECK(w.dof == 1);
    CHECK(w.statistic == doctest::Approx(t.statistic * t.statistic));
    CHECK(w.p_value == doctest::Approx(t.p_value).epsilon(1e-10));

    const auto strong = t_test(r, 1, -0.3);
    CHECK(strong.statistic == doctest::Approx(3.0));
    CHECK(strong.decision_at_5pct);

    EstimateResult degenerate = r;
    degenerate.std_errors(1) = 0.0;
    try {
        t_test(degenerate, 1, 0.0);
        FAIL("expected degenerate variance");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_variance);
    }
}

TEST_CASE("two-dimensional Wald by hand") {
    const VectorXd l = (VectorXd(2) << 1.0, 2.0).finished();
    const MatrixXd V = (MatrixXd(2, 2) << 2.0, 1.0, 1.0, 2.0).finished();
    // V^{-1} = [[2,-1],[-1,2]]/3; d = (1,2): d'V^{-1}d = (2 - 4 + 8)/3 = 2.
    const auto w = wald_test(l, V, {}, VectorXd::Zero(2));
    CHECK(w.dof == 2);
    CHECK(w.statistic == doctest::Approx(2.0));
    CHECK(w.p_value == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("Wald is invariant to reparameterisation") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const MatrixXd V = oracle::random_psd(rng, 3, 3) + 0.1 * MatrixXd::Identity(3, 3);
        const VectorXd d = oracle::random_matrix(rng, 3, 1).col(0);
        MatrixXd C = oracle::random_matrix(rng, 3, 3);
        C += 3.0 * MatrixXd::Identity(3, 3);
        const auto a = wald_test(d, V, {}, VectorXd::Zero(3));
        const auto b = wald_test(C * d, C * V * C.transpose(), {}, VectorXd::Zero(3));
        CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-8));
    }
}

TEST_CASE("Wald with a rank-deficient covariance uses the pseudo-inverse") {
    const VectorXd l = (VectorXd(2) << 1.0, 1.0).finished();
    const MatrixXd V = (MatrixXd(2, 2) << 1.0, 1.0, 1.0, 1.0).finished();
    const auto w = wald_test(l, V, {}, VectorXd::Zero(2));
    CHECK(w.dof == 1);
    CHECK(w.statistic == doctest::Approx(1.0));
}

TEST_CASE("specification test on tradable factors") {
    EstimateResult r;
    r.lambda = (VectorXd(2) << 0.5, 0.2).finished();
    r.factor_mean_covariance = 0.01 * MatrixXd::Identity(2, 2);
    r.covariance = r.factor_mean_covariance + 0.04 * MatrixXd::Identity(2, 2);
    r.std_errors = r.covariance.diagonal().cwiseSqrt();
    const auto same = specification_test(r, r.lambda);
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK(same.p_value == doctest::Approx(1.0));
    CHECK_FALSE(same.weight_not_psd);

    const auto off = specification_test(r, (VectorXd(2) << 0.3, 0.2).finished());
    CHECK(off.statistic == doctest::Approx(0.04 / 0.04));
    CHECK(off.dof == 2);

    EstimateResult bad = r;
    bad.covariance = r.factor_mean_covariance - 0.001 * MatrixXd::Identity(2, 2);
    bad.covariance(0, 0) += 0.01;
    const auto flagged = specification_test(bad, (VectorXd(2) << 0.3, 0.2).finished());
    CHECK(flagged.weight_not_psd);
}

TEST_CASE("four-split tests use the four-split covariance pieces") {
    FourSplitResult f;
    f.lambda = (VectorXd(1) << 0.8).finished();
    f.sigma_iv = (MatrixXd(1, 1) << 0.09).finished();
    f.factor_mean_covariance = (MatrixXd(1, 1) << 0.07).finished();
    f.covariance = f.sigma_iv + f.factor_mean_covariance;
    const auto t = t_test(f, 0, 0.4);
    CHECK(t.statistic == doctest::Approx(0.4 / 0.4));
    const auto s = specification_test(f, (VectorXd(1) << 0.5).finished());
    CHECK(s.statistic == doctest::Approx(0.09 / 0.09));
}
