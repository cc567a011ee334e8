#include <doctest.h>

#include <cmath>
#include <numbers>

#include "besq/quadrature.hpp"
#include "besq/specfun.hpp"
#include "oracles.hpp"

using besq::ModelParams;
using besq::Regime;

namespace {

constexpr double kSqrtPi = 1.7724538509055160;
constexpr double kGamma25 = 1.3293403881791370;   // Gamma(2.5)
constexpr double kPhi1 = 0.8413447460685429;      // Phi(1)
constexpr double kK0at1 = 0.4210244382407083;     // K0(1)
constexpr double kK0at01 = 2.4270690247020166;    // K0(0.1)

// Independent K0 oracle: y = 1 + s^2 substitution of the defining integral,
// composite Simpson on the resulting smooth Gaussian-type integrand.
double k0_oracle(double k) {
    auto integrand = [k](double s) { return 2.0 * std::exp(-k * s * s) / std::sqrt(s * s + 2.0); };
    const double cutoff = std::sqrt(745.0 / k);
    return std::exp(-k) * oracles::simpson(integrand, 0.0, cutoff, 200000);
}

}  // namespace

TEST_CASE("gamma_fn: known points") {
    CHECK(besq::gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(besq::gamma_fn(0.5) == doctest::Approx(kSqrtPi).epsilon(1e-13));

    // defining-integral oracle for Gamma(2.5)
    besq::QuadratureSpec spec;
    const double oracle =
        besq::integrate_singular_exp([](double w) { return std::pow(w, 1.5) * std::exp(-w); }, spec)
            .value;
    CHECK(oracle == doctest::Approx(kGamma25).epsilon(1e-10));
    CHECK(besq::gamma_fn(2.5) == doctest::Approx(kGamma25).epsilon(1e-13));
}

TEST_CASE("gamma_fn: domain and recurrence") {
    CHECK_THROWS_AS(besq::gamma_fn(0.0), std::domain_error);
    CHECK_THROWS_AS(besq::gamma_fn(-1.0), std::domain_error);
    for (double k = 1.01; k <= 20.0; k += 0.37) {
        const double lhs = besq::gamma_fn(k + 1.0);
        CHECK(std::fabs(lhs - k * besq::gamma_fn(k)) / lhs <= 1e-12);
    }
}

TEST_CASE("gamma_fn: Beta identity against numeric quadrature") {
    // Int_0^1 w^{a-1}(1-w)^{b-1} dw = Gamma(a)Gamma(b)/Gamma(a+b).
    // Endpoint singularities are removed in the oracle by w = v^{1/a}
    // (left half) and 1-w = v^{1/b} (right half).
    for (double a : {0.25, 0.75, 1.0, 2.5, 5.0}) {
        for (double b : {0.4, 1.0, 3.0, 5.0}) {
            auto left = [a, b](double v) {
                return std::pow(-std::expm1(std::log(v) / a), b - 1.0) / a;
            };
            auto right = [a, b](double v) {
                return std::pow(-std::expm1(std::log(v) / b), a - 1.0) / b;
            };
            const double numeric =
                besq::integrate_adaptive(left, 0.0, std::pow(0.5, a), 1e-12) +
                besq::integrate_adaptive(right, 0.0, std::pow(0.5, b), 1e-12);
            const double closed =
                besq::gamma_fn(a) * besq::gamma_fn(b) / besq::gamma_fn(a + b);
            CHECK(numeric == doctest::Approx(closed).epsilon(1e-8));
        }
    }
}

TEST_CASE("log_gamma_fn agrees with gamma_fn and scales to large arguments") {
    for (double k : {0.1, 0.5, 1.0, 3.7, 20.0, 100.0}) {
        CHECK(std::exp(besq::log_gamma_fn(k)) == doctest::Approx(besq::gamma_fn(k)).epsilon(1e-12));
    }
    // Stirling cross-check at k = 1e6
    const double k = 1e6;
    const double stirling = (k - 0.5) * std::log(k) - k + 0.5 * std::log(2.0 * std::numbers::pi) +
                            1.0 / (12.0 * k);
    CHECK(besq::log_gamma_fn(k) == doctest::Approx(stirling).epsilon(1e-12));
}

TEST_CASE("normal_cdf: values and symmetry") {
    CHECK(besq::normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(besq::normal_cdf(40.0) == doctest::Approx(1.0).epsilon(1e-15));

    // density-integration oracle for Phi(1)
    auto density = [](double y) {
        return std::exp(-0.5 * y * y) / std::sqrt(2.0 * std::numbers::pi);
    };
    const double oracle = 0.5 + oracles::simpson(density, 0.0, 1.0, 20000);
    CHECK(oracle == doctest::Approx(kPhi1).epsilon(1e-12));
    CHECK(besq::normal_cdf(1.0) == doctest::Approx(kPhi1).epsilon(1e-13));

    for (double x = -8.0; x <= 8.0; x += 0.5)
        CHECK(std::fabs(besq::normal_cdf(x) + besq::normal_cdf(-x) - 1.0) <= 1e-14);
}

TEST_CASE("bessel_k0: defining-integral values") {
    CHECK(k0_oracle(1.0) == doctest::Approx(kK0at1).epsilon(1e-9));
    CHECK(besq::bessel_k0(1.0) == doctest::Approx(kK0at1).epsilon(1e-10));

    CHECK(k0_oracle(0.1) == doctest::Approx(kK0at01).epsilon(1e-9));
    CHECK(besq::bessel_k0(0.1) == doctest::Approx(kK0at01).epsilon(1e-10));

    const double k50 = besq::bessel_k0(50.0);
    CHECK(k50 > 0.0);
    CHECK(k50 < 10.0 * std::exp(-50.0));

    CHECK_THROWS_AS(besq::bessel_k0(0.0), std::domain_error);
    CHECK_THROWS_AS(besq::bessel_k0(-2.0), std::domain_error);
}

TEST_CASE("bessel_k0: strictly decreasing") {
    double prev = besq::bessel_k0(0.05);
    for (double k = 0.1; k <= 30.0; k *= 1.5) {
        const double cur = besq::bessel_k0(k);
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("ModelParams: validation and regimes") {
    CHECK_THROWS_AS(ModelParams(1.5, 0.5), std::domain_error);
    CHECK_THROWS_AS(ModelParams(4.0, -0.1), std::domain_error);
    CHECK_THROWS_AS(ModelParams(4.0, 4.0), std::domain_error);
    CHECK_THROWS_AS(ModelParams(2.0, 2.0), std::domain_error);  // m >= 2 forces n > 2

    CHECK(ModelParams(4.0, 0.0).regime() == Regime::absorbed);
    CHECK(ModelParams(4.0, 1.0).regime() == Regime::reflected);
    CHECK(ModelParams(4.0, 2.0).regime() == Regime::interior);
    CHECK(ModelParams(3.0, 2.5).regime() == Regime::interior);
    CHECK(ModelParams(2.0, 0.5).log_branch());
    CHECK_FALSE(ModelParams(2.5, 0.5).log_branch());
    CHECK(ModelParams(5.0, 1.5).delta_y() == doctest::Approx(3.5));
}

TEST_CASE("beta_constant: closed-form evaluations") {
    CHECK(besq::beta_constant(ModelParams(3.0, 1.0)) ==
          doctest::Approx(1.0 / kSqrtPi).epsilon(1e-13));
    CHECK(besq::beta_constant(ModelParams(4.0, 1.0)) ==
          doctest::Approx(besq::gamma_fn(1.5)).epsilon(1e-13));
    // Gamma(1-m/2) explodes as m -> 2, so beta collapses
    CHECK(besq::beta_constant(ModelParams(4.0, 1.999)) < 1e-3);

    CHECK_THROWS_AS(besq::beta_constant(ModelParams(2.0, 1.0)), std::domain_error);
    CHECK_THROWS_AS(besq::beta_constant(ModelParams(4.0, 0.0)), std::domain_error);
    CHECK_THROWS_AS(besq::beta_constant(ModelParams(4.0, 2.5)), std::domain_error);
}

TEST_CASE("gamma_p: Gamma-law CDF helper") {
    for (double x : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        CHECK(besq::gamma_p(1.0, x) == doctest::Approx(-std::expm1(-x)).epsilon(1e-12));
        CHECK(besq::gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-12));
    }
    CHECK(besq::gamma_p(2.0, 0.0) == 0.0);
    CHECK_THROWS_AS(besq::gamma_p(0.0, 1.0), std::domain_error);
}
