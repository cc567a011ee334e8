#pragma once

// Special functions shared by the whole library: Gamma (Lanczos), the normal
// CDF, the modified Bessel function K0 (evaluated from its defining integral),
// the Gamma-ratio constant beta, and the model-parameter type that fixes the
// dimension pair (n, m) and its boundary regime.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "besq/quadrature.hpp"

namespace besq {

// Boundary behaviour of the dimension-m squared Bessel component at zero.
enum class Regime {
    absorbed,   // m == 0: stays at zero after the first hit
    reflected,  // 0 < m < 2: hits zero, instantaneously reflected
    interior,   // m >= 2: never reaches zero
};

class ModelParams {
  public:
    ModelParams(double n, double m) : n_(n), m_(m) {
        if (!(n >= 2.0)) throw std::domain_error("ModelParams: n must be >= 2");
        if (!(m >= 0.0 && m < n)) throw std::domain_error("ModelParams: m must satisfy 0 <= m < n");
    }

    double n() const { return n_; }
    double m() const { return m_; }

    Regime regime() const {
        if (m_ == 0.0) return Regime::absorbed;
        return m_ < 2.0 ? Regime::reflected : Regime::interior;
    }

    // n == 2 switches every formula to its logarithmic branch.
    bool log_branch() const { return n_ == 2.0; }

    double delta_x() const { return m_; }       // dimension of X
    double delta_y() const { return n_ - m_; }  // dimension of Y

  private:
    double n_, m_;
};

namespace detail {

inline constexpr double lanczos_g = 7.0;
inline constexpr double lanczos_coef[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

inline double lanczos_series(double z) {
    double a = lanczos_coef[0];
    for (int i = 1; i < 9; ++i) a += lanczos_coef[i] / (z - 1.0 + i);
    return a;
}

}  // namespace detail

// Gamma function on (0, inf), accurate to ~15 significant digits.
inline double gamma_fn(double k) {
    if (!(k > 0.0)) throw std::domain_error("gamma_fn: argument must be positive");
    if (k < 0.5) {
        // reflection keeps the Lanczos core on z >= 0.5
        return std::numbers::pi / (std::sin(std::numbers::pi * k) * gamma_fn(1.0 - k));
    }
    const double t = k + detail::lanczos_g - 0.5;
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, k - 0.5) * std::exp(-t) *
           detail::lanczos_series(k);
}

// log Gamma on (0, inf); stays finite where gamma_fn would overflow.
inline double log_gamma_fn(double k) {
    if (!(k > 0.0)) throw std::domain_error("log_gamma_fn: argument must be positive");
    if (k < 0.5)
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * k)) - log_gamma_fn(1.0 - k);
    const double t = k + detail::lanczos_g - 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (k - 0.5) * std::log(t) - t +
           std::log(detail::lanczos_series(k));
}

// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0); }

// e^k * K0(k): the defining integral with the y = cosh(u) substitution and the
// exponential peak divided out, so it neither under- nor overflows.
inline double bessel_k0_scaled(double k) {
    if (!(k > 0.0)) throw std::domain_error("bessel_k0: argument must be positive");
    // Beyond u_end the integrand is below e^{-745} (double underflow).
    const double u_end = std::acosh(1.0 + 745.0 / k);
    auto integrand = [k](double u) { return std::exp(-k * (std::cosh(u) - 1.0)); };
    return integrate_adaptive(integrand, 0.0, u_end, 1e-12);
}

// Modified Bessel function of the second kind of order zero.
inline double bessel_k0(double k) { return std::exp(-k) * bessel_k0_scaled(k); }

// beta = Gamma(m/2) Gamma((n-m)/2) / (Gamma(n/2-1) Gamma(1-m/2)),
// defined for n > 2, 0 < m < 2.
inline double beta_constant(const ModelParams& params) {
    const double n = params.n(), m = params.m();
    if (!(n > 2.0) || !(m > 0.0 && m < 2.0))
        throw std::domain_error("beta_constant: requires n > 2 and 0 < m < 2");
    return gamma_fn(m / 2.0) * gamma_fn((n - m) / 2.0) /
           (gamma_fn(n / 2.0 - 1.0) * gamma_fn(1.0 - m / 2.0));
}

// Regularized lower incomplete gamma P(a, x) = Gamma(a,x)/Gamma(a); the CDF of
// a unit-scale Gamma(a) law. Series for x < a+1, Lentz continued fraction
// otherwise. Used by the verification harness as a distributional oracle.
inline double gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("gamma_p: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    const double log_prefactor = a * std::log(x) - x - log_gamma_fn(a);
    if (x < a + 1.0) {
        double term = 1.0 / a, sum = term;
        for (int i = 1; i < 500; ++i) {
            term *= x / (a + i);
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
        }
        return sum * std::exp(log_prefactor);
    }
    // modified Lentz for the upper-tail continued fraction
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    const double q = std::exp(log_prefactor) * h;
    return 1.0 - q;
}

}  // namespace besq
