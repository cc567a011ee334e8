#pragma once

// Adaptive Gauss-Kronrod quadrature, plus a weighted integrator for
// exponentially-decaying integrands with an integrable power singularity
// at the origin (optionally carrying a log factor).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace besq {

// Thrown when an integral fails to converge within the panel budget.
// Carries the best estimate obtained so far.
class numeric_error : public std::runtime_error {
  public:
    numeric_error(const std::string& msg, double last)
        : std::runtime_error(msg), last_estimate(last) {}
    double last_estimate;
};

struct QuadratureSpec {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    // alpha in [0,1): the integrand behaves like w^{-alpha} * bounded near 0.
    double singularity_exponent = 0.0;
    // W_max: the tail beyond it must be below abs_tol.
    double truncation_bound = 80.0;
};

struct IntegralResult {
    double value = 0.0;
    double err_estimate = 0.0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair: {node, gauss weight, kronrod weight}.
inline constexpr double gk15_nw[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

struct Panel {
    double a, b;
    double value;   // K15 estimate
    double err;     // error estimate
    double l1;      // K15 estimate of the |integrand| mass
};

// One G7/K15 pass over [a, b]. Nodes are strictly interior, so endpoint
// singularities are never evaluated.
template <class F>
Panel gk15(const F& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);

    const double f0 = f(mid);
    double g7 = gk15_nw[0][1] * f0;
    double k15 = gk15_nw[0][2] * f0;
    double l1 = gk15_nw[0][2] * std::fabs(f0);
    for (int i = 1; i < 8; ++i) {
        const double dx = hl * gk15_nw[i][0];
        const double fp = f(mid + dx);
        const double fm = f(mid - dx);
        g7 += gk15_nw[i][1] * (fp + fm);
        k15 += gk15_nw[i][2] * (fp + fm);
        l1 += gk15_nw[i][2] * (std::fabs(fp) + std::fabs(fm));
    }
    g7 *= hl;
    k15 *= hl;
    l1 *= hl;

    const double delta = std::fabs(k15 - g7);
    double err = delta;
    if (l1 > 0.0 && delta > 0.0) {
        const double scaled = l1 * std::min(1.0, std::pow(200.0 * delta / l1, 1.5));
        err = std::max(delta, scaled);
    }
    return Panel{a, b, k15, err, l1};
}

// Worst-panel-first refinement over a set of seed intervals sharing one
// integrand. Stops when the summed error estimate is below
// max(abs_tol, rel_tol * L1); for one-signed integrands L1 equals |value|,
// and under cancellation it is the only scale the error can be driven to.
template <class F>
IntegralResult adapt(const F& f, const std::vector<std::pair<double, double>>& seeds,
                     double rel_tol, double abs_tol, std::size_t max_panels) {
    rel_tol = std::max(rel_tol, 5e-16);
    std::vector<Panel> panels;
    panels.reserve(64);
    for (const auto& [a, b] : seeds)
        if (b > a) panels.push_back(gk15(f, a, b));

    auto totals = [&panels] {
        double v = 0.0, e = 0.0, l = 0.0;
        for (const Panel& p : panels) { v += p.value; e += p.err; l += p.l1; }
        return std::array<double, 3>{v, e, l};
    };

    for (;;) {
        auto [value, err, l1] = totals();
        if (err <= std::max(abs_tol, rel_tol * l1)) return {value, err};
        if (panels.size() >= max_panels)
            throw numeric_error("quadrature: panel budget exhausted", value);

        std::size_t worst = 0;
        for (std::size_t i = 1; i < panels.size(); ++i)
            if (panels[i].err > panels[worst].err) worst = i;
        const Panel bad = panels[worst];
        const double mid = 0.5 * (bad.a + bad.b);
        if (!(mid > bad.a && mid < bad.b))
            throw numeric_error("quadrature: interval too small to split", bad.value);
        panels[worst] = gk15(f, bad.a, mid);
        panels.push_back(gk15(f, mid, bad.b));
    }
}

}  // namespace detail

// Adaptive integration of a continuous integrand over [a, b].
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-10,
                          double abs_tol = 0.0) {
    if (a == b) return 0.0;
    const double sign = (b > a) ? 1.0 : -1.0;
    if (b < a) std::swap(a, b);
    auto r = detail::adapt(f, {{a, b}}, rel_tol, abs_tol, 2048);
    return sign * r.value;
}

// Integrates f over (0, inf) where f(w) * w^alpha is bounded near 0 and
// f decays like e^{-w} times a polynomial. The (0,1) piece is regularized
// by the substitution w = v^{1/(1-alpha)}; (1, W_max) is handled directly,
// and the tail beyond W_max is dropped (choose W_max so it is below abs_tol).
template <class F>
IntegralResult integrate_singular_exp(const F& f, const QuadratureSpec& spec) {
    const double alpha = spec.singularity_exponent;
    if (!(alpha >= 0.0 && alpha < 1.0))
        throw std::domain_error("integrate_singular_exp: singularity exponent must be in [0,1)");
    const double wmax = spec.truncation_bound;
    if (!(wmax > 1.0))
        throw std::domain_error("integrate_singular_exp: truncation bound must exceed 1");

    const double p = 1.0 / (1.0 - alpha);
    auto g = [&f, p, alpha](double u) {
        if (u >= 1.0) return f(u);
        if (alpha == 0.0) return f(u);
        const double w = std::pow(u, p);
        return f(w) * p * std::pow(u, p - 1.0);
    };
    // Two seed intervals so no panel straddles the u = 1 transform switch.
    return detail::adapt(g, {{0.0, 1.0}, {1.0, wmax}}, spec.rel_tol, spec.abs_tol, 4096);
}

}  // namespace besq
