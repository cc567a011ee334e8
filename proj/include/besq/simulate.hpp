#pragma once

// Exact-transition simulation of squared Bessel paths, hitting times, local
// time estimators at zero (occupation and Tanaka forms), the inverse local
// time, and evaluation of the projection along simulated paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "besq/projection.hpp"
#include "besq/rng.hpp"

namespace besq {

struct PathSample {
    std::vector<double> times;   // strictly increasing, times[0] == 0
    std::vector<double> values;  // nonnegative, same length
    // Grid index of the first exact zero; only dimension-0 paths set this,
    // and every later value is exactly zero.
    std::optional<std::size_t> absorbed_at;
};

struct LocalTimeEstimate {
    enum class Method { occupation, tanaka };
    std::vector<double> times;
    std::vector<double> lambda_values;  // nondecreasing, starts at 0
    Method method = Method::occupation;
    std::optional<double> epsilon;  // occupation estimator only
};

// One exact draw of the squared Bessel transition over dt from x with
// dimension delta: N ~ Poisson(x / 2dt), then Gamma(delta/2 + N, scale 2dt).
// The delta = 0, N = 0 atom is an exact zero (absorption).
inline double sample_besq_transition(double x, double delta, double dt, RngStream& rng) {
    if (!(x >= 0.0)) throw std::domain_error("sample_besq_transition: x must be nonnegative");
    if (!(delta >= 0.0)) throw std::domain_error("sample_besq_transition: delta must be nonnegative");
    if (!(dt > 0.0)) throw std::domain_error("sample_besq_transition: dt must be positive");
    const long long mixing = x > 0.0 ? sample_poisson(x / (2.0 * dt), rng) : 0;
    const double shape = 0.5 * delta + static_cast<double>(mixing);
    if (shape == 0.0) return 0.0;
    return 2.0 * dt * sample_gamma_unit(shape, rng);
}

inline std::vector<double> uniform_grid(double horizon, std::size_t n_steps) {
    if (!(horizon > 0.0) || n_steps == 0)
        throw std::domain_error("uniform_grid: need horizon > 0 and n_steps > 0");
    std::vector<double> grid(n_steps + 1);
    for (std::size_t i = 0; i <= n_steps; ++i)
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(n_steps);
    return grid;
}

// Grid refined geometrically near t = 0: after first_step the spacing grows
// by a constant ratio until it reaches the uniform step, then stays uniform.
// Useful when the integrands against dLambda blow up near 0 or when local
// time from an x0 = 0 start needs early resolution.
inline std::vector<double> geometric_grid(double horizon, std::size_t n_steps,
                                          double first_step) {
    if (!(horizon > 0.0) || n_steps == 0)
        throw std::domain_error("geometric_grid: need horizon > 0 and n_steps > 0");
    if (!(first_step > 0.0) || !(first_step * static_cast<double>(n_steps) < horizon))
        throw std::domain_error("geometric_grid: first_step must lie in (0, horizon/n_steps)");
    // ratio r solving first_step (r^n - 1)/(r - 1) = horizon, by bisection
    const double n = static_cast<double>(n_steps);
    auto total = [first_step, n](double r) {
        return first_step * std::expm1(n * std::log(r)) / (r - 1.0);
    };
    double lo = 1.0 + 1e-12, hi = 2.0;
    while (total(hi) < horizon) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < horizon ? lo : hi) = mid;
    }
    const double ratio = 0.5 * (lo + hi);
    std::vector<double> grid(n_steps + 1);
    grid[0] = 0.0;
    double step = first_step;
    for (std::size_t i = 1; i <= n_steps; ++i) {
        grid[i] = grid[i - 1] + step;
        step *= ratio;
    }
    grid[n_steps] = horizon;  // pin the endpoint against accumulated rounding
    return grid;
}

// Markov-chains exact transitions along the grid. Dimension-0 paths are
// absorbed at the first exact zero; later steps cost nothing.
inline PathSample simulate_path(double x0, double delta, const std::vector<double>& grid,
                                RngStream& rng) {
    if (grid.empty() || grid.front() != 0.0)
        throw std::domain_error("simulate_path: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::domain_error("simulate_path: grid must be strictly increasing");
    if (!(x0 >= 0.0)) throw std::domain_error("simulate_path: x0 must be nonnegative");

    PathSample path;
    path.times = grid;
    path.values.resize(grid.size());
    path.values[0] = x0;
    if (delta == 0.0 && x0 == 0.0) path.absorbed_at = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (path.absorbed_at) {
            path.values[i] = 0.0;
            continue;
        }
        const double dt = grid[i] - grid[i - 1];
        path.values[i] = sample_besq_transition(path.values[i - 1], delta, dt, rng);
        if (delta == 0.0 && path.values[i] == 0.0) path.absorbed_at = i;
    }
    return path;
}

// First grid time with value <= threshold (rho for threshold 0 on absorbed
// paths, rho_kappa for threshold 1/kappa).
inline std::optional<double> hitting_time_rho(const PathSample& path, double threshold) {
    for (std::size_t i = 0; i < path.values.size(); ++i)
        if (path.values[i] <= threshold) return path.times[i];
    return std::nullopt;
}

// Occupation estimator: Lambda_t ~= m eps^{-m/2} Int_0^t 1_{X < eps} du with
// the left-endpoint rule on each grid interval.
inline LocalTimeEstimate local_time_occupation(const PathSample& path, double epsilon, double m) {
    if (!(m > 0.0 && m < 2.0))
        throw std::domain_error("local_time_occupation: requires 0 < m < 2");
    if (!(epsilon > 0.0)) throw std::domain_error("local_time_occupation: epsilon must be positive");

    LocalTimeEstimate est;
    est.method = LocalTimeEstimate::Method::occupation;
    est.epsilon = epsilon;
    est.times = path.times;
    est.lambda_values.resize(path.times.size());
    const double rate = m * std::pow(epsilon, -m / 2.0);
    double acc = 0.0;
    est.lambda_values[0] = 0.0;
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        const double dt = path.times[i] - path.times[i - 1];
        if (path.values[i - 1] < epsilon) acc += rate * dt;
        est.lambda_values[i] = acc;
    }
    return est;
}

// Tanaka estimator: Lambda = X^{1-m/2}/(1-m/2) - X_0^{1-m/2}/(1-m/2)
// - sum X^{-m/2} (dX - m du) over steps with X above the hit threshold
// sqrt(dt). The raw sum is signed and noisy; the running-maximum clamp
// restores monotonicity (a documented bias, cross-checked against the
// occupation estimator).
inline LocalTimeEstimate local_time_tanaka(const PathSample& path, double m,
                                           bool enforce_monotone = true) {
    if (!(m > 0.0 && m < 2.0)) throw std::domain_error("local_time_tanaka: requires 0 < m < 2");

    LocalTimeEstimate est;
    est.method = LocalTimeEstimate::Method::tanaka;
    est.times = path.times;
    est.lambda_values.resize(path.times.size());
    const double e = 1.0 - m / 2.0;
    const double v0 = std::pow(path.values[0], e) / e;
    double stoch = 0.0;
    double run_max = 0.0;
    est.lambda_values[0] = 0.0;
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        const double dt = path.times[i] - path.times[i - 1];
        const double x_prev = path.values[i - 1];
        if (x_prev > std::sqrt(dt)) {
            const double dx = path.values[i] - x_prev;
            stoch += std::pow(x_prev, -m / 2.0) * (dx - m * dt);
        }
        const double raw = std::pow(path.values[i], e) / e - v0 - stoch;
        if (enforce_monotone) {
            run_max = std::max(run_max, raw);
            est.lambda_values[i] = run_max;
        } else {
            est.lambda_values[i] = raw;
        }
    }
    return est;
}

// A_s: first grid time with Lambda > s; nullopt if Lambda never exceeds s.
inline std::optional<double> inverse_local_time(const LocalTimeEstimate& est, double s) {
    if (!(s >= 0.0)) throw std::domain_error("inverse_local_time: s must be nonnegative");
    for (std::size_t i = 0; i < est.lambda_values.size(); ++i)
        if (est.lambda_values[i] > s) return est.times[i];
    return std::nullopt;
}

// Z along the path: s(x0) at time 0, f(t_i, X_{t_i}) at positive grid times.
// The path must have been simulated with delta = m of the context.
inline std::vector<double> z_along_path(const PathSample& path, const ProjectionContext& ctx) {
    std::vector<double> z(path.times.size());
    z[0] = path.values[0] > 0.0 ? s_fn(path.values[0], ctx.params())
                                : std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < path.times.size(); ++i)
        z[i] = f_proj(path.times[i], path.values[i], ctx);
    return z;
}

namespace detail {

inline void csv_number(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

}  // namespace detail

// Single-path CSV: t,x[,z][,lambda], header included, '\n' line endings.
inline void write_path_csv(std::ostream& os, const PathSample& path,
                           const std::vector<double>* z = nullptr,
                           const LocalTimeEstimate* lambda = nullptr) {
    os << "t,x";
    if (z) os << ",z";
    if (lambda) os << ",lambda";
    os << "\n";
    for (std::size_t i = 0; i < path.times.size(); ++i) {
        detail::csv_number(os, path.times[i]);
        os << ",";
        detail::csv_number(os, path.values[i]);
        if (z) {
            os << ",";
            detail::csv_number(os, (*z)[i]);
        }
        if (lambda) {
            os << ",";
            detail::csv_number(os, lambda->lambda_values[i]);
        }
        os << "\n";
    }
}

}  // namespace besq
