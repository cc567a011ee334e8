#pragma once

// Brute-force integration oracles for the test suites. Deliberately naive
// (composite trapezoid / Simpson on fixed grids) and independent of the
// adaptive machinery they are used to check.

#include <cmath>
#include <cstddef>

namespace oracles {

template <class F>
double trapezoid(const F& f, double a, double b, std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double sum = 0.5 * (f(a) + f(b));
    for (std::size_t i = 1; i < n; ++i) sum += f(a + h * static_cast<double>(i));
    return sum * h;
}

template <class F>
double simpson(const F& f, double a, double b, std::size_t n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double sum = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i)
        sum += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return sum * h / 3.0;
}

// Central finite difference with scale-aware step.
template <class F>
double central_diff(const F& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracles
