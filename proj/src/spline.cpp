#include "spdcwg/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spdcwg {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n)
        throw std::invalid_argument("CubicSpline: need >= 2 matching knots");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1]))
            throw std::invalid_argument("CubicSpline: abscissae must increase strictly");

    // Tridiagonal system for the interior second derivatives (Thomas
    // algorithm); natural boundary conditions d2[0] = d2[n-1] = 0.
    d2_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> diag(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = x_[i] - x_[i - 1];
        const double hr = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (hl + hr);
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double hl = x_[i] - x_[i - 1];
        const double w = hl / diag[i - 1];
        diag[i] -= w * hl;
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        const double hr = x_[i + 1] - x_[i];
        const double upper = (i + 2 < n) ? hr * d2_[i + 1] : 0.0;
        d2_[i] = (rhs[i] - upper) / diag[i];
        if (i == 1) break;
    }
}

std::size_t CubicSpline::segment(double x) const {
    const double slack = 1e-9 * std::max(1.0, std::abs(x_.back()) + std::abs(x_.front()));
    if (x < x_.front() - slack || x > x_.back() + slack)
        throw std::out_of_range("CubicSpline: evaluation outside knot range");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return 0;
    if (i >= x_.size()) return x_.size() - 2;
    return i - 1;
}

double CubicSpline::operator()(double x) const {
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * d2_[i] + (b * b * b - b) * d2_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
    const std::size_t i = segment(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           ((3.0 * b * b - 1.0) * d2_[i + 1] - (3.0 * a * a - 1.0) * d2_[i]) * h / 6.0;
}

}  // namespace spdcwg
