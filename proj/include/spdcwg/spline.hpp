#pragma once

#include <cstddef>
#include <vector>

namespace spdcwg {

// Natural cubic spline through strictly increasing abscissae.  Evaluation is
// restricted to [x_front, x_back] (with a small absolute slack for roundoff);
// callers own their range policies.
class CubicSpline {
  public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }
    bool empty() const { return x_.empty(); }
    std::size_t size() const { return x_.size(); }

  private:
    std::size_t segment(double x) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> d2_;  // second derivatives at the knots
};

}  // namespace spdcwg
