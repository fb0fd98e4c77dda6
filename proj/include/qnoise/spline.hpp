#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qnoise {

/// Natural cubic spline through (x_k, y_k) with strictly increasing x.
/// Evaluation at a knot returns the stored ordinate exactly.
class NaturalCubicSpline
{
public:
    NaturalCubicSpline() = default;
    NaturalCubicSpline(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    std::size_t size() const { return x_.size(); }
    std::span<const double> knots() const { return x_; }
    std::span<const double> values() const { return y_; }

    /// Index k of the segment [x_k, x_{k+1}] containing x (clamped to the ends).
    std::size_t segment(double x) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;  // second derivatives at the knots
};

} // namespace qnoise
