#include "qnoise/spline.hpp"

#include "qnoise/errors.hpp"

#include <algorithm>

namespace qnoise {

NaturalCubicSpline::NaturalCubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y))
{
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
        throw DomainError("NaturalCubicSpline: need at least two points and matching sizes");
    }
    for (std::size_t k = 1; k < n; ++k) {
        if (!(x_[k] > x_[k - 1])) {
            throw DomainError("NaturalCubicSpline: abscissae must be strictly increasing");
        }
    }

    // Tridiagonal system for the interior second derivatives (Thomas algorithm).
    m_.assign(n, 0.0);
    if (n == 2) {
        return;
    }
    std::vector<double> diag(n, 0.0), upper(n, 0.0), rhs(n, 0.0);
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double h0 = x_[k] - x_[k - 1];
        const double h1 = x_[k + 1] - x_[k];
        diag[k] = 2.0 * (h0 + h1);
        upper[k] = h1;
        rhs[k] = 6.0 * ((y_[k + 1] - y_[k]) / h1 - (y_[k] - y_[k - 1]) / h0);
    }
    for (std::size_t k = 2; k + 1 < n; ++k) {
        const double lower = x_[k] - x_[k - 1];
        const double f = lower / diag[k - 1];
        diag[k] -= f * upper[k - 1];
        rhs[k] -= f * rhs[k - 1];
    }
    for (std::size_t k = n - 2; k >= 1; --k) {
        m_[k] = (rhs[k] - upper[k] * m_[k + 1]) / diag[k];
    }
}

std::size_t NaturalCubicSpline::segment(double x) const
{
    if (x <= x_.front()) {
        return 0;
    }
    if (x >= x_.back()) {
        return x_.size() - 2;
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<std::size_t>(it - x_.begin()) - 1;
}

double NaturalCubicSpline::operator()(double x) const
{
    const std::size_t k = segment(x);
    const double h = x_[k + 1] - x_[k];
    const double u = x - x_[k];
    const double v = x_[k + 1] - x;
    if (u == 0.0) {
        return y_[k];
    }
    if (v == 0.0) {
        return y_[k + 1];
    }
    return (m_[k] * v * v * v + m_[k + 1] * u * u * u) / (6.0 * h) +
           (y_[k] / h - m_[k] * h / 6.0) * v + (y_[k + 1] / h - m_[k + 1] * h / 6.0) * u;
}

double NaturalCubicSpline::derivative(double x) const
{
    const std::size_t k = segment(x);
    const double h = x_[k + 1] - x_[k];
    const double u = x - x_[k];
    const double v = x_[k + 1] - x;
    return (m_[k + 1] * u * u - m_[k] * v * v) / (2.0 * h) + (y_[k + 1] - y_[k]) / h -
           (m_[k + 1] - m_[k]) * h / 6.0;
}

} // namespace qnoise
