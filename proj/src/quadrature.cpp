#include "qnoise/quadrature.hpp"

#include "qnoise/errors.hpp"

#include <cmath>
#include <numbers>

namespace qnoise {

// Roots of H_n by Newton iteration on the orthonormal recurrence, largest
// first, each started from an asymptotic guess.  Long double keeps the
// smallest weights (~1e-90 for n = 64) accurate to a few ulps.
GaussHermiteRule gauss_hermite(std::size_t n)
{
    if (n < 1 || n > 256) {
        throw DomainError("gauss_hermite: node count must be in [1, 256]");
    }
    using real = long double;
    const real pim4 = 0.7511255444649424828587030047762276930510L;  // pi^(-1/4)
    const std::size_t m = (n + 1) / 2;
    std::vector<real> x(n), w(n);
    real z = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const real nn = static_cast<real>(n);
        if (i == 0) {
            z = std::sqrt(2 * nn + 1) - 1.85575L * std::pow(2 * nn + 1, -1.0L / 6);
        } else if (i == 1) {
            z -= 1.14L * std::pow(nn, 0.426L) / z;
        } else if (i == 2) {
            z = 1.86L * z - 0.86L * x[0];
        } else if (i == 3) {
            z = 1.91L * z - 0.91L * x[1];
        } else {
            z = 2 * z - x[i - 2];
        }
        real pp = 0;
        for (int iter = 0; iter < 100; ++iter) {
            real p1 = pim4;
            real p2 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                const real p3 = p2;
                p2 = p1;
                const real jj = static_cast<real>(j);
                p1 = z * std::sqrt(2 / jj) * p2 - std::sqrt((jj - 1) / jj) * p3;
            }
            pp = std::sqrt(2 * nn) * p2;
            const real step = p1 / pp;
            z -= step;
            if (std::abs(step) <= 1e-17L * std::max<real>(1, std::abs(z))) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if (n % 2 == 1) {
        x[m - 1] = 0;
    }

    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const real sqrt_pi = std::sqrt(std::numbers::pi_v<long double>);
    for (std::size_t k = 0; k < n; ++k) {
        // physicists' weight exp(-x^2) -> standard normal: z = sqrt(2) x, w / sqrt(pi)
        rule.nodes[k] = static_cast<double>(-x[k] * std::numbers::sqrt2_v<long double>);
        rule.weights[k] = static_cast<double>(w[k] / sqrt_pi);
    }
    return rule;
}

} // namespace qnoise
