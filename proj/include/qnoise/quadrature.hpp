#pragma once

#include <cstddef>
#include <vector>

namespace qnoise {

/// Gauss-Hermite rule rescaled to the standard normal measure:
/// E[f(Z)] ~ sum_k weights[k] f(nodes[k]).  Nodes ascending, weights sum to 1.
struct GaussHermiteRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n >= 1 (n <= 256).  Throws DomainError otherwise.
GaussHermiteRule gauss_hermite(std::size_t n);

} // namespace qnoise
