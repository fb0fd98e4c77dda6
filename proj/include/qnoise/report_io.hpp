#pragma once

// CSV writers for estimates, field traces and path states.  Numbers use the
// shortest representation that reads back to the same double.

#include "qnoise/ensemble.hpp"
#include "qnoise/integrator.hpp"
#include "qnoise/qubit.hpp"

#include <iosfwd>
#include <span>
#include <string>

namespace qnoise {

std::string format_double(double x);

/// `t,rho00_ref,...,entropy_est`.  Entropies of matrices that fail
/// validation at 1e-8 are written as nan.
void write_result_csv(std::ostream& os, const EnsembleEstimate& estimate, std::span<const DensityMatrix> reference);

/// `path_id,z,t,Bx,By,Bz`
void write_field_trace_csv(std::ostream& os, std::span<const PathTrace> traces);

/// `path_id,t,re_a,im_a,re_b,im_b`
void write_state_csv(std::ostream& os, std::span<const PathTrace> traces);

} // namespace qnoise
