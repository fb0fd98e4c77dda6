#include "qnoise/report_io.hpp"

#include "qnoise/errors.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

namespace qnoise {

std::string format_double(double x)
{
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

namespace {

double safe_entropy(const DensityMatrix& rho)
{
    try {
        return von_neumann_entropy(rho, 1e-8);
    } catch (const DomainError&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

void write_result_csv(std::ostream& os, const EnsembleEstimate& est, std::span<const DensityMatrix> ref)
{
    if (ref.size() != est.rho.size()) {
        throw UsageError("write_result_csv: reference and estimate sizes differ");
    }
    os << "t,rho00_ref,rho11_ref,re10_ref,im10_ref,rho00_est,rho11_est,re10_est,im10_est,"
          "se00,se_re10,se_im10,entropy_ref,entropy_est\n";
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const DensityMatrix& r = ref[i];
        const DensityMatrix& e = est.rho[i];
        const ComponentError& se = est.se[i];
        os << format_double(est.times[i]) << ',' << format_double(r.rho00) << ',' << format_double(r.rho11) << ','
           << format_double(r.rho10.real()) << ',' << format_double(r.rho10.imag()) << ','
           << format_double(e.rho00) << ',' << format_double(e.rho11) << ',' << format_double(e.rho10.real())
           << ',' << format_double(e.rho10.imag()) << ',' << format_double(se.rho00) << ','
           << format_double(se.re10) << ',' << format_double(se.im10) << ',' << format_double(safe_entropy(r))
           << ',' << format_double(safe_entropy(e)) << '\n';
    }
}

void write_field_trace_csv(std::ostream& os, std::span<const PathTrace> traces)
{
    os << "path_id,z,t,Bx,By,Bz\n";
    for (const PathTrace& tr : traces) {
        const std::string head = std::to_string(tr.draw.id) + ',' + format_double(tr.draw.z) + ',';
        for (const FieldSample& f : tr.fields) {
            os << head << format_double(f.t) << ',' << format_double(f.bx) << ',' << format_double(f.by) << ','
               << format_double(f.bz) << '\n';
        }
    }
}

void write_state_csv(std::ostream& os, std::span<const PathTrace> traces)
{
    os << "path_id,t,re_a,im_a,re_b,im_b\n";
    for (const PathTrace& tr : traces) {
        for (std::size_t i = 0; i < tr.states.size(); ++i) {
            const PureState& s = tr.states[i];
            os << tr.draw.id << ',' << format_double(tr.times[i]) << ',' << format_double(s.a.real()) << ','
               << format_double(s.a.imag()) << ',' << format_double(s.b.real()) << ','
               << format_double(s.b.imag()) << '\n';
        }
    }
}

} // namespace qnoise
