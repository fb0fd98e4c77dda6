#include "qnoise/channels.hpp"
#include "qnoise/errors.hpp"
#include "qnoise/report_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace qnoise {

namespace {

constexpr const char* kHeader = "t,rho00,rho11,re_rho10,im_rho10";

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

void write_trajectory_csv(std::ostream& os, const ReferenceTrajectory& traj, std::span<const double> grid)
{
    os << kHeader << '\n';
    for (double t : grid) {
        const DensityMatrix rho = traj.evaluate(t);
        os << format_double(t) << ',' << format_double(rho.rho00) << ',' << format_double(rho.rho11) << ','
           << format_double(rho.rho10.real()) << ',' << format_double(rho.rho10.imag()) << '\n';
    }
}

void write_trajectory_csv(const std::filesystem::path& path, const ReferenceTrajectory& traj,
                          std::span<const double> grid)
{
    std::ofstream os(path);
    if (!os) {
        throw LoadError(LoadError::Kind::io, std::nullopt, "cannot open " + path.string() + " for writing");
    }
    write_trajectory_csv(os, traj, grid);
}

ReferenceTrajectory load_tabulated(std::istream& is, double tol)
{
    using K = LoadError::Kind;
    std::string line;
    if (!std::getline(is, line)) {
        throw LoadError(K::schema, std::nullopt, "trajectory file is empty");
    }
    if (trim(line) != kHeader) {
        throw LoadError(K::schema, std::nullopt,
                        "unexpected header '" + trim(line) + "', expected '" + kHeader + "'");
    }

    std::vector<double> times;
    std::vector<DensityMatrix> samples;
    std::size_t row = 0;
    while (std::getline(is, line)) {
        const std::string text = trim(line);
        if (text.empty()) {
            continue;
        }
        ++row;
        double v[5];
        std::size_t field = 0;
        std::size_t pos = 0;
        while (true) {
            const std::size_t comma = text.find(',', pos);
            const std::string cell = trim(std::string_view(text).substr(pos, comma - pos));
            if (field >= 5) {
                throw LoadError(K::schema, row, "row " + std::to_string(row) + ": too many columns");
            }
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+') {
                ++first;
            }
            auto [ptr, ec] = std::from_chars(first, last, v[field]);
            if (ec != std::errc() || ptr != last || cell.empty()) {
                throw LoadError(K::schema, row,
                                "row " + std::to_string(row) + ", column " + std::to_string(field + 1) +
                                    ": cannot parse '" + cell + "' as a number");
            }
            ++field;
            if (comma == std::string::npos) {
                break;
            }
            pos = comma + 1;
        }
        if (field != 5) {
            throw LoadError(K::schema, row,
                            "row " + std::to_string(row) + ": expected 5 columns, got " + std::to_string(field));
        }
        times.push_back(v[0]);
        samples.push_back({v[1], v[2], Complex(v[3], v[4])});
    }
    if (is.bad()) {
        throw LoadError(K::io, std::nullopt, "read error");
    }
    return ReferenceTrajectory::tabulated(std::move(times), std::move(samples), tol);
}

ReferenceTrajectory load_tabulated(const std::filesystem::path& path, double tol)
{
    std::ifstream is(path);
    if (!is) {
        throw LoadError(LoadError::Kind::io, std::nullopt, "cannot open trajectory file " + path.string());
    }
    return load_tabulated(is, tol);
}

} // namespace qnoise
