#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace qnoise {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Physically invalid input: a non-finite field, an invalid density matrix,
/// a decay probability outside [0, 1], and similar.
class DomainError : public Error
{
public:
    using Error::Error;
};

/// A time outside the domain of a trajectory.
class RangeError : public Error
{
public:
    using Error::Error;
};

/// Malformed command-line usage or configuration.
class UsageError : public Error
{
public:
    using Error::Error;
};

/// The time grid is too coarse to resolve the coherence phase.
class ResolutionError : public Error
{
public:
    using Error::Error;
};

/// Failure while reading a tabulated trajectory.  `row` is the 1-based data
/// row (header excluded) when the failure is tied to one.
class LoadError : public Error
{
public:
    enum class Kind { io, schema, validity };

    LoadError(Kind kind, std::optional<std::size_t> row, const std::string& what)
        : Error(what), kind_(kind), row_(row)
    {
    }

    Kind kind() const noexcept { return kind_; }
    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    Kind kind_;
    std::optional<std::size_t> row_;
};

/// A synthesized field (or one of its ingredients) is not finite.
class SingularityError : public Error
{
public:
    SingularityError(double time, std::optional<std::size_t> path, const std::string& what)
        : Error(what), time_(time), path_(path)
    {
    }

    double time() const noexcept { return time_; }
    std::optional<std::size_t> path() const noexcept { return path_; }

private:
    double time_;
    std::optional<std::size_t> path_;
};

} // namespace qnoise
