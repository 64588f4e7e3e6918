#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace csmooth {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Inverse normal CDF requested at p = 0 or p = 1.
class UnboundedQuantileError : public DomainError {
public:
    using DomainError::DomainError;
};

class DimensionMismatch : public DomainError {
public:
    using DomainError::DomainError;
};

/// Angular distance against a zero vector.
class DegenerateDirection : public DomainError {
public:
    using DomainError::DomainError;
};

/// Operands belong to different OutputPoint variants.
class VariantMismatch : public DomainError {
public:
    using DomainError::DomainError;
};

/// The quantile level q reached 1: no finite output radius can be certified.
class CertificationInfeasible : public Error {
public:
    CertificationInfeasible(double p, std::uint64_t m, double alpha2, double q);

    double p() const noexcept { return p_; }
    std::uint64_t m() const noexcept { return m_; }
    double alpha2() const noexcept { return alpha2_; }
    double q() const noexcept { return q_; }

private:
    double p_;
    std::uint64_t m_;
    double alpha2_;
    double q_;
};

/// Base-function evaluation failed. `index` is the position in the batch, or
/// the bridge request id when raised by a bridged function.
class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::int64_t index)
        : Error(what), index_(index) {}

    std::int64_t index() const noexcept { return index_; }

private:
    std::int64_t index_;
};

/// An operation that needs a smoothed output was handed an abstained result.
class AbstainedError : public Error {
public:
    using Error::Error;
};

}  // namespace csmooth
