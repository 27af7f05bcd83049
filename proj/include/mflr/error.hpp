#pragma once

#include <stdexcept>
#include <string>

namespace mflr {

// Error taxonomy. Numeric failures derive from NumericError, bad inputs from
// InvalidInput, file problems from IoError; the CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

struct DimensionMismatch : InvalidInput {
    explicit DimensionMismatch(const std::string& what)
        : InvalidInput("dimension mismatch: " + what) {}
};

struct NotPositiveDefinite : NumericError {
    explicit NotPositiveDefinite(const std::string& what)
        : NumericError("matrix not positive definite: " + what) {}
};

struct InsufficientSamples : InvalidInput {
    explicit InsufficientSamples(const std::string& what)
        : InvalidInput("insufficient samples: " + what) {}
};

struct EmptyInput : InvalidInput {
    explicit EmptyInput(const std::string& what)
        : InvalidInput("empty input: " + what) {}
};

struct UnsupportedDistribution : InvalidInput {
    explicit UnsupportedDistribution(const std::string& what)
        : InvalidInput("unsupported distribution: " + what) {}
};

struct SolverDivergence : NumericError {
    explicit SolverDivergence(const std::string& what)
        : NumericError("solver divergence: " + what) {}
};

struct DegenerateStats : NumericError {
    explicit DegenerateStats(const std::string& what)
        : NumericError("degenerate statistics: " + what) {}
};

struct MissingMatrixStats : InvalidInput {
    explicit MissingMatrixStats(const std::string& what)
        : InvalidInput("missing matrix statistics: " + what) {}
};

struct MissingFidelity : InvalidInput {
    explicit MissingFidelity(const std::string& what)
        : InvalidInput("missing fidelity: " + what) {}
};

struct BudgetTooSmall : InvalidInput {
    explicit BudgetTooSmall(const std::string& what)
        : InvalidInput("budget too small: " + what) {}
};

struct InvalidCorrelationOrdering : InvalidInput {
    explicit InvalidCorrelationOrdering(const std::string& what)
        : InvalidInput("invalid correlation ordering: " + what) {}
};

struct NonMonotoneAllocation : InvalidInput {
    explicit NonMonotoneAllocation(const std::string& what)
        : InvalidInput("non-monotone allocation: " + what) {}
};

struct ZeroHighFidelity : InvalidInput {
    explicit ZeroHighFidelity(const std::string& what)
        : InvalidInput("zero high-fidelity samples: " + what) {}
};

struct NonNestedData : InvalidInput {
    explicit NonNestedData(const std::string& what)
        : InvalidInput("non-nested data: " + what) {}
};

struct CountMismatch : InvalidInput {
    explicit CountMismatch(const std::string& what)
        : InvalidInput("count mismatch: " + what) {}
};

struct FormatError : IoError {
    explicit FormatError(const std::string& what)
        : IoError("format error: " + what) {}
};

struct InsufficientRows : InvalidInput {
    explicit InsufficientRows(const std::string& what)
        : InvalidInput("insufficient rows: " + what) {}
};

struct SchemaError : InvalidInput {
    explicit SchemaError(const std::string& what)
        : InvalidInput("config schema error: " + what) {}
};

}  // namespace mflr
