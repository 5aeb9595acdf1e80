#ifndef KAM_ERRORS_HPP
#define KAM_ERRORS_HPP

#include <array>
#include <stdexcept>
#include <string>

namespace kam {

// Base class for all library errors. CLI maps subtypes to exit codes.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
    using Error::Error;
};

// Structural hypothesis of the model fails (nondegeneracy, transversality).
struct HypothesisViolation : Error {
    std::array<double, 2> witness{0, 0};
    HypothesisViolation(const std::string& msg, std::array<double, 2> w)
        : Error(msg), witness(w) {}
};

// Numerical failures.
struct NumericalError : Error {
    using Error::Error;
};
struct SymmetryViolation : NumericalError {
    using NumericalError::NumericalError;
};
struct DegenerateFrequencyMap : NumericalError {
    using NumericalError::NumericalError;
};
struct ResolutionError : NumericalError {
    using NumericalError::NumericalError;
};
struct OutOfDomain : NumericalError {
    using NumericalError::NumericalError;
};
struct SmallDivisor : NumericalError {
    std::array<int, 2> k{0, 0};
    SmallDivisor(const std::string& msg, std::array<int, 2> k_) : NumericalError(msg), k(k_) {}
};
struct NearDegeneracy : NumericalError {
    std::array<int, 2> k{0, 0};
    NearDegeneracy(const std::string& msg, std::array<int, 2> k_) : NumericalError(msg), k(k_) {}
};
struct SingularEta : NumericalError {
    std::array<double, 2> witness_a{0, 0}, witness_b{0, 0};
    SingularEta(const std::string& msg, std::array<double, 2> a, std::array<double, 2> b)
        : NumericalError(msg), witness_a(a), witness_b(b) {}
};
struct DegeneratePair : NumericalError {
    using NumericalError::NumericalError;
};
struct CoverageError : NumericalError {
    using NumericalError::NumericalError;
};
struct BoundaryContamination : NumericalError {
    using NumericalError::NumericalError;
};
struct SolverFailure : NumericalError {
    using NumericalError::NumericalError;
};
struct DimensionMismatch : NumericalError {
    using NumericalError::NumericalError;
};
struct InsufficientData : NumericalError {
    using NumericalError::NumericalError;
};
struct EmptyNonresonantSet : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace kam

#endif
