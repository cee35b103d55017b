#pragma once

#include <stdexcept>
#include <string>

namespace egle {

// Base class for all typed estimation failures. Estimators throw the most
// specific subtype; the Monte-Carlo harness and the m-sweep catch this base
// and record the failure instead of aborting.
class EstimationError : public std::runtime_error {
public:
    explicit EstimationError(const std::string& what) : std::runtime_error(what) {}
};

class InsufficientSamples : public EstimationError {
public:
    using EstimationError::EstimationError;
};

// All samples identical while more than one component was requested.
class DegenerateData : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class InvalidSample : public EstimationError {
public:
    using EstimationError::EstimationError;
};

// A responsibility column summed to ~0; the caller should retry with fewer components.
class EmptyComponent : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class IllConditioned : public EstimationError {
public:
    using EstimationError::EstimationError;
};

// Last entry of the smallest right singular vector of [D c] is ~0.
class NonGenericTls : public EstimationError {
public:
    using EstimationError::EstimationError;
};

// Repeated smallest singular value: the TLS minimizer is not unique.
class DegenerateSvd : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class Infeasible : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class DegenerateVariance : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class SingularJacobian : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class DegenerateAdmittance : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class DegenerateImpedance : public EstimationError {
public:
    using EstimationError::EstimationError;
};

class ZeroTruth : public EstimationError {
public:
    using EstimationError::EstimationError;
};

// Malformed input file (CSV / config); message names the offending row/column.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace egle
