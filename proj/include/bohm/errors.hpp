#pragma once

#include <stdexcept>
#include <string>

namespace bohm {

/// Base for failures caused by the numerics rather than the inputs.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// |Psi|^2 fell below the singular guard, so v and Q are undefined.
class NearNode : public NumericalError {
public:
    NearNode(double x, double y, double t);
    double x, y, t;
};

class StepFloorHit : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EnvelopeBreach : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class EmptyHistogram : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Bad configuration or unusable input files. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bohm
