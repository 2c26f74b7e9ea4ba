#ifndef ASMC_ERRORS_HPP
#define ASMC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace asmc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Precondition on a caller-supplied argument does not hold.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Energy or gradient evaluated to a non-finite value.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// A documented type invariant was found to be violated at runtime.
class InvariantError : public Error {
public:
    using Error::Error;
};

// Every importance weight is zero or non-finite; resampling is impossible.
class DegenerateWeightsError : public Error {
public:
    explicit DegenerateWeightsError(const std::string& what, long level = -1)
        : Error(what), level_(level) {}
    long level() const noexcept { return level_; }

private:
    long level_;
};

// Particle position became NaN/inf during propagation.
class PropagationError : public Error {
public:
    PropagationError(const std::string& what, long level, long particle)
        : Error(what), level_(level), particle_(particle) {}
    long level() const noexcept { return level_; }
    long particle() const noexcept { return particle_; }

private:
    long level_;
    long particle_;
};

// Experiment configuration is missing, mistyped or has unknown keys.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Requested computation is outside what the implementation supports.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

}  // namespace asmc

#endif  // ASMC_ERRORS_HPP
