#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mkv {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Requested configuration lies outside what an operation supports
// (wrong dimension, N above an oracle cap, ...).
class UnsupportedConfiguration : public Error {
public:
    using Error::Error;
};

// A declared constant (L, lambda, lower-bound witness) is needed but absent.
class MissingConstant : public Error {
public:
    using Error::Error;
};

class NonMonotoneQuery : public Error {
public:
    using Error::Error;
};

// Two consumers of a coupled session disagree on breakpoints.
class CouplingConflict : public Error {
public:
    using Error::Error;
};

// Coefficient or step evaluation produced a non-finite or illegal value.
class NumericalBlowup : public Error {
public:
    NumericalBlowup(const std::string& what, std::size_t particle, double t,
                    std::vector<double> state)
        : Error(what), particle_(particle), t_(t), state_(std::move(state)) {}

    std::size_t particle() const noexcept { return particle_; }
    double time() const noexcept { return t_; }
    const std::vector<double>& state() const noexcept { return state_; }

private:
    std::size_t particle_;
    double t_;
    std::vector<double> state_;
};

}  // namespace mkv
