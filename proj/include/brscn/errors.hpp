#pragma once

#include <stdexcept>
#include <string>

namespace brscn {

/// Base for every error raised by the library. `exit_code()` is the CLI
/// status the error maps to.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class InvalidArgument : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Malformed input files, missing columns, unreadable paths.
class ParseError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Iterative kernel did not converge. Carries the best estimate reached.
class NumericFailure : public Error {
public:
    NumericFailure(const std::string& what, double best_estimate)
        : Error(what), best_(best_estimate) {}
    double best_estimate() const noexcept { return best_; }
    int exit_code() const noexcept override { return 4; }

private:
    double best_;
};

/// NRMSE requested against a target with zero variance.
class DegenerateTarget : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// No candidate passed the supervisory test after all r anneals.
class ConstructionStalled : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

}  // namespace brscn
