#pragma once

#include <stdexcept>
#include <string>

namespace auginf {

// Base for everything thrown by the library. The CLI maps subclasses to
// distinct exit codes, so new error kinds should subclass one of these.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller broke a documented precondition (shape mismatch, label out of
// range, empty sample list, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Non-finite values fed into an operation whose contract requires finite
// inputs.
class NumericError : public Error {
public:
    using Error::Error;
};

// An operation that requires a finite orbit was called with a stochastic one
// (or vice versa).
class ModeError : public Error {
public:
    using Error::Error;
};

// Bad configuration: unknown keys, missing files, invalid field values.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Data ingestion failure; carries the 1-based line (or record) number when
// one is known.
class IngestError : public Error {
public:
    IngestError(const std::string& msg, long line = -1)
        : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

// A sampler or optimizer produced a non-finite value. Carries the step index.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, long step)
        : Error(msg + " (step " + std::to_string(step) + ")"), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

}  // namespace auginf
