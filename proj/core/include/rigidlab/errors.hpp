#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rigidlab {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed expression source. Carries the byte offset of the offending
// token and a description of what was expected there.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::string expected_, const std::string& what)
        : Error(what), offset_(offset), expected_(std::move(expected_)) {}

    std::size_t offset() const { return offset_; }
    const std::string& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string expected_;
};

// Identifier that is neither an allowed variable nor a known function.
class UnknownIdentifier : public ParseError {
public:
    UnknownIdentifier(std::size_t offset, std::string name, const std::string& what)
        : ParseError(offset, "known identifier", what), name_(std::move(name)) {}

    const std::string& name() const { return name_; }

private:
    std::string name_;
};

// Evaluation left the function's domain (log of a non-positive value,
// division by zero, non-integer power of a negative base, overflow, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateChord : public Error {
public:
    using Error::Error;
};

class TooFewSamples : public Error {
public:
    using Error::Error;
};

class EmptyDirectionSet : public Error {
public:
    using Error::Error;
};

class ZeroScaleFactor : public Error {
public:
    using Error::Error;
};

class NonPositiveScale : public Error {
public:
    using Error::Error;
};

class AllScalesOne : public Error {
public:
    using Error::Error;
};

// classify_solution was called on a system whose residual exceeds tol_sys.
class SystemViolated : public Error {
public:
    SystemViolated(double residual, const std::string& what)
        : Error(what), residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

class ExtractionFailure : public Error {
public:
    using Error::Error;
};

class FitFailure : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rigidlab
