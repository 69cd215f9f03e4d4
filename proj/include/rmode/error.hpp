#ifndef RMODE_ERROR_HPP
#define RMODE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace rmode {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class ValueError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Failures tied to a specific transmitter/receiver path. The CLI maps the
/// whole family onto one exit code.
class PathError : public Error {
public:
    using Error::Error;
};

class AntipodalPath : public PathError {
public:
    using PathError::PathError;
};

class DegeneratePath : public PathError {
public:
    using PathError::PathError;
};

class BelowMinRange : public PathError {
public:
    using PathError::PathError;
};

class OutsideRaster : public PathError {
public:
    using PathError::PathError;
};

class NoDataCell : public PathError {
public:
    using PathError::PathError;
};

class InvalidSigma : public Error {
public:
    using Error::Error;
};

class NotInTable : public Error {
public:
    using Error::Error;
};

class UnmappedClass : public Error {
public:
    explicit UnmappedClass(long code)
        : Error("land-cover class " + std::to_string(code) + " has no conductivity mapping"),
          code_(code) {}

    long code() const noexcept { return code_; }

private:
    long code_;
};

class DegenerateCurve : public Error {
public:
    using Error::Error;
};

class NoCurves : public Error {
public:
    using Error::Error;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

class InvalidGrid : public Error {
public:
    using Error::Error;
};

class InvalidGridSpec : public Error {
public:
    using Error::Error;
};

class EncodingError : public Error {
public:
    using Error::Error;
};

} // namespace rmode

#endif
