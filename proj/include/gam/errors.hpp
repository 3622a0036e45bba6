#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gam {

// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- backend ---

class BackendError : public Error {
public:
    enum class Kind { transport, status, timeout };

    BackendError(Kind kind, const std::string& message, int status_code = 0)
        : Error(message), kind(kind), status_code(status_code) {}

    Kind kind;
    int status_code;
};

class EmptyCompletion : public Error {
public:
    using Error::Error;
};

class NoMatchingRule : public Error {
public:
    using Error::Error;
};

class MissingBinding : public Error {
public:
    using Error::Error;
};

// --- page store ---

class IdMismatch : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class CorruptManifest : public Error {
public:
    using Error::Error;
};

// --- memorizer ---

class OutOfOrderSession : public Error {
public:
    using Error::Error;
};

class ConcurrentWrite : public Error {
public:
    using Error::Error;
};

// --- researcher ---

class PlanParseError : public Error {
public:
    using Error::Error;
};

class IntegrationParseError : public Error {
public:
    using Error::Error;
};

class ReflectionParseError : public Error {
public:
    using Error::Error;
};

}  // namespace gam
