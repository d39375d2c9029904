#pragma once

#include <stdexcept>
#include <string>

namespace shellopt {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument values (dimensions, resolutions, constraint violations).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Mesh topology problems: non-manifold edges, degenerate faces, bad ordering.
class StructureError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Linear system singular after support elimination.
class SingularSystemError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace shellopt
