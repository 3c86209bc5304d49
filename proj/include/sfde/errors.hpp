#pragma once

#include <stdexcept>
#include <string>

namespace sfde {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfDomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class GridMismatchError : public Error {
public:
    using Error::Error;
};

class UnequalSampleCountsError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class MissingIncrementsError : public Error {
public:
    using Error::Error;
};

class MissingParamsError : public Error {
public:
    using Error::Error;
};

class EmptyWindowError : public Error {
public:
    using Error::Error;
};

class EmptySamplesError : public Error {
public:
    using Error::Error;
};

class NonNestedGridsError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

class SolverDivergedError : public Error {
public:
    SolverDivergedError(const std::string& what, double residual, long step)
        : Error(what), residual(residual), step(step) {}
    double residual;
    long step;  // step index within a simulation, -1 for a standalone solve
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error("config field '" + field + "': " + message), field(std::move(field)) {}
    std::string field;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sfde
