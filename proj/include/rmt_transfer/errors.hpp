#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rmt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// The asymptotic formulas are undefined for this parameter regime.
class RegimeError : public Error {
public:
    enum class Kind { NonPositiveH, NonPositiveHTilde, NonPositiveVariance, NonPositiveA2 };
    RegimeError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

// A closed form hits a zero denominator or a non positive definite quadratic form.
class DegenerateError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd best, double best_residual)
        : Error(what), best_(std::move(best)), best_residual_(best_residual) {}
    const Eigen::VectorXd& best_iterate() const { return best_; }
    double best_residual() const { return best_residual_; }

private:
    Eigen::VectorXd best_;
    double best_residual_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace rmt
