#pragma once

#include <stdexcept>
#include <string>

namespace chaoslab {

/// Base class for all library errors. The exit code is what the CLI returns
/// when the error escapes a command.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
};

/// Malformed or out-of-range input: bad kernel file, invalid parameter.
class InputError : public Error
{
  public:
    using Error::Error;
};

/// Covariance matrix not positive definite where a bound requires it.
class SingularCovarianceError : public Error
{
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Operands live on different grids, or a block partition does not divide
/// the grid.
class GridMismatchError : public Error
{
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// Dense tensor or sampling size above the configured cap.
class BudgetExceededError : public Error
{
  public:
    using Error::Error;
    int exit_code() const noexcept override { return 5; }
};

}  // namespace chaoslab
