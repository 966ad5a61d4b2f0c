// SPDX-License-Identifier: Apache-2.0
//
// Shared numeric aliases and the error hierarchy used across the library.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace irsjsdm {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

enum class ErrorKind {
  kConfig,
  kInvalidGeometry,
  kInfeasible,
  kDegenerateCovariance,
  kNonConvergence,
  kDeInstability,
  kGradientFailure,
  kContractViolation,
  kInternal,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid or missing configuration value; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(ErrorKind::kConfig, field + ": " + what), field_(std::move(field)) {}
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A dimension/rank inequality of the two-stage precoder cannot be met.
class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what)
      : Error(ErrorKind::kInfeasible, what) {}
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double last_residual)
      : Error(ErrorKind::kNonConvergence, what), residual_(last_residual) {}
  [[nodiscard]] double last_residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Operating point outside the regime where the deterministic equivalents hold.
class DeInstabilityError : public Error {
 public:
  explicit DeInstabilityError(const std::string& what)
      : Error(ErrorKind::kDeInstability, what) {}
};

inline void require(bool condition, const std::string& what) {
  if (!condition) throw Error(ErrorKind::kContractViolation, what);
}

}  // namespace irsjsdm
