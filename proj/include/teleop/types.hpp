#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace teleop {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr std::size_t kAxes = 3;
inline constexpr const char* kAxisNames[kAxes] = {"x", "y", "z"};

// Base for every error the library raises. Callers that only care about
// "something in the teleop stack failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Non-finite input or a numerical failure such as loss of definiteness.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Singular inertia or Jacobian.
class SingularityError : public NumericError {
 public:
  using NumericError::NumericError;
};

// A state bound was exceeded while running (maps to CLI exit code 3).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// Throws NumericError naming `field` (and the axis) if any component is not finite.
void require_finite(const Vec3& v, const std::string& field);
void require_finite(double v, const std::string& field);

}  // namespace teleop
