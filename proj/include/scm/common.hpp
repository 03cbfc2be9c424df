#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace scm {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point2 a, Point2 b) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Axis-aligned rectangle in physical coordinates.
struct Box {
  Point2 lo;
  Point2 hi;

  double width() const { return hi.x - lo.x; }
  double height() const { return hi.y - lo.y; }
  double area() const { return width() * height(); }

  /// Maps reference coordinates in [-1,1]^2 onto the box.
  Point2 from_reference(Point2 xi) const {
    return {lo.x + 0.5 * (xi.x + 1.0) * width(), lo.y + 0.5 * (xi.y + 1.0) * height()};
  }
};

// Error hierarchy. ConfigError covers invalid input; NumericalError covers
// failures of an algorithm on valid input (divergence, stalls, topology).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class NonBracketing : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AmbiguousTopology : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class VoidElement : public Error {
 public:
  using Error::Error;
};

class SolverStall : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMass : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(const std::string& what, double estimate, double residual)
      : NumericalError(what), best_estimate(estimate), residual(residual) {}
  double best_estimate;
  double residual;
};

class Diverged : public NumericalError {
 public:
  Diverged(const std::string& what, long step) : NumericalError(what), step(step) {}
  long step;
};

class ReflectionRegime : public Error {
 public:
  using Error::Error;
};

class ZeroReference : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace scm
