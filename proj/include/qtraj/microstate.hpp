#pragma once

#include <cmath>
#include <string>

#include "qtraj/errors.hpp"

namespace qtraj {

/// Real coefficient triple (a, b, c) selecting one trajectory among those sharing an energy.
struct Microstate {
  double a = 1.0;
  double b = 1.0;
  double c = 0.0;

  /// ab - c^2/4; must be positive.
  double discriminant() const { return a * b - 0.25 * c * c; }

  bool valid() const {
    return std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && a > 0.0 && b > 0.0 &&
           discriminant() > 0.0;
  }

  void require_valid() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
      throw InvalidArgument("microstate coefficients must be finite");
    }
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("microstate requires a > 0 and b > 0");
    if (!(discriminant() > 0.0)) throw InvalidArgument("ab - c^2/4 must be positive");
  }

  /// a phi^2 + b theta^2 + c phi theta.
  double quadratic(double phi, double theta) const { return a * phi * phi + b * theta * theta + c * phi * theta; }

  bool symmetric() const { return a == b && c == 0.0; }
};

/// Squared Wronskian 2m / [hbar^2 (ab - c^2/4)] required by the microstate.
inline double normalization_target(const Microstate& micro, double hbar, double mass) {
  return 2.0 * mass / (hbar * hbar * micro.discriminant());
}

}  // namespace qtraj
