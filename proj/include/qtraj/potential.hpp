#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "qtraj/errors.hpp"

namespace qtraj {

struct Free {};

/// V = U for |x| < q, 0 otherwise.
struct RectangularBarrier {
  double U;
  double q;
};

/// Infinite walls at x = -L and x = +L.
struct InfiniteSquareWell {
  double L;
};

/// V = m omega^2 x^2 / 2.
struct HarmonicOscillator {
  double omega;
};

/// Analytic one-dimensional potential. Immutable after construction.
class Potential {
 public:
  using Kind = std::variant<Free, RectangularBarrier, InfiniteSquareWell, HarmonicOscillator>;

  Potential() = default;
  Potential(Free f) : kind_(f) {}
  Potential(RectangularBarrier b) : kind_(b) {
    if (!(b.U > 0.0) || !(b.q > 0.0) || !std::isfinite(b.U) || !std::isfinite(b.q)) {
      throw InvalidArgument("rectangular barrier requires U > 0 and q > 0");
    }
  }
  Potential(InfiniteSquareWell w) : kind_(w) {
    if (!(w.L > 0.0) || !std::isfinite(w.L)) {
      throw InvalidArgument("infinite square well requires L > 0");
    }
  }
  Potential(HarmonicOscillator h) : kind_(h) {
    if (!(h.omega > 0.0) || !std::isfinite(h.omega)) {
      throw InvalidArgument("harmonic oscillator requires omega > 0");
    }
  }

  const Kind& kind() const { return kind_; }

  template <class T>
  bool is() const {
    return std::holds_alternative<T>(kind_);
  }
  template <class T>
  const T& as() const {
    return std::get<T>(kind_);
  }

  /// True when V is constant between breakpoints.
  bool piecewise_constant() const { return !is<HarmonicOscillator>(); }

  std::string name() const {
    return std::visit(
        [](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Free>) return "free";
          if constexpr (std::is_same_v<K, RectangularBarrier>) return "barrier";
          if constexpr (std::is_same_v<K, InfiniteSquareWell>) return "well";
          if constexpr (std::is_same_v<K, HarmonicOscillator>) return "oscillator";
        },
        kind_);
  }

  /// V(x). The barrier edges belong to the outside (V(+-q) = 0).
  double evaluate(double x, double mass = 1.0) const {
    check_x(x);
    return std::visit(
        [&](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Free>) {
            return 0.0;
          } else if constexpr (std::is_same_v<K, RectangularBarrier>) {
            return std::abs(x) < k.q ? k.U : 0.0;
          } else if constexpr (std::is_same_v<K, InfiniteSquareWell>) {
            return 0.0;
          } else {
            return 0.5 * mass * k.omega * k.omega * x * x;
          }
        },
        kind_);
  }

  /// V(x) with breakpoints resolved by the one-sided limit from the side of smaller |x|.
  double evaluate_inner(double x, double mass = 1.0) const {
    check_x(x);
    if (const auto* b = std::get_if<RectangularBarrier>(&kind_)) {
      return std::abs(x) <= b->q ? b->U : 0.0;
    }
    return evaluate(x, mass);
  }

  /// dV/dx away from breakpoints (zero for piecewise-constant kinds).
  double derivative(double x, double mass = 1.0) const {
    check_x(x);
    if (const auto* h = std::get_if<HarmonicOscillator>(&kind_)) {
      return mass * h->omega * h->omega * x;
    }
    return 0.0;
  }

  /// Strictly increasing discontinuity / wall locations.
  std::vector<double> breakpoints() const {
    if (const auto* b = std::get_if<RectangularBarrier>(&kind_)) return {-b->q, b->q};
    if (const auto* w = std::get_if<InfiniteSquareWell>(&kind_)) return {-w->L, w->L};
    return {};
  }

  /// Smallest value of V on [x1, x2] (inner convention at edges).
  double min_on(double x1, double x2, double mass = 1.0) const {
    if (x1 > x2) std::swap(x1, x2);
    if (const auto* b = std::get_if<RectangularBarrier>(&kind_)) {
      return (x1 < -b->q || x2 > b->q) ? 0.0 : b->U;
    }
    if (is<HarmonicOscillator>()) {
      if (x1 <= 0.0 && x2 >= 0.0) return 0.0;
      const double xm = std::min(std::abs(x1), std::abs(x2));
      return evaluate(xm, mass);
    }
    return 0.0;
  }

  /// True if x is strictly inside the domain (infinite-well walls excluded).
  bool in_domain(double x) const {
    if (!std::isfinite(x)) return false;
    if (const auto* w = std::get_if<InfiniteSquareWell>(&kind_)) return std::abs(x) < w->L;
    return true;
  }

 private:
  void check_x(double x) const {
    if (!std::isfinite(x)) throw DomainError("potential evaluated at non-finite x");
    if (!in_domain(x)) {
      throw DomainError("potential evaluated at or beyond infinite-well wall, x = " + std::to_string(x));
    }
  }

  Kind kind_ = Free{};
};

}  // namespace qtraj
