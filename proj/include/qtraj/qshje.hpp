#pragma once

// Conjugate momentum, reduced action and the quantum stationary Hamilton-Jacobi identities
// for a basis normalized to a microstate.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qtraj/basis.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/microstate.hpp"

namespace qtraj {

/// W and its first three spatial derivatives at a point.
struct ActionRecord {
  double W = 0.0;
  double W1 = 0.0;
  double W2 = 0.0;
  double W3 = 0.0;
};

/// Tolerance on |W^2 hbar^2 (ab - c^2/4)/(2m) - 1| for a basis to count as normalized.
inline constexpr double kNormalizationTolerance = 1e-10;

inline double normalization_defect(const SolutionBasis& basis, const Microstate& micro) {
  const double w = basis.nominal_wronskian();
  return w * w * basis.hbar() * basis.hbar() * micro.discriminant() / (2.0 * basis.mass()) - 1.0;
}

inline void require_normalized(const SolutionBasis& basis, const Microstate& micro) {
  micro.require_valid();
  if (!(basis.nominal_wronskian() > 0.0)) throw InvalidArgument("basis Wronskian must be positive");
  const double defect = normalization_defect(basis, micro);
  if (!(std::abs(defect) <= kNormalizationTolerance)) {
    throw InvalidArgument("basis is not normalized for the microstate (relative defect " + std::to_string(defect) +
                          "); call rescale_for_microstate first");
  }
}

namespace detail {

// a phi^2 + b theta^2 + c phi theta and its first two derivatives.
struct Denominator {
  double D;
  double D1;
  double D2;
};

inline Denominator denominator(const BasisSample& s, const Microstate& m) {
  const double D = m.quadratic(s.phi, s.theta);
  const double D1 = 2.0 * m.a * s.phi * s.dphi + 2.0 * m.b * s.theta * s.dtheta + m.c * (s.dphi * s.theta + s.phi * s.dtheta);
  const double D2 = 2.0 * m.a * (s.dphi * s.dphi + s.phi * s.d2phi) + 2.0 * m.b * (s.dtheta * s.dtheta + s.theta * s.d2theta) +
                    m.c * (s.d2phi * s.theta + 2.0 * s.dphi * s.dtheta + s.phi * s.d2theta);
  return {D, D1, D2};
}

inline double wrap_positive(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a < 0.0) a += two_pi;
  return a;
}

}  // namespace detail

/// Follows the continuous polar angle of (phi, theta) away from the anchor. The angle is
/// strictly increasing in x when the Wronskian is positive, so sampled angle increments
/// taken modulo 2 pi reconstruct it exactly provided no step advances a full turn.
class PhaseTracker {
 public:
  explicit PhaseTracker(const SolutionBasis& basis) : basis_(&basis), x_(basis.anchor()) {
    const BasisSample s = basis.eval(x_, 1);
    angle_ = std::atan2(s.theta, s.phi);
    raw_ = angle_;
  }

  /// Unwrapped polar angle of (phi, theta) at x.
  double angle_at(double x) {
    if (x == x_) return angle_;
    const double kmax = max_wavenumber(x_, x);
    const double dir = x > x_ ? 1.0 : -1.0;
    while (dir * (x - x_) > 0.0) {
      const double h = std::min(step_length(x_, kmax), std::abs(x - x_));
      const double xn = (std::abs(x - x_) <= h) ? x : x_ + dir * h;
      advance(xn, 0);
    }
    return angle_;
  }

  /// Number of half turns n and principal representative such that angle = theta0 + n pi.
  struct Branch {
    long n;
    double cos0;  // >= 0
    double sin0;
    double radius;
  };

  Branch branch_at(double x) {
    const double ang = angle_at(x);
    const BasisSample s = basis_->eval(x, 0);
    const double r = std::hypot(s.phi, s.theta);
    double sigma = s.phi > 0.0 ? 1.0 : (s.phi < 0.0 ? -1.0 : (s.theta > 0.0 ? 1.0 : -1.0));
    double c0 = sigma * s.phi / r;
    double s0 = sigma * s.theta / r;
    const double theta0 = std::atan2(s0, c0);  // in [-pi/2, pi/2]
    const long n = std::lround((ang - theta0) / std::numbers::pi);
    return {n, c0, s0, r};
  }

 private:
  double max_wavenumber(double x1, double x2) const {
    const double m = basis_->mass();
    const double vmin = basis_->potential().min_on(x1, x2, m);
    const double ke = basis_->energy() - vmin;
    return ke > 0.0 ? std::sqrt(2.0 * m * ke) / basis_->hbar() : 0.0;
  }

  // A step never exceeds 1/16 of the shortest local oscillation period, and never lets
  // the instantaneous angle rate W/(phi^2+theta^2) advance more than pi/8.
  double step_length(double x, double kmax) const {
    const BasisSample s = basis_->eval(x, 1);
    const double r2 = s.phi * s.phi + s.theta * s.theta;
    const double rate = std::abs(s.phi * s.dtheta - s.dphi * s.theta) / r2;
    const double speed = std::max({rate, kmax, 1e-300});
    return std::numbers::pi / (8.0 * speed);
  }

  void advance(double xn, int depth) {
    const BasisSample s = basis_->eval(xn, 0);
    const double raw_next = std::atan2(s.theta, s.phi);
    const bool forward = xn > x_;
    const double delta = forward ? detail::wrap_positive(raw_next - raw_) : -detail::wrap_positive(raw_ - raw_next);
    if (std::abs(delta) > 0.5 * std::numbers::pi && depth < 40) {
      const double xm = 0.5 * (x_ + xn);
      advance(xm, depth + 1);
      advance(xn, depth + 1);
      return;
    }
    angle_ += delta;
    raw_ = raw_next;
    x_ = xn;
  }

  const SolutionBasis* basis_;
  double x_;
  double angle_;
  double raw_;
};

namespace detail {

// W / hbar on the continuous branch, from the tracked angle of (phi, theta).
inline double action_phase(const PhaseTracker::Branch& br, const Microstate& m) {
  const double root = std::sqrt(m.discriminant());
  return std::atan2(m.b * br.sin0 + 0.5 * m.c * br.cos0, root * br.cos0) +
         static_cast<double>(br.n) * std::numbers::pi;
}

}  // namespace detail

/// W' = sqrt(2m) / (a phi^2 + b theta^2 + c phi theta).
inline double conjugate_momentum(const SolutionBasis& basis, const Microstate& micro, double x) {
  require_normalized(basis, micro);
  const BasisSample s = basis.eval(x, 0);
  return std::sqrt(2.0 * basis.mass()) / micro.quadratic(s.phi, s.theta);
}

/// W = hbar arctan[(b theta/phi + c/2)/(ab - c^2/4)^(1/2)] on the monotone branch, K = 0 at the anchor.
inline double reduced_action(const SolutionBasis& basis, const Microstate& micro, double x) {
  require_normalized(basis, micro);
  PhaseTracker tracker(basis);
  return basis.hbar() * detail::action_phase(tracker.branch_at(x), micro);
}

/// Reduced action on a grid, tracking the branch once along the points.
inline std::vector<double> reduced_action(const SolutionBasis& basis, const Microstate& micro,
                                          std::span<const double> xs) {
  require_normalized(basis, micro);
  PhaseTracker tracker(basis);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(basis.hbar() * detail::action_phase(tracker.branch_at(x), micro));
  return out;
}

namespace detail {

inline ActionRecord momentum_record(const SolutionBasis& basis, const Microstate& micro, double x) {
  const BasisSample s = basis.eval(x, 2);
  const Denominator d = denominator(s, micro);
  const double root2m = std::sqrt(2.0 * basis.mass());
  ActionRecord r;
  r.W1 = root2m / d.D;
  r.W2 = -root2m * d.D1 / (d.D * d.D);
  r.W3 = root2m * (2.0 * d.D1 * d.D1 / (d.D * d.D * d.D) - d.D2 / (d.D * d.D));
  return r;
}

inline double schwarzian_of(const ActionRecord& r) {
  const double u = r.W2 / r.W1;
  return r.W3 / r.W1 - 1.5 * u * u;
}

}  // namespace detail

/// (W, W', W'', W''') by analytic differentiation of the conjugate-momentum formula.
inline ActionRecord action_derivatives(const SolutionBasis& basis, const Microstate& micro, double x) {
  require_normalized(basis, micro);
  ActionRecord r = detail::momentum_record(basis, micro, x);
  r.W = reduced_action(basis, micro, x);
  return r;
}

/// Records on a grid (single branch walk for W).
inline std::vector<ActionRecord> action_derivatives(const SolutionBasis& basis, const Microstate& micro,
                                                    std::span<const double> xs) {
  const auto W = reduced_action(basis, micro, xs);
  std::vector<ActionRecord> out;
  out.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    ActionRecord r = detail::momentum_record(basis, micro, xs[i]);
    r.W = W[i];
    out.push_back(r);
  }
  return out;
}

/// Schwarzian derivative <W;x> = W'''/W' - (3/2)(W''/W')^2.
inline double schwarzian(const SolutionBasis& basis, const Microstate& micro, double x) {
  require_normalized(basis, micro);
  return detail::schwarzian_of(detail::momentum_record(basis, micro, x));
}

/// (W')^2/2m + V - E + (hbar^2/4m) <W;x>; zero for an exact solution.
inline double qshje_residual(const SolutionBasis& basis, const Microstate& micro, double x) {
  require_normalized(basis, micro);
  const ActionRecord r = detail::momentum_record(basis, micro, x);
  const double m = basis.mass();
  const double h = basis.hbar();
  const double V = basis.potential().evaluate_inner(x, m);
  return r.W1 * r.W1 / (2.0 * m) + V - basis.energy() + h * h / (4.0 * m) * detail::schwarzian_of(r);
}

/// The three bracketed terms that must vanish when the conjugate-momentum formula is
/// substituted into the QSHJE.
struct SubstitutionBrackets {
  double r_phi = 0.0;    // -hbar^2 phi''/2m - (E - V) phi
  double r_theta = 0.0;  // same for theta
  double r_norm = 0.0;   // W^2 hbar^2 (ab - c^2/4)/(2m) - 1
};

/// Second derivatives are taken by a nine-point difference of the first derivatives, so
/// the Schroedinger brackets test the solutions themselves rather than the equation used
/// to build them. Stencils that would straddle a breakpoint fall back to the equation.
/// r_norm uses the Wronskian measured at x. No normalization precondition: a mis-scaled
/// basis shows up in r_norm.
inline SubstitutionBrackets substitution_brackets(const SolutionBasis& basis, const Microstate& micro, double x) {
  micro.require_valid();
  const BasisSample s = basis.eval(x, 2);
  const double lam = basis.lambda(x);
  // Eighth-order stencil at 1/50 of the local length scale, which is set by lambda and by
  // its slope near turning points.
  constexpr std::array<double, 4> kW{4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  const double slope = 2.0 * basis.mass() * basis.potential().derivative(x, basis.mass()) /
                       (basis.hbar() * basis.hbar());
  const double len = std::min({1.0, 1.0 / std::sqrt(std::max(std::abs(lam), 1e-300)),
                               1.0 / std::cbrt(std::max(std::abs(slope), 1e-300))});
  const double h = 0.02 * len;
  bool straddles = false;
  for (double b : basis.potential().breakpoints()) {
    if (std::abs(b - x) <= 4.0 * h) straddles = true;
  }
  for (int j = -4; j <= 4 && !straddles; ++j) {
    if (!basis.potential().in_domain(x + j * h)) straddles = true;
  }
  double d2phi = s.d2phi;
  double d2theta = s.d2theta;
  if (!straddles) {
    d2phi = 0.0;
    d2theta = 0.0;
    for (int j = 1; j <= 4; ++j) {
      const BasisSample p = basis.eval(x + j * h, 1);
      const BasisSample q = basis.eval(x - j * h, 1);
      d2phi += kW[j - 1] * (p.dphi - q.dphi);
      d2theta += kW[j - 1] * (p.dtheta - q.dtheta);
    }
    d2phi /= h;
    d2theta /= h;
  }
  const double m = basis.mass();
  const double hb = basis.hbar();
  const double EmV = basis.energy() - basis.potential().evaluate_inner(x, m);
  SubstitutionBrackets out;
  out.r_phi = -hb * hb / (2.0 * m) * d2phi - EmV * s.phi;
  out.r_theta = -hb * hb / (2.0 * m) * d2theta - EmV * s.theta;
  const double w = s.phi * s.dtheta - s.dphi * s.theta;
  out.r_norm = w * w * hb * hb * micro.discriminant() / (2.0 * m) - 1.0;
  return out;
}

}  // namespace qtraj
