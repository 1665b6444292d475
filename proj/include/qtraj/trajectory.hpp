#pragma once

// Trajectories in the [x, t] plane from t - tau = dW/dE, mechanical velocity, and the
// closed-form free-particle motion.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtraj/basis.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/microstate.hpp"
#include "qtraj/potential.hpp"
#include "qtraj/qshje.hpp"

namespace qtraj {

/// Everything that fixes W(x; E) as a smooth function of E: the basis is rebuilt at each
/// energy with the same anchor and then normalized for the microstate.
struct TrajectoryProblem {
  Potential potential;
  double E = 0.5;
  double hbar = 1.0;
  double mass = 1.0;
  Microstate micro;
  double anchor = 0.0;
};

struct TrajectorySample {
  double x = 0.0;
  double t = 0.0;
  double W1 = 0.0;
  double v = 0.0;
};

struct IndeterminacyReport {
  std::vector<double> hbar_values;
  std::vector<double> envelope_amplitude;
  bool converged = false;
};

namespace detail {

inline double energy_step(double E) { return std::max(1e-6 * std::abs(E), 1e-8); }

inline SolutionBasis normalized_basis(const TrajectoryProblem& p, double E) {
  return rescale_for_microstate(build_basis(p.potential, E, p.hbar, p.mass, p.anchor), p.micro);
}

// Five-point central difference of f in E at step d.
template <class F>
double stencil(F&& f, double E, double d) {
  return (f(E - 2.0 * d) - 8.0 * f(E - d) + 8.0 * f(E + d) - f(E + 2.0 * d)) / (12.0 * d);
}

}  // namespace detail

/// tau + dW(x; E)/dE. Two stencils (dE and dE/2) must agree to 1e-6 relative, with an
/// allowance for round-off in W itself; otherwise NumericalError.
inline double time_of_position(const TrajectoryProblem& p, double x, double tau = 0.0) {
  p.micro.require_valid();
  double wmax = 0.0;
  auto W = [&](double E) {
    const double w = reduced_action(detail::normalized_basis(p, E), p.micro, x);
    wmax = std::max(wmax, std::abs(w));
    return w;
  };
  const double d = detail::energy_step(p.E);
  const double coarse = detail::stencil(W, p.E, d);
  const double fine = detail::stencil(W, p.E, 0.5 * d);
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::max(wmax, p.hbar) / (0.5 * d);
  if (!(std::abs(coarse - fine) <= 1e-6 * std::abs(fine) + roundoff)) {
    throw NumericalError("dW/dE is not smooth at x = " + std::to_string(x) + ": stencils differ by " +
                         std::to_string(std::abs(coarse - fine)));
  }
  return tau + coarse;
}

inline double time_of_position(const Potential& pot, double E, double hbar, double mass, const Microstate& micro,
                               double x, double tau) {
  return time_of_position(TrajectoryProblem{pot, E, hbar, mass, micro, 0.0}, x, tau);
}

/// 1 / (dW'/dE): the velocity of the particle along its trajectory.
inline double mechanical_velocity(const TrajectoryProblem& p, double x) {
  p.micro.require_valid();
  auto W1 = [&](double E) { return conjugate_momentum(detail::normalized_basis(p, E), p.micro, x); };
  const double d = detail::energy_step(p.E);
  const double slope = detail::stencil(W1, p.E, d);
  const double scale = std::abs(W1(p.E)) / std::max(std::abs(p.E), d);
  if (!(std::abs(slope) > 1e-12 * scale)) {
    throw NumericalError("turning point: dW'/dE vanishes at x = " + std::to_string(x));
  }
  return 1.0 / slope;
}

inline double mechanical_velocity(const Potential& pot, double E, double hbar, double mass, const Microstate& micro,
                                  double x) {
  return mechanical_velocity(TrajectoryProblem{pot, E, hbar, mass, micro, 0.0}, x);
}

/// Closed-form free motion:
/// t - t0 = sqrt(ab - c^2/4) sqrt(2m/E) x / [a + b + R cos(2 k x - atan2(c, a - b))],
/// with R = sqrt((a - b)^2 + c^2), k = sqrt(2mE)/hbar and phi = cos kx, theta = sin kx.
inline double free_particle_time(const Microstate& micro, double x, double E, double hbar, double mass) {
  micro.require_valid();
  if (!(E > 0.0)) throw InvalidArgument("free-particle motion requires E > 0");
  const double a = micro.a;
  const double b = micro.b;
  const double c = micro.c;
  const double R = std::hypot(a - b, c);
  const double k = std::sqrt(2.0 * mass * E) / hbar;
  const double phase = R == 0.0 ? 0.0 : std::atan2(c, a - b);
  const double den = a + b + R * std::cos(2.0 * k * x - phase);
  if (!(den > 0.0)) throw NumericalError("free-particle denominator vanished");
  return std::sqrt(micro.discriminant()) * std::sqrt(2.0 * mass / E) * x / den;
}

/// Inverse of time_of_position on a bracket where it is strictly monotone.
inline double position_of_time(const TrajectoryProblem& p, double t, std::pair<double, double> bracket,
                               double tau = 0.0) {
  auto [lo, hi] = bracket;
  if (!(lo < hi)) throw InvalidArgument("bracket must satisfy x_lo < x_hi");
  constexpr int kSamples = 33;
  std::array<double, kSamples> ts{};
  for (int i = 0; i < kSamples; ++i) {
    ts[i] = time_of_position(p, lo + (hi - lo) * i / (kSamples - 1), tau);
  }
  const double sign = ts.back() > ts.front() ? 1.0 : -1.0;
  for (int i = 1; i < kSamples; ++i) {
    if (!(sign * (ts[i] - ts[i - 1]) > 0.0)) {
      throw NumericalError("t(x) is not monotone on the bracket; turning near sample " + std::to_string(i) +
                           " (x = " + std::to_string(lo + (hi - lo) * i / (kSamples - 1)) + ")");
    }
  }
  const double tmin = std::min(ts.front(), ts.back());
  const double tmax = std::max(ts.front(), ts.back());
  if (t < tmin || t > tmax) {
    throw InvalidArgument("t = " + std::to_string(t) + " is outside the bracket's range [" + std::to_string(tmin) +
                          ", " + std::to_string(tmax) + "]");
  }
  const double tol = 1e-9 * std::max(std::abs(t), 1.0);
  double flo = ts.front() - t;
  double fhi = ts.back() - t;
  if (std::abs(flo) < tol) return lo;
  if (std::abs(fhi) < tol) return hi;
  // Secant proposal kept inside the bracket; plain bisection when it stalls.
  bool bisect = false;
  for (int iter = 0; iter < 200; ++iter) {
    double x = bisect ? 0.5 * (lo + hi) : lo - flo * (hi - lo) / (fhi - flo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = time_of_position(p, x, tau) - t;
    if (std::abs(fx) < tol) return x;
    const double width = hi - lo;
    if ((fx > 0.0) == (fhi > 0.0)) {
      hi = x;
      fhi = fx;
    } else {
      lo = x;
      flo = fx;
    }
    bisect = !bisect && (hi - lo) > 0.5 * width;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))) {
      return std::abs(flo) < std::abs(fhi) ? lo : hi;
    }
  }
  throw NumericalError("position_of_time did not converge");
}

/// Samples (x, t, W', v) along a grid.
inline std::vector<TrajectorySample> trajectory_samples(const TrajectoryProblem& p, const std::vector<double>& xs,
                                                        double tau = 0.0) {
  const SolutionBasis basis = detail::normalized_basis(p, p.E);
  std::vector<TrajectorySample> out;
  out.reserve(xs.size());
  for (double x : xs) {
    out.push_back({x, time_of_position(p, x, tau), conjugate_momentum(basis, p.micro, x), mechanical_velocity(p, x)});
  }
  return out;
}

/// Peak-to-peak oscillation of the slowness (t - t0)/x of the closed-form free motion over
/// one period pi hbar / sqrt(2mE) starting at window.first, divided by its mean. For an
/// asymmetric microstate this does not shrink as hbar decreases; only the period does.
inline IndeterminacyReport classical_limit_sweep(const Microstate& micro, double E, double mass,
                                                 const std::vector<double>& hbar_sequence,
                                                 std::pair<double, double> window) {
  micro.require_valid();
  if (!(E > 0.0) || !(mass > 0.0)) throw InvalidArgument("sweep requires E > 0 and mass > 0");
  if (hbar_sequence.empty()) throw InvalidArgument("hbar sequence is empty");
  for (std::size_t i = 0; i < hbar_sequence.size(); ++i) {
    if (!(hbar_sequence[i] > 0.0)) throw InvalidArgument("hbar values must be positive");
    if (i > 0 && !(hbar_sequence[i] < hbar_sequence[i - 1])) {
      throw InvalidArgument("hbar sequence must be strictly decreasing");
    }
  }
  if (!(window.first < window.second)) throw InvalidArgument("x window must satisfy lo < hi");
  constexpr int kSamples = 2048;
  IndeterminacyReport rep;
  for (double hbar : hbar_sequence) {
    const double period = std::numbers::pi * hbar / std::sqrt(2.0 * mass * E);
    if (window.first + period > window.second) {
      throw InvalidArgument("x window is shorter than one oscillation period at hbar = " + std::to_string(hbar));
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    int used = 0;
    for (int j = 0; j < kSamples; ++j) {
      const double x = window.first + period * j / kSamples;
      if (x == 0.0) continue;
      const double s = free_particle_time(micro, x, E, hbar, mass) / x;
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      sum += s;
      ++used;
    }
    rep.hbar_values.push_back(hbar);
    rep.envelope_amplitude.push_back((hi - lo) / std::abs(sum / used));
  }
  rep.converged = rep.envelope_amplitude.back() < 1e-10;
  return rep;
}

}  // namespace qtraj
