#pragma once

// Bound states: eigenvalues, a basis whose phi is the bound solution, the cos-ansatz that
// rebuilds phi from any microstate, and the quantized action variable.

#include <cmath>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qtraj/basis.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/microstate.hpp"
#include "qtraj/potential.hpp"
#include "qtraj/qshje.hpp"

namespace qtraj {

struct BoundState {
  Potential potential;
  int n_nodes = 0;
  double E = 0.0;
  SolutionBasis basis;
};

inline double eigen_energy(const Potential& pot, int n_nodes, double hbar = 1.0, double mass = 1.0) {
  if (n_nodes < 0) throw InvalidArgument("n_nodes must be nonnegative");
  detail::require_physical(0.0, hbar, mass);
  const double n1 = n_nodes + 1.0;
  if (pot.is<InfiniteSquareWell>()) {
    const double width = 2.0 * pot.as<InfiniteSquareWell>().L;
    return n1 * n1 * std::numbers::pi * std::numbers::pi * hbar * hbar / (2.0 * mass * width * width);
  }
  if (pot.is<HarmonicOscillator>()) return (n_nodes + 0.5) * hbar * pot.as<HarmonicOscillator>().omega;
  throw InvalidArgument("bound states are available for the well and the oscillator only, not '" + pot.name() + "'");
}

/// phi is the bound eigenfunction; theta is an independent solution that is not bound.
/// Oscillator: phi is the unit-normalized Hermite function and theta is integrated from
/// x = 0 with phi theta' - phi' theta = sqrt(2mE)/hbar. Well: phi = sin K(x+L),
/// theta = -cos K(x+L) with K = (n+1) pi/(2L).
inline BoundState bound_basis(const Potential& pot, int n_nodes, double hbar = 1.0, double mass = 1.0) {
  const double E = eigen_energy(pot, n_nodes, hbar, mass);
  if (pot.is<InfiniteSquareWell>()) {
    const double L = pot.as<InfiniteSquareWell>().L;
    const double K = (n_nodes + 1.0) * std::numbers::pi / (2.0 * L);
    const detail::RawState init{std::sin(K * L), K * std::cos(K * L), -std::cos(K * L), K * std::sin(K * L)};
    auto kernel = std::make_shared<detail::PiecewiseKernel>(pot, E, hbar, mass, 0.0, init);
    return {pot, n_nodes, E, SolutionBasis(pot, E, hbar, mass, 0.0, K, std::move(kernel))};
  }
  const auto& ho = pot.as<HarmonicOscillator>();
  const double w = std::sqrt(2.0 * mass * E) / hbar;
  const auto [phi0, dphi0] = detail::hermite_function(n_nodes, 0.0, mass, ho.omega, hbar);
  detail::TaylorTable::State init{{phi0, 0.0}, {dphi0, 0.0}};
  if (n_nodes % 2 == 0) {
    init.dy[1] = w / phi0;
  } else {
    init.y[1] = -w / dphi0;
  }
  auto kernel = std::make_shared<detail::HermiteKernel>(n_nodes, mass, ho.omega, hbar,
                                                        detail::oscillator_table(ho, E, hbar, mass, 0.0, init));
  return {pot, n_nodes, E, SolutionBasis(pot, E, hbar, mass, 0.0, w, std::move(kernel))};
}

inline BoundState rescale_for_microstate(const BoundState& bs, const Microstate& micro) {
  BoundState out = bs;
  out.basis = rescale_for_microstate(bs.basis, micro);
  return out;
}

namespace detail {

// cos(atan2(Y, X) + n pi) is taken as (-1)^n X / hypot(X, Y); near a node of phi the
// angle sits close to pi/2 and the library cosine would lose the small result.
inline double microstate_wave_at(const Microstate& micro, PhaseTracker& tracker, double x) {
  const PhaseTracker::Branch br = tracker.branch_at(x);
  const double X = std::sqrt(micro.discriminant()) * br.cos0;
  const double Y = micro.b * br.sin0 + 0.5 * micro.c * br.cos0;
  const double cosine = (br.n % 2 == 0 ? 1.0 : -1.0) * X / std::hypot(X, Y);
  const double quad = micro.quadratic(br.cos0, br.sin0);
  return br.radius * std::sqrt(quad) / std::sqrt(micro.a - micro.c * micro.c / (4.0 * micro.b)) * cosine;
}

}  // namespace detail

/// sqrt(a phi^2 + b theta^2 + c phi theta) / sqrt(a - c^2/(4b)) * cos(W/hbar), with W on
/// the tracked branch. Equals phi for every valid microstate; zero at a node of phi.
inline double microstate_wave(const BoundState& bs, const Microstate& micro, double x) {
  require_normalized(bs.basis, micro);
  PhaseTracker tracker(bs.basis);
  return detail::microstate_wave_at(micro, tracker, x);
}

inline std::vector<double> microstate_wave(const BoundState& bs, const Microstate& micro, std::span<const double> xs) {
  require_normalized(bs.basis, micro);
  PhaseTracker tracker(bs.basis);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(detail::microstate_wave_at(micro, tracker, x));
  return out;
}

/// Edge threshold on W' for the oscillator's truncated contour.
inline constexpr double kEdgeMomentum = 1e-8;

/// J = 2 * integral of W' along the real line: both passes of the closed contour. For the
/// oscillator the integral runs over [-half_width, half_width]; for the well it runs wall
/// to wall and half_width is not used.
inline double action_variable(const BoundState& bs, const Microstate& micro, double half_width) {
  require_normalized(bs.basis, micro);
  double lo = 0.0;
  double hi = 0.0;
  if (bs.potential.is<InfiniteSquareWell>()) {
    hi = bs.potential.as<InfiniteSquareWell>().L;
    lo = -hi;
  } else {
    if (!(half_width > 0.0)) throw InvalidArgument("half_width must be positive");
    lo = -half_width;
    hi = half_width;
    for (double edge : {lo, hi}) {
      const double p = conjugate_momentum(bs.basis, micro, edge);
      if (!(p < kEdgeMomentum)) {
        throw DomainError("half_width too small: W'(" + std::to_string(edge) + ") = " + std::to_string(p) +
                          " is not below " + std::to_string(kEdgeMomentum));
      }
    }
  }
  auto f = [&](double x) { return conjugate_momentum(bs.basis, micro, x); };
  double err = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-13, &err);
  if (!(err < 1e-10)) throw NumericalError("action integral did not reach 1e-10: error " + std::to_string(err));
  return 2.0 * integral;
}

}  // namespace qtraj
