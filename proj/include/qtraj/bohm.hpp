#pragma once

// Quantities used to contrast this representation with Bohm's: the quantum potential and
// its microstate-dependent classical-limit average, the generalized ansatz, and the
// divergence-free three-dimensional Wronskian field.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qtraj/basis.hpp"
#include "qtraj/errors.hpp"
#include "qtraj/microstate.hpp"
#include "qtraj/parallel.hpp"
#include "qtraj/qshje.hpp"

namespace qtraj {

struct QuantumPotentialSample {
  double x = 0.0;
  double Q = 0.0;
  double Q_cross = 0.0;
};

/// Q = (hbar^2/4m) <W;x>, and the same quantity as E - V - (W')^2/2m.
inline QuantumPotentialSample quantum_potential(const SolutionBasis& basis, const Microstate& micro, double x) {
  require_normalized(basis, micro);
  const ActionRecord r = detail::momentum_record(basis, micro, x);
  const double m = basis.mass();
  const double h = basis.hbar();
  const double V = basis.potential().evaluate_inner(x, m);
  return {x, h * h / (4.0 * m) * detail::schwarzian_of(r), basis.energy() - V - r.W1 * r.W1 / (2.0 * m)};
}

/// E (1 - ((a+b)/2) / sqrt(ab - c^2/4)); never positive.
inline double classical_q_average(const Microstate& micro, double E) {
  micro.require_valid();
  if (!(E > 0.0)) throw InvalidArgument("classical Q average requires E > 0");
  return E * (1.0 - 0.5 * (micro.a + micro.b) / std::sqrt(micro.discriminant()));
}

namespace detail {

inline SolutionBasis free_basis(const Microstate& micro, double E, double hbar, double mass) {
  return rescale_for_microstate(build_basis(Potential(Free{}), E, hbar, mass, 0.0), micro);
}

}  // namespace detail

/// Mean of Q for a free particle over one period pi hbar/sqrt(2mE) starting at x0, by the
/// periodic trapezoid rule.
inline double period_average_q(const Microstate& micro, double E, double hbar, double mass, double x0 = 0.0,
                               int samples = 4096) {
  if (!(E > 0.0)) throw InvalidArgument("period average requires E > 0");
  const SolutionBasis basis = detail::free_basis(micro, E, hbar, mass);
  const double period = std::numbers::pi * hbar / std::sqrt(2.0 * mass * E);
  double sum = 0.0;
  for (int j = 0; j < samples; ++j) sum += quantum_potential(basis, micro, x0 + period * j / samples).Q;
  return sum / samples;
}

/// Mean of Q for a free particle over a fixed window [lo, hi], by adaptive quadrature.
inline double window_average_q(const Microstate& micro, double E, double hbar, double mass, double lo, double hi) {
  if (!(E > 0.0)) throw InvalidArgument("window average requires E > 0");
  if (!(lo < hi)) throw InvalidArgument("window must satisfy lo < hi");
  const SolutionBasis basis = detail::free_basis(micro, E, hbar, mass);
  auto f = [&](double x) { return quantum_potential(basis, micro, x).Q; };
  // One panel per half period keeps every panel smooth.
  const double half = 0.5 * std::numbers::pi * hbar / std::sqrt(2.0 * mass * E);
  const int panels = std::max(1, static_cast<int>(std::ceil((hi - lo) / half)));
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + (hi - lo) * p / panels;
    const double b = lo + (hi - lo) * (p + 1) / panels;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-12);
  }
  return total / (hi - lo);
}

namespace detail {

// W~/hbar as a function of phi = W/hbar: the unwrapped argument of
// cos(phi) + i rho sin(phi) = alpha e^{i phi} + beta e^{-i phi}, alpha + beta = 1.
inline double ansatz_phase(std::complex<double> A, std::complex<double> B, double phi) {
  const std::complex<double> alpha = A / (A + B);
  const std::complex<double> beta = B / (A + B);
  const double na = std::norm(alpha);
  const double nb = std::norm(beta);
  if (na == nb) throw InvalidArgument("ansatz transform requires |A| != |B|");
  // Factor out the dominant rotation; the remainder stays in a disk that excludes 0 and
  // the negative real axis, so its principal argument is continuous and zero at phi = 0.
  const double sigma = na > nb ? 1.0 : -1.0;
  const std::complex<double> dom = na > nb ? alpha : beta;
  const std::complex<double> sub = na > nb ? beta : alpha;
  return sigma * phi + std::arg(dom + sub * std::exp(std::complex<double>(0.0, -2.0 * sigma * phi)));
}

}  // namespace detail

/// W~ = hbar * unwrapped arctan(((A-B)/(A+B)) tan(W/hbar)): the phase of
/// A exp(iW/hbar) + B exp(-iW/hbar) measured from W = 0.
inline double ansatz_transform(std::complex<double> A, std::complex<double> B, double W, double hbar) {
  if (!(hbar > 0.0)) throw InvalidArgument("hbar must be positive");
  if (std::abs(A + B) == 0.0) throw InvalidArgument("ansatz transform requires A + B != 0");
  return hbar * detail::ansatz_phase(A, B, W / hbar);
}

/// W~ and its first three derivatives for a real ratio rho = (A-B)/(A+B), from those of W.
inline ActionRecord ansatz_transform(double rho, const ActionRecord& r, double hbar) {
  if (!(rho != 0.0) || std::abs(rho) == 1.0 || !std::isfinite(rho)) {
    throw InvalidArgument("ansatz ratio must be finite, nonzero and of magnitude != 1");
  }
  const double phi = r.W / hbar;
  const double s = std::sin(phi);
  const double c = std::cos(phi);
  const double d = rho * rho - 1.0;
  const double h = 1.0 + d * s * s;
  const double h1 = d * 2.0 * s * c;
  const double h2 = 2.0 * d * (c * c - s * s);
  const double g1 = rho / h;
  const double g2 = -rho * h1 / (h * h);
  const double g3 = -rho * (h2 / (h * h) - 2.0 * h1 * h1 / (h * h * h));
  ActionRecord out;
  out.W = ansatz_transform(std::complex<double>(1.0 + rho, 0.0), std::complex<double>(1.0 - rho, 0.0), r.W, hbar);
  out.W1 = g1 * r.W1;
  out.W2 = g2 * r.W1 * r.W1 / hbar + g1 * r.W2;
  out.W3 = g3 * r.W1 * r.W1 * r.W1 / (hbar * hbar) + 3.0 * g2 * r.W1 * r.W2 / hbar + g1 * r.W3;
  return out;
}

/// Product of cos or sin factors along each axis: f(x,y,z) = prod_i trig_i(k_i x_i).
struct SeparableWave {
  std::array<double, 3> k{1.0, 1.0, 1.0};
  std::array<bool, 3> sine{false, false, false};

  double k2() const { return k[0] * k[0] + k[1] * k[1] + k[2] * k[2]; }

  /// Energy of this free solution: hbar^2 |k|^2 / 2m.
  double energy(double hbar = 1.0, double mass = 1.0) const { return hbar * hbar * k2() / (2.0 * mass); }

  double value(const std::array<double, 3>& p) const {
    double v = 1.0;
    for (int i = 0; i < 3; ++i) v *= sine[i] ? std::sin(k[i] * p[i]) : std::cos(k[i] * p[i]);
    return v;
  }

  std::array<double, 3> gradient(const std::array<double, 3>& p) const {
    std::array<double, 3> f{};
    std::array<double, 3> df{};
    for (int i = 0; i < 3; ++i) {
      f[i] = sine[i] ? std::sin(k[i] * p[i]) : std::cos(k[i] * p[i]);
      df[i] = sine[i] ? k[i] * std::cos(k[i] * p[i]) : -k[i] * std::sin(k[i] * p[i]);
    }
    return {df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]};
  }
};

/// n^3 points origin + spacing * (i, j, l).
struct Lattice3 {
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  double spacing = 0.05;
  int n = 21;
};

struct DivergenceReport {
  double max_divergence = 0.0;
  double field_scale = 0.0;  // max |u grad v| over the lattice
};

/// Central-difference divergence of F = u grad v - v grad u at interior lattice points.
inline DivergenceReport divergence_check(const SeparableWave& u, const SeparableWave& v, const Lattice3& lat) {
  if (!(lat.spacing > 0.0) || lat.n < 3) throw InvalidArgument("lattice needs spacing > 0 and at least 3 points per axis");
  const double ku = u.k2();
  const double kv = v.k2();
  if (std::abs(ku - kv) > 1e-12 * std::max(ku, kv)) {
    throw InvalidArgument("u and v must share one energy: |k_u|^2 = " + std::to_string(ku) +
                          ", |k_v|^2 = " + std::to_string(kv));
  }
  const int n = lat.n;
  const double h = lat.spacing;
  auto point = [&](int i, int j, int l) {
    return std::array<double, 3>{lat.origin[0] + h * i, lat.origin[1] + h * j, lat.origin[2] + h * l};
  };
  auto field = [&](const std::array<double, 3>& p) {
    const double uv = u.value(p);
    const double vv = v.value(p);
    const auto gu = u.gradient(p);
    const auto gv = v.gradient(p);
    return std::array<double, 3>{uv * gv[0] - vv * gu[0], uv * gv[1] - vv * gu[1], uv * gv[2] - vv * gu[2]};
  };
  // One slab of constant i per task.
  std::vector<DivergenceReport> slabs(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t si) {
    const int i = static_cast<int>(si);
    DivergenceReport& out = slabs[si];
    for (int j = 0; j < n; ++j) {
      for (int l = 0; l < n; ++l) {
        const auto p = point(i, j, l);
        const auto gv = v.gradient(p);
        out.field_scale = std::max(out.field_scale, std::abs(u.value(p)) * std::hypot(gv[0], gv[1], gv[2]));
        if (i == 0 || j == 0 || l == 0 || i == n - 1 || j == n - 1 || l == n - 1) continue;
        const double div = (field(point(i + 1, j, l))[0] - field(point(i - 1, j, l))[0] +
                            field(point(i, j + 1, l))[1] - field(point(i, j - 1, l))[1] +
                            field(point(i, j, l + 1))[2] - field(point(i, j, l - 1))[2]) /
                           (2.0 * h);
        out.max_divergence = std::max(out.max_divergence, std::abs(div));
      }
    }
  });
  DivergenceReport total;
  for (const auto& s : slabs) {
    total.max_divergence = std::max(total.max_divergence, s.max_divergence);
    total.field_scale = std::max(total.field_scale, s.field_scale);
  }
  return total;
}

}  // namespace qtraj
