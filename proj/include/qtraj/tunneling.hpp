#pragma once

// Sub-barrier running wave that crosses a rectangular barrier with no reflected part:
// three-region reduced action, the synthesized wave function, its decomposition into the
// customary hyperbolic and plane-wave pieces, and the reverse mapping.

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qtraj/errors.hpp"
#include "qtraj/potential.hpp"
#include "qtraj/qshje.hpp"

namespace qtraj {

using cplx = std::complex<double>;

/// Rectangular barrier of height U on |x| < q with a sub-barrier energy 0 < E < U.
struct BarrierScenario {
  double U = 2.0;
  double q = 1.0;
  double E = 1.0;
  double hbar = 1.0;
  double mass = 1.0;

  double k() const { return std::sqrt(2.0 * mass * E) / hbar; }
  double kappa() const { return std::sqrt(2.0 * mass * (U - E)) / hbar; }
  Potential potential() const { return Potential(RectangularBarrier{U, q}); }

  void validate() const {
    if (!(q > 0.0) || !std::isfinite(q)) throw InvalidArgument("barrier half-width q must be positive");
    if (!(hbar > 0.0) || !(mass > 0.0)) throw InvalidArgument("hbar and mass must be positive");
    if (!(E > 0.0 && E < U) || !std::isfinite(U)) throw InvalidArgument("sub-barrier energy required (0 < E < U)");
  }
};

struct ComplexWaveSample {
  double x = 0.0;
  double re = 0.0;
  double im = 0.0;
  cplx value() const { return {re, im}; }
};

namespace detail {

inline double wrap_pi(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

// Quantities shared by the region formulas.
struct BarrierConstants {
  double k, kappa, r, C, s1, s2;
};

inline BarrierConstants barrier_constants(const BarrierScenario& s) {
  s.validate();
  const double k = s.k();
  const double kappa = s.kappa();
  const double r = k / kappa;
  const double sh = std::sinh(-2.0 * kappa * s.q);
  return {k, kappa, r, std::cosh(-2.0 * kappa * s.q), r * sh, sh / r};
}

// x > q: unmodulated transmitted wave.
inline ActionRecord transmitted_record(const BarrierScenario& s, double x) {
  const double k = s.k();
  return {s.hbar * k * (x - s.q), s.hbar * k, 0.0, 0.0};
}

// |x| <= q: phase of cosh(kappa xi) + i (k/kappa) sinh(kappa xi), xi = x - q.
inline ActionRecord interior_record(const BarrierScenario& s, double x) {
  const BarrierConstants c = barrier_constants(s);
  const double xi = x - s.q;
  const double ch = std::cosh(c.kappa * xi);
  const double sh = std::sinh(c.kappa * xi);
  const double G = ch * ch + c.r * c.r * sh * sh;
  const double G1 = c.kappa * (1.0 + c.r * c.r) * std::sinh(2.0 * c.kappa * xi);
  const double G2 = 2.0 * c.kappa * c.kappa * (1.0 + c.r * c.r) * std::cosh(2.0 * c.kappa * xi);
  const double hk = s.hbar * c.k;
  return {s.hbar * std::atan(c.r * std::tanh(c.kappa * xi)), hk / G, -hk * G1 / (G * G),
          -hk * (G2 / (G * G) - 2.0 * G1 * G1 / (G * G * G))};
}

// x < -q: the interior solution continued as free waves, y = k (x + q).
struct OuterParts {
  double N, D, A, Ay, Ayy, phase;
};

inline OuterParts outer_parts(const BarrierScenario& s, double x) {
  const BarrierConstants c = barrier_constants(s);
  const double y = c.k * (x + s.q);
  const double cy = std::cos(y);
  const double sy = std::sin(y);
  OuterParts o;
  o.N = c.s1 * cy + c.C * sy;
  o.D = c.C * cy + c.s2 * sy;
  // N^2 + D^2 = alpha + rho cos(2y - chi). Its minimum alpha - rho equals 1/(alpha + rho)
  // because det [[s1, C], [C, s2]] = -1; writing A around that minimum keeps A, A_y and
  // A_yy accurate where N and D nearly cancel.
  const double alpha = 0.5 * (c.s1 * c.s1 + c.s2 * c.s2) + c.C * c.C;
  const double d = 0.5 * (c.s1 * c.s1 - c.s2 * c.s2);
  const double e = c.C * (c.s1 + c.s2);
  const double rho = std::hypot(d, e);
  const double u = y - 0.5 * std::atan2(e, d);
  const double cu = std::cos(u);
  const double su = std::sin(u);
  o.A = 1.0 / (alpha + rho) + 2.0 * rho * cu * cu;
  o.Ay = -4.0 * rho * su * cu;
  o.Ayy = -4.0 * rho * (cu * cu - su * su);
  // (cos y, sin y) -> (D, N) has positive eigenvalues, so the two angles never differ by pi.
  o.phase = y + wrap_pi(std::atan2(o.N, o.D) - y);
  return o;
}

inline ActionRecord outer_record(const BarrierScenario& s, double x) {
  const OuterParts o = outer_parts(s, x);
  const double k = s.k();
  const double hk = s.hbar * k;
  const double Ax = k * o.Ay;
  const double Axx = k * k * o.Ayy;
  return {s.hbar * o.phase, hk / o.A, -hk * Ax / (o.A * o.A),
          -hk * (Axx / (o.A * o.A) - 2.0 * Ax * Ax / (o.A * o.A * o.A))};
}

struct WaveDerivs {
  cplx psi, dpsi, d2psi;
};

// psi = exp(iW/hbar)/sqrt(W') and its first two derivatives from (W, W', W'', W''').
inline WaveDerivs wave_from_record(const ActionRecord& r, double hbar) {
  const cplx i(0.0, 1.0);
  const cplx psi = std::exp(i * (r.W / hbar)) / std::sqrt(r.W1);
  const cplx g = i * r.W1 / hbar - r.W2 / (2.0 * r.W1);
  const cplx g1 = i * r.W2 / hbar - r.W3 / (2.0 * r.W1) + r.W2 * r.W2 / (2.0 * r.W1 * r.W1);
  return {psi, psi * g, psi * (g * g + g1)};
}

}  // namespace detail

/// W, W', W'', W''' of the certain-transmission wave. The interior owns x = +-q.
inline ActionRecord barrier_action_record(const BarrierScenario& s, double x) {
  s.validate();
  if (x > s.q) return detail::transmitted_record(s, x);
  if (x >= -s.q) return detail::interior_record(s, x);
  return detail::outer_record(s, x);
}

/// Continuous, strictly increasing reduced action; zero at x = q.
inline double barrier_reduced_action(const BarrierScenario& s, double x) { return barrier_action_record(s, x).W; }

inline ComplexWaveSample barrier_wave(const BarrierScenario& s, double x) {
  const cplx psi = detail::wave_from_record(barrier_action_record(s, x), s.hbar).psi;
  return {x, psi.real(), psi.imag()};
}

/// psi, psi', psi'' at x, all analytic.
inline detail::WaveDerivs barrier_wave_derivatives(const BarrierScenario& s, double x) {
  return detail::wave_from_record(barrier_action_record(s, x), s.hbar);
}

/// |-hbar^2 psi''/2m + (V - E) psi| / |psi|, in energy units.
inline double schrodinger_residual(const BarrierScenario& s, double x) {
  const auto w = barrier_wave_derivatives(s, x);
  const double V = s.potential().evaluate_inner(x, s.mass);
  return std::abs(-s.hbar * s.hbar / (2.0 * s.mass) * w.d2psi + (V - s.E) * w.psi) / std::abs(w.psi);
}

/// (hbar/m) Im(conj(psi) psi').
inline double probability_current(const BarrierScenario& s, double x) {
  const auto w = barrier_wave_derivatives(s, x);
  return s.hbar / s.mass * (std::conj(w.psi) * w.dpsi).imag();
}

/// Two-sided differences at x = -q (index 0) and x = +q (index 1).
struct InterfaceJumps {
  std::array<double, 2> W{};
  std::array<double, 2> W1{};
  std::array<double, 2> W2{};
  std::array<double, 2> log_derivative{};

  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < 2; ++i) m = std::max({m, std::abs(W[i]), std::abs(W1[i]), std::abs(W2[i]), log_derivative[i]});
    return m;
  }
};

inline InterfaceJumps interface_continuity(const BarrierScenario& s) {
  s.validate();
  const std::array<std::pair<ActionRecord, ActionRecord>, 2> sides{
      std::pair{detail::outer_record(s, -s.q), detail::interior_record(s, -s.q)},
      std::pair{detail::interior_record(s, s.q), detail::transmitted_record(s, s.q)}};
  InterfaceJumps j;
  for (int i = 0; i < 2; ++i) {
    const auto& [l, r] = sides[i];
    j.W[i] = r.W - l.W;
    j.W1[i] = r.W1 - l.W1;
    j.W2[i] = r.W2 - l.W2;
    const auto wl = detail::wave_from_record(l, s.hbar);
    const auto wr = detail::wave_from_record(r, s.hbar);
    j.log_derivative[i] = std::abs(wr.dpsi / wr.psi - wl.dpsi / wl.psi);
  }
  return j;
}

/// (max - min)/|mean| of the current over a grid.
inline double current_variation(const BarrierScenario& s, const std::vector<double>& xs) {
  double lo = INFINITY;
  double hi = -INFINITY;
  double sum = 0.0;
  for (double x : xs) {
    const double j = probability_current(s, x);
    lo = std::min(lo, j);
    hi = std::max(hi, j);
    sum += j;
  }
  return (hi - lo) / std::abs(sum / static_cast<double>(xs.size()));
}

/// Incident and reflected amplitudes (units of (hbar k)^(-1/2)) of the wave left of the
/// barrier: psi = I exp(ik(x+q)) + R exp(-ik(x+q)).
struct PlaneWaveCoefficients {
  cplx incident;
  cplx reflected;
};

/// From C1 matching to the interior wave at x = -q.
inline PlaneWaveCoefficients matched_coefficients(const BarrierScenario& s) {
  const auto w = detail::wave_from_record(detail::interior_record(s, -s.q), s.hbar);
  const cplx ik(0.0, s.k());
  const double norm = std::sqrt(s.hbar * s.k());
  return {0.5 * (w.psi + w.dpsi / ik) * norm, 0.5 * (w.psi - w.dpsi / ik) * norm};
}

/// Closed forms: I = cosh(-2 kappa q) + (i/2)(k/kappa - kappa/k) sinh(-2 kappa q),
/// R = (i/2)(k/kappa + kappa/k) sinh(-2 kappa q).
inline PlaneWaveCoefficients closed_form_coefficients(const BarrierScenario& s) {
  const auto c = detail::barrier_constants(s);
  const double sh = std::sinh(-2.0 * c.kappa * s.q);
  return {cplx(c.C, 0.5 * (c.r - 1.0 / c.r) * sh), cplx(0.0, 0.5 * (c.r + 1.0 / c.r) * sh)};
}

/// Pieces of the wave: hyperbolic parts of the interior form and plane-wave parts of the
/// exterior form, each evaluated at x.
struct ComponentResolution {
  cplx cosh_part;
  cplx sinh_part;
  cplx incident;
  cplx reflected;
};

inline ComponentResolution resolve_components(const BarrierScenario& s, double x) {
  const auto c = detail::barrier_constants(s);
  const double amp = 1.0 / std::sqrt(s.hbar * c.k);
  const double xi = x - s.q;
  const auto pw = matched_coefficients(s);
  const cplx e = std::exp(cplx(0.0, c.k * (x + s.q)));
  return {amp * std::cosh(c.kappa * xi), cplx(0.0, amp * c.r * std::sinh(c.kappa * xi)), amp * pw.incident * e,
          amp * pw.reflected / e};
}

/// Reflection and transmission probabilities of the ordinary scattering problem
/// e^{ikx} + R e^{-ikx} | F e^{kappa x} + G e^{-kappa x} | T e^{ikx}, solved as a 4x4 system.
struct ScatteringProbabilities {
  double R2;
  double T2;
};

inline ScatteringProbabilities scattering_probabilities(const BarrierScenario& s) {
  s.validate();
  const double k = s.k();
  const double K = s.kappa();
  const double q = s.q;
  const cplx i(0.0, 1.0);
  auto ex = [&](cplx z) { return std::exp(z); };
  // Unknowns (R, F, G, T).
  Eigen::Matrix4cd M;
  Eigen::Vector4cd rhs;
  M << ex(i * k * q), -ex(-K * q), -ex(K * q), 0.0,                                      // psi at -q
      -i * k * ex(i * k * q), -K * ex(-K * q), K * ex(K * q), 0.0,                        // psi' at -q
      0.0, ex(K * q), ex(-K * q), -ex(i * k * q),                                         // psi at +q
      0.0, K * ex(K * q), -K * ex(-K * q), -i * k * ex(i * k * q);                        // psi' at +q
  rhs << -ex(-i * k * q), -i * k * ex(-i * k * q), 0.0, 0.0;
  const Eigen::Vector4cd sol = M.fullPivLu().solve(rhs);
  return {std::norm(sol(0)), std::norm(sol(3))};
}

/// [1 + (2 k kappa/(k^2 + kappa^2))^2 / sinh^2(2 kappa q)]^(-1).
inline double textbook_reflection(const BarrierScenario& s) {
  const double k = s.k();
  const double K = s.kappa();
  const double f = 2.0 * k * K / (k * k + K * K);
  const double sh = std::sinh(2.0 * K * s.q);
  return 1.0 / (1.0 + f * f / (sh * sh));
}

/// zeta_+ is the wave left of the barrier and zeta_- its complex conjugate. The customary
/// plane waves are recovered as combinations of the two.
struct InverseMapping {
  cplx zeta_plus;
  cplx zeta_minus;
  cplx dzeta_plus;
  cplx dzeta_minus;
  cplx recon_incident;
  cplx recon_reflected;
};

/// incident = p[0] zeta_+ + p[1] zeta_-, reflected = p[2] zeta_+ + p[3] zeta_-.
struct MappingCoefficients {
  std::array<cplx, 4> p;
};

namespace detail {

inline std::pair<cplx, cplx> zetas(const BarrierScenario& s, double x) {
  const OuterParts o = outer_parts(s, x);
  const double amp = 1.0 / std::sqrt(s.hbar * s.k());
  return {amp * cplx(o.D, o.N), amp * cplx(o.D, -o.N)};
}

inline std::pair<cplx, cplx> plane_waves(const BarrierScenario& s, double x) {
  const auto pw = matched_coefficients(s);
  const double amp = 1.0 / std::sqrt(s.hbar * s.k());
  const cplx e = std::exp(cplx(0.0, s.k() * (x + s.q)));
  return {amp * pw.incident * e, amp * pw.reflected / e};
}

}  // namespace detail

/// Solved from the values at two generic points left of the barrier.
inline MappingCoefficients mapping_coefficients(const BarrierScenario& s) {
  s.validate();
  const double lambda = 2.0 * std::numbers::pi / s.k();
  const std::array<double, 2> xs{-s.q - 0.3183 * lambda, -s.q - 0.7071 * lambda};
  Eigen::Matrix2cd Z;
  Eigen::Matrix2cd P;
  for (int r = 0; r < 2; ++r) {
    const auto [zp, zm] = detail::zetas(s, xs[r]);
    const auto [inc, ref] = detail::plane_waves(s, xs[r]);
    Z(r, 0) = zp;
    Z(r, 1) = zm;
    P(r, 0) = inc;
    P(r, 1) = ref;
  }
  const auto lu = Z.fullPivLu();
  if (lu.rank() < 2 || std::abs(Z.determinant()) < 1e-12 * Z.cwiseAbs2().sum()) {
    throw NumericalError("zeta_+ and zeta_- are not independent at the sample points");
  }
  const Eigen::Matrix2cd C = lu.solve(P);
  return {{C(0, 0), C(1, 0), C(0, 1), C(1, 1)}};
}

/// Closed forms of the same coefficients: incident = |I|^2 zeta_+ - I R zeta_-,
/// reflected = -|R|^2 zeta_+ + I R zeta_-.
inline MappingCoefficients closed_form_mapping(const BarrierScenario& s) {
  const auto c = matched_coefficients(s);
  const cplx IR = c.incident * c.reflected;
  return {{std::norm(c.incident), -IR, -std::norm(c.reflected), IR}};
}

inline InverseMapping inverse_mapping(const BarrierScenario& s, double x, const MappingCoefficients& m) {
  if (!(x < -s.q)) throw DomainError("inverse mapping requires x < -q");
  const auto [zp, zm] = detail::zetas(s, x);
  const auto w = barrier_wave_derivatives(s, x);
  return {zp, zm, w.dpsi, std::conj(w.dpsi), m.p[0] * zp + m.p[1] * zm, m.p[2] * zp + m.p[3] * zm};
}

inline InverseMapping inverse_mapping(const BarrierScenario& s, double x) {
  return inverse_mapping(s, x, mapping_coefficients(s));
}

/// Plane waves (incident, reflected) -> (zeta_+, zeta_-).
inline std::pair<cplx, cplx> forward_mapping(const BarrierScenario& s, cplx incident, cplx reflected) {
  const auto c = matched_coefficients(s);
  return {incident + reflected, std::conj(c.reflected) / c.incident * incident +
                                    std::conj(c.incident) / c.reflected * reflected};
}

/// Plane waves at x (incident, reflected), from the matched coefficients.
inline std::pair<cplx, cplx> plane_waves(const BarrierScenario& s, double x) { return detail::plane_waves(s, x); }

}  // namespace qtraj
