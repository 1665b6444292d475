#pragma once

// Independent pairs (phi, theta) of stationary Schroedinger solutions at energy E.

#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtraj/errors.hpp"
#include "qtraj/microstate.hpp"
#include "qtraj/potential.hpp"
#include "qtraj/taylor.hpp"

namespace qtraj {

/// Values of phi and theta at a point. Second and third derivatives come from the
/// Schroedinger equation, never from differencing.
struct BasisSample {
  double phi = 0.0;
  double dphi = 0.0;
  double theta = 0.0;
  double dtheta = 0.0;
  double d2phi = 0.0;
  double d2theta = 0.0;
  double d3phi = 0.0;
  double d3theta = 0.0;
};

namespace detail {

struct RawState {
  double phi;
  double dphi;
  double theta;
  double dtheta;
};

class BasisKernel {
 public:
  virtual ~BasisKernel() = default;
  virtual RawState eval(double x) const = 0;
};

/// Closed-form solutions for piecewise-constant potentials: trigonometric in allowed
/// regions, hyperbolic in forbidden ones, C1-matched at breakpoints.
class PiecewiseKernel final : public BasisKernel {
 public:
  PiecewiseKernel(const Potential& pot, double E, double hbar, double mass, double x0, RawState init)
      : breaks_(pot.breakpoints()) {
    const std::size_t nreg = breaks_.size() + 1;
    regions_.resize(nreg);
    for (std::size_t r = 0; r < nreg; ++r) {
      Region& reg = regions_[r];
      reg.lo = r == 0 ? -INFINITY : breaks_[r - 1];
      reg.hi = r == nreg - 1 ? INFINITY : breaks_[r];
      double probe = 0.0;
      if (std::isinf(reg.lo) && std::isinf(reg.hi)) {
        probe = 0.0;
      } else if (std::isinf(reg.lo)) {
        probe = reg.hi - 1.0;
      } else if (std::isinf(reg.hi)) {
        probe = reg.lo + 1.0;
      } else {
        probe = 0.5 * (reg.lo + reg.hi);
      }
      reg.usable = pot.in_domain(probe);
      if (reg.usable) reg.lambda = 2.0 * mass * (pot.evaluate_inner(probe, mass) - E) / (hbar * hbar);
    }
    const std::size_t r0 = region_of(x0);
    regions_[r0].xref = x0;
    regions_[r0].s = init;
    regions_[r0].ready = true;
    for (std::size_t r = r0 + 1; r < nreg; ++r) {
      if (!regions_[r].usable) break;
      const Region& prev = regions_[r - 1];
      regions_[r].xref = breaks_[r - 1];
      regions_[r].s = propagate(prev, breaks_[r - 1] - prev.xref);
      regions_[r].ready = true;
    }
    for (std::size_t r = r0; r-- > 0;) {
      if (!regions_[r].usable) break;
      const Region& next = regions_[r + 1];
      regions_[r].xref = breaks_[r];
      regions_[r].s = propagate(next, breaks_[r] - next.xref);
      regions_[r].ready = true;
    }
  }

  RawState eval(double x) const override {
    const Region& reg = regions_[region_of(x)];
    if (!reg.ready) throw DomainError("basis evaluated outside the potential's domain, x = " + std::to_string(x));
    return propagate(reg, x - reg.xref);
  }

 private:
  struct Region {
    double lo = 0.0;
    double hi = 0.0;
    double lambda = 0.0;
    double xref = 0.0;
    RawState s{};
    bool usable = false;
    bool ready = false;
  };

  // Breakpoints belong to the region on the side of smaller |x|.
  std::size_t region_of(double x) const {
    std::size_t r = 0;
    for (double b : breaks_) {
      if (b < x || (b == x && b < 0.0)) ++r;
    }
    return r;
  }

  static RawState propagate(const Region& reg, double d) {
    double c = 1.0;
    double s_over = d;  // sin(kd)/k or sinh(kd)/k
    double k_s = 0.0;   // derivative of c with respect to d
    if (reg.lambda < 0.0) {
      const double k = std::sqrt(-reg.lambda);
      c = std::cos(k * d);
      s_over = std::sin(k * d) / k;
      k_s = -k * std::sin(k * d);
    } else if (reg.lambda > 0.0) {
      const double k = std::sqrt(reg.lambda);
      c = std::cosh(k * d);
      s_over = std::sinh(k * d) / k;
      k_s = k * std::sinh(k * d);
    }
    const RawState& s = reg.s;
    return {s.phi * c + s.dphi * s_over, s.phi * k_s + s.dphi * c, s.theta * c + s.dtheta * s_over,
            s.theta * k_s + s.dtheta * c};
  }

  std::vector<double> breaks_;
  std::vector<Region> regions_;
};

/// Both solutions integrated from the anchor (polynomial potentials).
class IntegratedKernel final : public BasisKernel {
 public:
  explicit IntegratedKernel(TaylorTable table) : table_(std::move(table)) {}
  RawState eval(double x) const override {
    const auto s = table_.eval(x);
    return {s.y[0], s.dy[0], s.y[1], s.dy[1]};
  }

 private:
  TaylorTable table_;
};

/// Oscillator eigenfunction with n nodes, unit-normalized in x.
inline std::pair<double, double> hermite_function(int n, double x, double mass, double omega, double hbar) {
  const double alpha = std::sqrt(mass * omega / hbar);
  const double xi = alpha * x;
  // psi_k(xi) by the stable three-term recurrence.
  double prev = 0.0;
  double cur = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * xi * xi);
  for (int k = 0; k < n; ++k) {
    const double next = std::sqrt(2.0 / (k + 1.0)) * xi * cur - std::sqrt(static_cast<double>(k) / (k + 1.0)) * prev;
    prev = cur;
    cur = next;
  }
  // psi_n' = sqrt(n/2) psi_{n-1} - sqrt((n+1)/2) psi_{n+1}
  const double nextp = std::sqrt(2.0 / (n + 1.0)) * xi * cur - std::sqrt(static_cast<double>(n) / (n + 1.0)) * prev;
  const double dxi = std::sqrt(n / 2.0) * prev - std::sqrt((n + 1.0) / 2.0) * nextp;
  const double norm = std::sqrt(alpha);
  return {norm * cur, norm * alpha * dxi};
}

/// Closed-form bound oscillator state for phi, integrated second solution for theta.
class HermiteKernel final : public BasisKernel {
 public:
  HermiteKernel(int n, double mass, double omega, double hbar, TaylorTable theta_table)
      : n_(n), mass_(mass), omega_(omega), hbar_(hbar), table_(std::move(theta_table)) {}

  RawState eval(double x) const override {
    const auto [phi, dphi] = hermite_function(n_, x, mass_, omega_, hbar_);
    const auto s = table_.eval(x);
    return {phi, dphi, s.y[1], s.dy[1]};
  }

 private:
  int n_;
  double mass_;
  double omega_;
  double hbar_;
  TaylorTable table_;
};

inline void require_physical(double E, double hbar, double mass) {
  if (!std::isfinite(E)) throw InvalidArgument("energy must be finite");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidArgument("hbar must be positive and finite");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidArgument("mass must be positive and finite");
}

/// Half-width of the tabulated range for oscillator bases, in oscillator lengths.
inline constexpr double kOscillatorRange = 25.0;

inline TaylorTable oscillator_table(const HarmonicOscillator& ho, double E, double hbar, double mass, double x0,
                                    TaylorTable::State init) {
  const double len = std::sqrt(hbar / (mass * ho.omega));
  const double reach = kOscillatorRange * len;
  const double lo = std::min(-reach, x0);
  const double hi = std::max(reach, x0);
  // lambda(x) = (m omega / hbar)^2 x^2 - 2 m E / hbar^2
  std::vector<double> poly{-2.0 * mass * E / (hbar * hbar), 0.0, (mass * ho.omega / hbar) * (mass * ho.omega / hbar)};
  return TaylorTable(std::move(poly), x0, init, lo, hi);
}

}  // namespace detail

/// Normalized independent pair (phi, theta) at energy E. Immutable; copies share the
/// underlying solution data. The exposed pair is M * (phi_raw, theta_raw) for a 2x2
/// mixing matrix M, which carries microstate rescaling and basis changes.
class SolutionBasis {
 public:
  using Matrix = std::array<double, 4>;  // row-major

  SolutionBasis(Potential pot, double E, double hbar, double mass, double x0, double raw_wronskian,
                std::shared_ptr<const detail::BasisKernel> kernel)
      : pot_(std::move(pot)), E_(E), hbar_(hbar), mass_(mass), x0_(x0), raw_w_(raw_wronskian),
        kernel_(std::move(kernel)) {}

  const Potential& potential() const { return pot_; }
  double energy() const { return E_; }
  double hbar() const { return hbar_; }
  double mass() const { return mass_; }
  double anchor() const { return x0_; }
  double raw_wronskian() const { return raw_w_; }
  const Matrix& mixing() const { return mix_; }

  /// Wronskian implied by construction: det(M) times the raw Wronskian.
  double nominal_wronskian() const { return (mix_[0] * mix_[3] - mix_[1] * mix_[2]) * raw_w_; }

  /// 2m (V - E) / hbar^2 with breakpoints taken from the inner side.
  double lambda(double x) const { return 2.0 * mass_ * (pot_.evaluate_inner(x, mass_) - E_) / (hbar_ * hbar_); }
  double dlambda(double x) const { return 2.0 * mass_ * pot_.derivative(x, mass_) / (hbar_ * hbar_); }

  BasisSample eval(double x, int order = 3) const {
    if (order < 0 || order > 3) throw InvalidArgument("derivative order must be in 0..3");
    if (!pot_.in_domain(x)) throw DomainError("basis evaluated outside the potential's domain, x = " + std::to_string(x));
    const detail::RawState r = kernel_->eval(x);
    BasisSample s;
    s.phi = mix_[0] * r.phi + mix_[1] * r.theta;
    s.dphi = mix_[0] * r.dphi + mix_[1] * r.dtheta;
    s.theta = mix_[2] * r.phi + mix_[3] * r.theta;
    s.dtheta = mix_[2] * r.dphi + mix_[3] * r.dtheta;
    if (order >= 2) {
      const double lam = lambda(x);
      s.d2phi = lam * s.phi;
      s.d2theta = lam * s.theta;
      if (order >= 3) {
        const double dlam = dlambda(x);
        s.d3phi = lam * s.dphi + dlam * s.phi;
        s.d3theta = lam * s.dtheta + dlam * s.theta;
      }
    }
    return s;
  }

  /// Same solutions multiplied by a common factor.
  SolutionBasis scaled(double factor) const { return mixed({factor, 0.0, 0.0, factor}); }

  /// New pair (phi', theta') = M * (phi, theta).
  SolutionBasis mixed(const Matrix& m) const {
    SolutionBasis out = *this;
    out.mix_ = {m[0] * mix_[0] + m[1] * mix_[2], m[0] * mix_[1] + m[1] * mix_[3], m[2] * mix_[0] + m[3] * mix_[2],
                m[2] * mix_[1] + m[3] * mix_[3]};
    if (out.nominal_wronskian() == 0.0) throw InvalidArgument("mixed basis is linearly dependent");
    return out;
  }

 private:
  Potential pot_;
  double E_;
  double hbar_;
  double mass_;
  double x0_;
  double raw_w_;
  std::shared_ptr<const detail::BasisKernel> kernel_;
  Matrix mix_{1.0, 0.0, 0.0, 1.0};
};

/// Local wavenumber sqrt(2m|E - V(x0)|)/hbar, or 1 where E = V(x0).
inline double default_anchor_wronskian(const Potential& pot, double E, double hbar, double mass, double x0) {
  const double k = std::sqrt(2.0 * mass * std::abs(E - pot.evaluate_inner(x0, mass))) / hbar;
  return k > 0.0 ? k : 1.0;
}

/// Basis anchored by phi(x0)=1, phi'(x0)=0, theta(x0)=0, theta'(x0)=raw Wronskian.
inline SolutionBasis build_basis(const Potential& pot, double E, double hbar, double mass, double x0,
                                 std::optional<double> raw_wronskian = std::nullopt) {
  detail::require_physical(E, hbar, mass);
  if (!std::isfinite(x0) || !pot.in_domain(x0)) throw DomainError("basis anchor outside the potential's domain");
  const double w = raw_wronskian.value_or(default_anchor_wronskian(pot, E, hbar, mass, x0));
  if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("raw Wronskian must be positive and finite");

  std::shared_ptr<const detail::BasisKernel> kernel;
  if (pot.piecewise_constant()) {
    kernel = std::make_shared<detail::PiecewiseKernel>(pot, E, hbar, mass, x0, detail::RawState{1.0, 0.0, 0.0, w});
  } else {
    const auto& ho = pot.as<HarmonicOscillator>();
    detail::TaylorTable::State init{{1.0, 0.0}, {0.0, w}};
    kernel = std::make_shared<detail::IntegratedKernel>(detail::oscillator_table(ho, E, hbar, mass, x0, init));
  }
  return SolutionBasis(pot, E, hbar, mass, x0, w, std::move(kernel));
}

inline BasisSample eval(const SolutionBasis& basis, double x, int order = 3) { return basis.eval(x, order); }

/// phi theta' - phi' theta at x.
inline double wronskian(const SolutionBasis& basis, double x) {
  const BasisSample s = basis.eval(x, 1);
  return s.phi * s.dtheta - s.dphi * s.theta;
}

/// Common rescaling giving W^2 = 2m / [hbar^2 (ab - c^2/4)].
inline SolutionBasis rescale_for_microstate(const SolutionBasis& basis, const Microstate& micro) {
  micro.require_valid();
  const double target = normalization_target(micro, basis.hbar(), basis.mass());
  const double current = std::abs(basis.nominal_wronskian());
  const double s = std::pow(target, 0.25) / std::sqrt(current);
  return basis.scaled(s);
}

}  // namespace qtraj
