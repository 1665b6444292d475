#pragma once

// Taylor-series integration of psi'' = lambda(x) psi for polynomial lambda.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "qtraj/errors.hpp"

namespace qtraj::detail {

/// Two solutions of psi'' = lambda(x) psi tabulated at adaptive nodes on [lo, hi].
/// Evaluation re-expands the series from the node nearer the start point, so values
/// between nodes carry the same truncation error as the stepping itself.
class TaylorTable {
 public:
  static constexpr int kOrder = 30;

  struct State {
    double y[2];
    double dy[2];
  };

  TaylorTable() = default;

  /// lambda_coeffs[j] multiplies x^j.
  TaylorTable(std::vector<double> lambda_coeffs, double x0, State init, double lo, double hi, double rel_tol = 1e-13)
      : poly_(std::move(lambda_coeffs)), x0_(x0), lo_(lo), hi_(hi), tol_(rel_tol) {
    if (!(lo <= x0 && x0 <= hi)) throw InvalidArgument("Taylor table start point outside range");
    right_.push_back({x0, init});
    left_.push_back({x0, init});
    march(right_, hi, +1.0);
    march(left_, lo, -1.0);
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }

  State eval(double x) const {
    if (!(x >= lo_ && x <= hi_)) {
      throw DomainError("integrated basis evaluated outside tabulated range [" + std::to_string(lo_) + ", " +
                        std::to_string(hi_) + "], x = " + std::to_string(x));
    }
    const auto& nodes = x >= x0_ ? right_ : left_;
    // Node index: the last node not beyond x (in the marching direction).
    std::size_t i = 0;
    if (x >= x0_) {
      auto it = std::upper_bound(nodes.begin(), nodes.end(), x, [](double v, const Node& n) { return v < n.x; });
      i = static_cast<std::size_t>(std::distance(nodes.begin(), it)) - 1;
    } else {
      auto it = std::upper_bound(nodes.begin(), nodes.end(), x, [](double v, const Node& n) { return v > n.x; });
      i = static_cast<std::size_t>(std::distance(nodes.begin(), it)) - 1;
    }
    const Node& n = nodes[i];
    return expand(n, x - n.x);
  }

 private:
  struct Node {
    double x;
    State s;
  };

  // Coefficients of lambda(xc + t) in powers of t.
  std::vector<double> shifted(double xc) const {
    const std::size_t deg = poly_.size();
    std::vector<double> q(deg, 0.0);
    for (std::size_t i = 0; i < deg; ++i) {
      double binom = 1.0;
      // contributions of p_i x^i = p_i (xc + t)^i to t^j: C(i,j) xc^(i-j)
      std::vector<double> xc_pow(i + 1, 1.0);
      for (std::size_t m = 1; m <= i; ++m) xc_pow[m] = xc_pow[m - 1] * xc;
      for (std::size_t j = 0; j <= i; ++j) {
        q[j] += poly_[i] * binom * xc_pow[i - j];
        binom = binom * static_cast<double>(i - j) / static_cast<double>(j + 1);
      }
    }
    return q;
  }

  using Coeffs = std::array<double, kOrder + 1>;

  void coefficients(const Node& n, Coeffs (&c)[2]) const {
    const auto q = shifted(n.x);
    for (int s = 0; s < 2; ++s) {
      c[s].fill(0.0);
      c[s][0] = n.s.y[s];
      c[s][1] = n.s.dy[s];
      for (int m = 0; m + 2 <= kOrder; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < q.size() && static_cast<int>(j) <= m; ++j) acc += q[j] * c[s][m - j];
        c[s][m + 2] = acc / static_cast<double>((m + 2) * (m + 1));
      }
    }
  }

  static State sum(const Coeffs (&c)[2], double t) {
    State out{};
    for (int s = 0; s < 2; ++s) {
      double y = 0.0;
      double dy = 0.0;
      for (int m = kOrder; m >= 1; --m) {
        y = y * t + c[s][m];
        dy = dy * t + static_cast<double>(m) * c[s][m];
      }
      out.y[s] = y * t + c[s][0];
      out.dy[s] = dy;
    }
    return out;
  }

  State expand(const Node& n, double t) const {
    Coeffs c[2];
    coefficients(n, c);
    return sum(c, t);
  }

  // Relative size of the last two series terms at step h.
  static double tail(const Coeffs (&c)[2], double h) {
    double worst = 0.0;
    for (int s = 0; s < 2; ++s) {
      double scale = 0.0;
      double hp = 1.0;
      for (int m = 0; m <= kOrder; ++m) {
        scale = std::max(scale, std::abs(c[s][m]) * hp);
        hp *= std::abs(h);
      }
      const double hn1 = std::pow(std::abs(h), kOrder - 1);
      const double t = std::abs(c[s][kOrder - 1]) * hn1 + std::abs(c[s][kOrder]) * hn1 * std::abs(h);
      if (scale > 0.0) worst = std::max(worst, t / scale);
    }
    return worst;
  }

  void march(std::vector<Node>& nodes, double end, double dir) {
    double h = std::max(std::abs(end - x0_) / 64.0, 1e-6);
    const double h_cap = h;
    while (dir * (end - nodes.back().x) > 0.0) {
      const Node& cur = nodes.back();
      Coeffs c[2];
      coefficients(cur, c);
      double step = std::min(h, dir * (end - cur.x));
      int guard = 0;
      while (tail(c, step) > tol_) {
        step *= 0.5;
        if (step < 1e-12 * std::max(1.0, std::abs(cur.x)) || ++guard > 200) {
          throw NumericalError("Taylor integration step underflow at x = " + std::to_string(cur.x));
        }
      }
      State next = sum(c, dir * step);
      for (int s = 0; s < 2; ++s) {
        if (!std::isfinite(next.y[s]) || !std::isfinite(next.dy[s])) {
          throw NumericalError("Taylor integration overflow at x = " + std::to_string(cur.x));
        }
      }
      const double xn = (dir * (end - cur.x) - step) <= 0.0 ? end : cur.x + dir * step;
      nodes.push_back({xn, next});
      h = std::min(2.0 * step, h_cap);
    }
  }

  std::vector<double> poly_;
  double x0_ = 0.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double tol_ = 1e-13;
  std::vector<Node> right_;
  std::vector<Node> left_;
};

}  // namespace qtraj::detail
