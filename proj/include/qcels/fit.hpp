#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "qcels/sampler.hpp"

namespace qcels {

// min over integers c of |a - b - c * period|, in [0, period/2].
inline double wrapped_distance(double a, double b, double period) {
  if (!(period > 0.0)) throw DomainError("wrapped_distance needs period > 0");
  double r = std::fmod(a - b, period);
  if (r < 0) r += period;
  return std::min(r, period - r);
}

// (1/N) sum_n |Z_n - r e^{-i theta t_n}|^2
inline double loss(const TimeSeriesDataset& ds, cplx r, double theta) {
  if (ds.values.empty()) throw ContractViolation("loss of an empty dataset");
  double acc = 0.0;
  for (std::size_t n = 0; n < ds.values.size(); ++n)
    acc += std::norm(ds.values[n] - r * std::polar(1.0, -theta * ds.times[n]));
  return acc / static_cast<double>(ds.values.size());
}

namespace fit_detail {

// S(theta) = sum_n Z_n e^{i theta t_n} and its first two theta-derivatives.
struct Sums {
  cplx s{0.0, 0.0}, ds{0.0, 0.0}, d2s{0.0, 0.0};
};

inline cplx sum0(const TimeSeriesDataset& ds, double theta) {
  cplx acc{0.0, 0.0};
  for (std::size_t n = 0; n < ds.values.size(); ++n) acc += ds.values[n] * std::polar(1.0, theta * ds.times[n]);
  return acc;
}

inline Sums sums(const TimeSeriesDataset& ds, double theta) {
  Sums out;
  for (std::size_t n = 0; n < ds.values.size(); ++n) {
    const double t = ds.times[n];
    const cplx z = ds.values[n] * std::polar(1.0, theta * t);
    out.s += z;
    out.ds += cplx(0.0, t) * z;
    out.d2s += -t * t * z;
  }
  return out;
}

}  // namespace fit_detail

// r(theta) = (1/N) sum_n e^{i theta t_n} Z_n, the minimizer of loss(., theta).
inline cplx optimal_amplitude(const TimeSeriesDataset& ds, double theta) {
  if (ds.values.empty()) throw ContractViolation("optimal_amplitude of an empty dataset");
  return fit_detail::sum0(ds, theta) / static_cast<double>(ds.values.size());
}

// f(theta) = |sum_n Z_n e^{i theta t_n}|^2. Minimizing the loss over (r, theta)
// is equivalent to maximizing f, since min_r loss = (1/N) sum|Z|^2 - f / N^2.
inline double objective(const TimeSeriesDataset& ds, double theta) { return std::norm(fit_detail::sum0(ds, theta)); }

// Ebar_theta = (1/N) sum_n E_n e^{i theta n tau} for a residual sequence E_n.
inline cplx mean_residual(const std::vector<cplx>& residual, double tau, double theta) {
  if (residual.empty()) throw ContractViolation("mean_residual of an empty sequence");
  cplx acc{0.0, 0.0};
  for (std::size_t n = 0; n < residual.size(); ++n) acc += residual[n] * std::polar(1.0, theta * static_cast<double>(n) * tau);
  return acc / static_cast<double>(residual.size());
}

// Threshold xi of the sup bound on |Ebar_theta| over a window of half-width rho/T.
inline double residual_sup_threshold(int n_points, int shots, double eta, double rho) {
  const double m = std::sqrt(static_cast<double>(n_points) * shots);
  return (4.0 * std::numbers::sqrt2 * std::sqrt(std::log(8.0 * m / eta)) + rho) / m;
}

struct FitOptions {
  std::optional<double> tol;  // default 1e-12 (hi - lo) + 1e-14
  int grid_factor = 1;        // multiplies the base grid size
};

struct FitResult {
  double theta_star = 0.0;
  cplx r_star{0.0, 0.0};
  double objective_value = 0.0;
  double loss_value = 0.0;
  int grid_points_evaluated = 0;
  int refinements = 0;
  bool degenerate = false;
};

inline nlohmann::json to_json(const FitResult& r) {
  return {{"theta_star", r.theta_star},          {"r_star", {r.r_star.real(), r.r_star.imag()}},
          {"objective_value", r.objective_value}, {"loss_value", r.loss_value},
          {"grid_points", r.grid_points_evaluated}, {"refinements", r.refinements},
          {"degenerate", r.degenerate}};
}

namespace fit_detail {

struct Candidate {
  double theta;
  double value;
};

// Prefer the larger objective; values within 1e-13 relative count as a tie and
// the smaller theta wins.
inline bool better(const Candidate& a, const Candidate& b) {
  const double scale = std::max({std::abs(a.value), std::abs(b.value), 1e-300});
  if (std::abs(a.value - b.value) <= 1e-13 * scale) return a.theta < b.theta;
  return a.value > b.value;
}

// Maximizes f on [a, b] (which brackets a local max): golden section down to a
// coarse width, then Newton on f' = 2 Re(conj(S) S') kept inside [a, b].
// Comparing f values alone cannot locate a flat peak much better than
// sqrt(machine eps), hence the derivative polish.
inline Candidate refine(const TimeSeriesDataset& ds, double a, double b, double tol, double floor_x, double ceil_x) {
  constexpr double g = 0.6180339887498949;
  const double a0 = a, b0 = b;
  Candidate best{a, objective(ds, a)};
  auto consider = [&](double x, double v) {
    if (v > best.value) best = {x, v};
  };
  consider(b, objective(ds, b));
  const double coarse = std::max(tol, 1e-7 * (b - a));
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = objective(ds, x1), f2 = objective(ds, x2);
  consider(x1, f1);
  consider(x2, f2);
  while (b - a > coarse) {
    if (f1 >= f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - g * (b - a);
      f1 = objective(ds, x1);
      consider(x1, f1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + g * (b - a);
      f2 = objective(ds, x2);
      consider(x2, f2);
    }
  }
  // On a very flat peak the golden bracket can miss the maximizer, so Newton
  // may roam the whole grid bracket.
  const double lo = std::max(a0, floor_x), hi = std::min(b0, ceil_x);
  double x = best.theta;
  for (int it = 0; it < 60; ++it) {
    const Sums s = sums(ds, x);
    const double d1 = 2.0 * (std::conj(s.s) * s.ds).real();
    const double d2 = 2.0 * (std::norm(s.ds) + (std::conj(s.s) * s.d2s).real());
    if (!(d2 < 0.0)) break;
    const double next = x - d1 / d2;
    if (next < lo || next > hi) break;
    const bool done = std::abs(next - x) <= tol;
    x = next;
    if (done) {
      const double v = objective(ds, x);
      if (v >= best.value * (1 - 1e-12)) return {x, std::max(v, best.value)};
      break;
    }
  }
  return best;
}

}  // namespace fit_detail

// Global maximization of f over [lo, hi]: uniform grid, then local refinement
// from every discrete local maximum.
inline FitResult fit(const TimeSeriesDataset& ds, double lo, double hi, const FitOptions& opt = {}) {
  using fit_detail::Candidate;
  if (ds.values.empty()) throw ContractViolation("fit of an empty dataset");
  if (!(hi >= lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw ContractViolation("fit interval must satisfy lo <= hi");
  if (!(ds.tau > 0.0)) throw ContractViolation("fit needs tau > 0");
  const double period = 2 * kPi / ds.tau;
  if (hi - lo > period * (1 + 1e-12)) {
    std::ostringstream os;
    os << "search interval width " << hi - lo << " exceeds the period 2 pi / tau = " << period;
    throw ContractViolation(os.str());
  }
  const double tol = opt.tol.value_or(1e-12 * (hi - lo) + 1e-14);
  const auto n_total = static_cast<double>(ds.values.size());
  double energy = 0.0;
  for (const auto& z : ds.values) energy += std::norm(z);

  FitResult res;
  if (energy == 0.0) {
    res.theta_star = 0.5 * (lo + hi);
    res.degenerate = true;
    return res;
  }

  const double t_max = n_total * ds.tau;
  const int base = std::max(static_cast<int>(std::ceil((hi - lo) * t_max / kPi)), 8);
  const int points = base * std::max(opt.grid_factor, 1) + 1;
  std::vector<Candidate> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double x = (i == points - 1) ? hi : lo + (hi - lo) * i / (points - 1);
    grid[static_cast<std::size_t>(i)] = {x, objective(ds, x)};
  }
  res.grid_points_evaluated = points;

  Candidate grid_best = grid.front();
  for (const auto& c : grid)
    if (c.value > grid_best.value) grid_best = c;
  std::optional<Candidate> refined;
  if (hi > lo) {
    for (int i = 0; i < points; ++i) {
      const double v = grid[static_cast<std::size_t>(i)].value;
      const bool left_ok = i == 0 || v >= grid[static_cast<std::size_t>(i - 1)].value;
      const bool right_ok = i == points - 1 || v >= grid[static_cast<std::size_t>(i + 1)].value;
      if (!(left_ok && right_ok)) continue;
      const double a = grid[static_cast<std::size_t>(std::max(i - 1, 0))].theta;
      const double b = grid[static_cast<std::size_t>(std::min(i + 1, points - 1))].theta;
      const Candidate c = fit_detail::refine(ds, a, b, tol, lo, hi);
      ++res.refinements;
      if (!refined || fit_detail::better(c, *refined)) refined = c;
    }
  }
  // Grid points only win if no refined candidate matches them.
  Candidate best = grid_best;
  if (refined && refined->value >= grid_best.value * (1 - 1e-13)) best = *refined;
  res.theta_star = best.theta;
  res.objective_value = best.value;
  res.r_star = optimal_amplitude(ds, best.theta);
  res.loss_value = std::max(0.0, energy / n_total - best.value / (n_total * n_total));
  return res;
}

// alpha = 1 + max_{c in (0, pi/2]} sin(c) / (pi + c), by golden section on the
// unimodal ratio.
inline double alpha_constant() {
  auto h = [](double c) { return std::sin(c) / (kPi + c); };
  double a = 0.0, b = kPi / 2;
  constexpr double g = 0.6180339887498949;
  while (b - a > 1e-14) {
    const double x1 = b - g * (b - a), x2 = a + g * (b - a);
    if (h(x1) >= h(x2)) b = x2;
    else a = x1;
  }
  return 1.0 + h(0.5 * (a + b));
}

// Smallest delta in (0, 4] with
//   p0 / ((1+alpha) p0 - alpha - xi) <= delta cos(delta/10) / (2 sin(delta/2)).
// The right side increases from 1 on (0, 4], so bisection finds it.
inline double feasibility_delta(double p0, double xi = 1e-3) {
  if (!(p0 > 0.0 && p0 <= 1.0)) throw DomainError("p0 must lie in (0, 1]");
  const double alpha = alpha_constant();
  const double denom = (1 + alpha) * p0 - alpha - xi;
  auto rhs = [](double d) { return d * std::cos(d / 10) / (2 * std::sin(d / 2)); };
  if (!(denom > 0.0) || p0 / denom > rhs(4.0)) {
    std::ostringstream os;
    os << "no delta in (0, 4] satisfies the feasibility inequality for p0 = " << p0;
    throw InfeasibleError(os.str(), 0.0);
  }
  const double lhs = p0 / denom;
  double a = 0.0, b = 4.0;
  while (b - a > 1e-12) {
    const double m = 0.5 * (a + b);
    (rhs(m) >= lhs ? b : a) = m;
  }
  return b;
}

// sin(N x / 2) / sin(x / 2), continuous at x = 0.
inline double dirichlet_kernel(int n, double x) {
  const double s = std::sin(x / 2);
  if (std::abs(s) < 1e-300) return n * std::cos(n * x / 2) / std::cos(x / 2);
  return std::sin(n * x / 2) / s;
}

// Re((e^{i N x} - 1) / (e^{i x} - 1)) = sum_{n<N} cos(n x).
inline double geometric_kernel_re(int n, double x) {
  const cplx den = std::polar(1.0, x) - 1.0;
  if (std::abs(den) < 1e-12) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += std::cos(k * x);
    return acc;
  }
  return ((std::polar(1.0, n * x) - 1.0) / den).real();
}

}  // namespace qcels
