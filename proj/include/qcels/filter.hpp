#pragma once

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qcels/model_io.hpp"
#include "qcels/rng.hpp"
#include "qcels/spectrum.hpp"

namespace qcels {

// Trigonometric polynomial F(x) = sum_{l=-d}^{d} c_l e^{ilx} approximating
// 1 on I and 0 outside I'.
struct FourierFilter {
  int degree = 0;                // d
  std::vector<cplx> coeffs;      // c_{-d..d}, index l + d
  double q = 0.0;                // achieved sup error on the validation set
  IntervalPair intervals;
  double ramp_sharpness = 0.0;   // erf ramp std-dev relative to the gap half-width (0: constant filter)

  cplx coeff(int l) const {
    if (l < -degree || l > degree) return {0.0, 0.0};
    return coeffs[static_cast<std::size_t>(l + degree)];
  }

  double one_norm() const {
    double s = 0.0;
    for (const auto& c : coeffs) s += std::abs(c);
    return s;
  }

  std::vector<double> magnitudes() const {
    std::vector<double> out(coeffs.size());
    std::transform(coeffs.begin(), coeffs.end(), out.begin(), [](cplx c) { return std::abs(c); });
    return out;
  }

  std::vector<double> phases() const {
    std::vector<double> out(coeffs.size());
    std::transform(coeffs.begin(), coeffs.end(), out.begin(), [](cplx c) { return std::arg(c); });
    return out;
  }
};

// F(x) = sum_l c_l e^{ilx}.
inline cplx eval_filter(const FourierFilter& f, double x) {
  cplx acc{0.0, 0.0};
  for (int l = -f.degree; l <= f.degree; ++l) acc += f.coeff(l) * std::polar(1.0, l * x);
  return acc;
}

// beta_l = |c_l| / sum|c|, phi_l = arg c_l. Sampling l with probability
// beta_l and weighting by one_norm * e^{i phi_l} reproduces F in expectation.
struct ShiftDistribution {
  int degree = 0;
  std::vector<double> beta;   // index l + d
  std::vector<double> phase;  // index l + d
  double one_norm = 0.0;
  std::vector<double> cdf;    // running sum of beta, last entry exactly 1

  // Inverse-CDF draw of the shift l from a uniform u in [0, 1).
  int sample(double u) const {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<int>(it - cdf.begin());
    idx = std::min(idx, static_cast<int>(cdf.size()) - 1);
    // Skip zero-probability entries that share the same cdf value.
    while (beta[static_cast<std::size_t>(idx)] == 0.0 && idx + 1 < static_cast<int>(cdf.size())) ++idx;
    return idx - degree;
  }

  cplx weight(int l) const { return std::polar(one_norm, phase[static_cast<std::size_t>(l + degree)]); }
};

inline ShiftDistribution shift_distribution(const FourierFilter& f) {
  ShiftDistribution s;
  s.degree = f.degree;
  s.one_norm = f.one_norm();
  if (!(s.one_norm > 0.0)) throw DegenerateInputError("filter has no nonzero coefficient");
  s.beta = f.magnitudes();
  s.phase = f.phases();
  double run = 0.0;
  s.cdf.resize(s.beta.size());
  for (std::size_t i = 0; i < s.beta.size(); ++i) {
    s.beta[i] /= s.one_norm;
    run += s.beta[i];
    s.cdf[i] = run;
  }
  // Pin the top of the cdf to 1 at the last entry with positive mass.
  for (std::size_t i = s.cdf.size(); i-- > 0;) {
    if (s.beta[i] > 0.0) {
      for (std::size_t k = i; k < s.cdf.size(); ++k) s.cdf[k] = 1.0;
      break;
    }
  }
  return s;
}

struct FilterOptions {
  int max_degree = 1 << 16;
  int validation_points = 1 << 14;
};

namespace filter_detail {

// Arc geometry on the circle after resolving the wrap point. When I and I'
// share the endpoint -pi (or pi) no periodic function can be 1 on one side of
// the seam and 0 on the other, so a guard band of width D centred on the seam
// is carved out and becomes a transition region.
struct Arcs {
  double on_lo, on_hi;    // I (effective)
  double out_lo, out_hi;  // I' (effective); off set is the rest of the circle
  double seam;            // window for unwrapping is [seam - 2pi, seam)
};

inline Arcs resolve_arcs(const IntervalPair& iv) {
  Arcs a{iv.inner.lo, iv.inner.hi, iv.outer.lo, iv.outer.hi, 0.0};
  // Half the band eats into I, half into the off arc; keep both non-empty.
  const double off_len = 2 * kPi - (iv.outer.hi - iv.outer.lo);
  const double guard = std::min({iv.distance, off_len, iv.inner.width()});
  const bool shared = a.on_lo == a.out_lo || a.on_hi == a.out_hi;
  if (shared && !(guard > 0.0)) throw DomainError("no room for a guard band at the -pi/pi seam");
  if (a.on_lo == a.out_lo) {
    a.on_lo += guard / 2;
    a.out_lo -= guard / 2;
  }
  if (a.on_hi == a.out_hi) {
    a.on_hi -= guard / 2;
    a.out_hi += guard / 2;
  }
  a.seam = 0.5 * (a.out_hi + a.out_lo + 2 * kPi);
  return a;
}

inline double unwrap(double x, double seam) {
  double y = x;
  while (y >= seam) y -= 2 * kPi;
  while (y < seam - 2 * kPi) y += 2 * kPi;
  return y;
}

// Smooth target: product of a rising and a falling erf ramp, each centred in
// its gap with std-dev `sharpness` times the gap half-width.
inline double target(double x, const Arcs& a, double sharpness) {
  const double y = unwrap(x, a.seam);
  const double cu = 0.5 * (a.out_lo + a.on_lo), su = sharpness * 0.5 * (a.on_lo - a.out_lo);
  const double cd = 0.5 * (a.on_hi + a.out_hi), sd = sharpness * 0.5 * (a.out_hi - a.on_hi);
  const double up = 0.5 * std::erfc(-(y - cu) / (su * std::numbers::sqrt2));
  const double down = 0.5 * std::erfc((y - cd) / (sd * std::numbers::sqrt2));
  return up * down;
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Fourier coefficients c_{-d..d} of the target by periodic trapezoid
// quadrature (spectrally accurate for the smooth target).
inline std::vector<cplx> target_coefficients(const Arcs& a, double sharpness, int degree) {
  const double narrow = sharpness * 0.5 * std::min(a.on_lo - a.out_lo, a.out_hi - a.on_hi);
  std::size_t m = next_pow2(std::max<std::size_t>(16 * (2 * static_cast<std::size_t>(degree) + 1),
                                                  static_cast<std::size_t>(std::ceil(16 * kPi / narrow))));
  m = std::max<std::size_t>(m, 1024);
  m = std::min<std::size_t>(m, std::size_t{1} << 23);
  std::vector<cplx> samples(m), spectrum;
  for (std::size_t k = 0; k < m; ++k)
    samples[k] = target(-kPi + 2 * kPi * static_cast<double>(k) / static_cast<double>(m), a, sharpness);
  Eigen::FFT<double> fft;
  fft.fwd(spectrum, samples);
  std::vector<cplx> c(2 * static_cast<std::size_t>(degree) + 1);
  for (int l = -degree; l <= degree; ++l) {
    const auto idx = static_cast<std::size_t>((static_cast<long long>(l) % static_cast<long long>(m) +
                                               static_cast<long long>(m)) %
                                              static_cast<long long>(m));
    const double sign = (l % 2 == 0) ? 1.0 : -1.0;  // e^{il pi}
    c[static_cast<std::size_t>(l + degree)] = sign * spectrum[idx] / static_cast<double>(m);
  }
  // The target is real, so c_{-l} = conj(c_l); enforce it exactly.
  for (int l = 1; l <= degree; ++l) {
    const cplx avg = 0.5 * (c[static_cast<std::size_t>(degree + l)] + std::conj(c[static_cast<std::size_t>(degree - l)]));
    c[static_cast<std::size_t>(degree + l)] = avg;
    c[static_cast<std::size_t>(degree - l)] = std::conj(avg);
  }
  c[static_cast<std::size_t>(degree)] = {c[static_cast<std::size_t>(degree)].real(), 0.0};
  return c;
}

// F on the uniform grid x_k = -pi + 2 pi k / v via one inverse FFT; exact for
// any degree because harmonics are folded modulo v.
inline std::vector<cplx> eval_on_grid(const std::vector<cplx>& coeffs, int degree, std::size_t v) {
  std::vector<cplx> folded(v, cplx{0.0, 0.0}), values;
  for (int l = -degree; l <= degree; ++l) {
    const auto idx = static_cast<std::size_t>((static_cast<long long>(l) % static_cast<long long>(v) +
                                               static_cast<long long>(v)) %
                                              static_cast<long long>(v));
    const double sign = (l % 2 == 0) ? 1.0 : -1.0;
    folded[idx] += sign * coeffs[static_cast<std::size_t>(l + degree)];
  }
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::Unscaled);
  fft.inv(values, folded);
  return values;
}

inline cplx eval_coeffs(const std::vector<cplx>& coeffs, int degree, double x) {
  cplx acc{0.0, 0.0};
  for (int l = -degree; l <= degree; ++l) acc += coeffs[static_cast<std::size_t>(l + degree)] * std::polar(1.0, l * x);
  return acc;
}

enum class Region { kOn, kOff, kFree };

inline Region classify(double x, const Arcs& a) {
  const double y = unwrap(x, a.seam);
  if (y >= a.on_lo && y <= a.on_hi) return Region::kOn;
  if (y > a.out_hi || y < a.out_lo) return Region::kOff;
  return Region::kFree;
}

// Sup of |F - 1| on I and |F| off I' over the validation grid plus the
// (effective) interval endpoints.
inline double validation_error(const std::vector<cplx>& coeffs, int degree, const Arcs& a, std::size_t points) {
  const auto values = eval_on_grid(coeffs, degree, points);
  double err = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double x = -kPi + 2 * kPi * static_cast<double>(k) / static_cast<double>(points);
    const Region r = classify(x, a);
    if (r == Region::kOn) err = std::max(err, std::abs(values[k] - 1.0));
    else if (r == Region::kOff) err = std::max(err, std::abs(values[k]));
  }
  for (double x : {a.on_lo, a.on_hi}) err = std::max(err, std::abs(eval_coeffs(coeffs, degree, x) - 1.0));
  for (double x : {a.out_lo, a.out_hi}) err = std::max(err, std::abs(eval_coeffs(coeffs, degree, x)));
  return err;
}

inline std::vector<double> sharpness_candidates() {
  std::vector<double> s;
  for (int i = 0; i < 20; ++i) s.push_back(0.04 * std::pow(20.0, i / 19.0));  // 0.04 .. 0.8
  return s;
}

struct Trial {
  std::vector<cplx> coeffs;
  double error = std::numeric_limits<double>::infinity();
  double sharpness = 0.0;
};

inline Trial best_at_degree(const Arcs& a, int degree, std::size_t points) {
  Trial best;
  for (double s : sharpness_candidates()) {
    auto c = target_coefficients(a, s, degree);
    const double e = validation_error(c, degree, a, points);
    if (e < best.error) best = {std::move(c), e, s};
  }
  return best;
}

inline FourierFilter constant_filter(const IntervalPair& iv) {
  FourierFilter f;
  f.degree = 0;
  f.coeffs = {cplx{1.0, 0.0}};
  f.q = 0.0;
  f.intervals = iv;
  return f;
}

}  // namespace filter_detail

// Smallest degree (doubling from ceil(4/D)) whose best erf-ramp filter meets
// the target error q on the validation set.
inline FourierFilter build_filter(const IntervalPair& iv, double q, const FilterOptions& opt = {}) {
  if (!(q > 0.0 && q < 0.5)) throw DomainError("filter target error q must lie in (0, 0.5)");
  if (iv.covers_everything()) return filter_detail::constant_filter(iv);
  if (!(iv.distance > 0.0)) throw DomainError("filter requires D > 0");
  const auto arcs = filter_detail::resolve_arcs(iv);
  const auto points = static_cast<std::size_t>(opt.validation_points);
  double best_error = std::numeric_limits<double>::infinity();
  const int cap = std::max(1, opt.max_degree);
  const int start = std::clamp(static_cast<int>(std::min(std::ceil(4.0 / iv.distance), 1e9)), 1, cap);
  for (int d = start;; d = std::min(2 * d, cap)) {
    auto trial = filter_detail::best_at_degree(arcs, d, points);
    best_error = std::min(best_error, trial.error);
    if (trial.error <= q) return {d, std::move(trial.coeffs), trial.error, iv, trial.sharpness};
    if (d == cap) break;
  }
  std::ostringstream os;
  os << "filter cannot reach q = " << q << " within degree " << opt.max_degree << " (best " << best_error << ")";
  throw InfeasibleError(os.str(), best_error);
}

// Fixed-degree construction (experiment preset d = floor(15/D)); q is
// measured rather than targeted.
inline FourierFilter build_filter_with_degree(const IntervalPair& iv, int degree, const FilterOptions& opt = {}) {
  if (degree < 0) throw DomainError("filter degree must be nonnegative");
  if (iv.covers_everything()) return filter_detail::constant_filter(iv);
  const auto arcs = filter_detail::resolve_arcs(iv);
  auto trial = filter_detail::best_at_degree(arcs, std::max(degree, 0), static_cast<std::size_t>(opt.validation_points));
  return {degree, std::move(trial.coeffs), trial.error, iv, trial.sharpness};
}

inline int default_filter_degree(double distance) {
  if (!(distance > 0.0) || !std::isfinite(distance)) throw DomainError("preset degree needs finite D > 0");
  return static_cast<int>(std::floor(15.0 / distance));
}

// Sup error of an arbitrary filter against its own intervals.
inline double measured_filter_error(const FourierFilter& f, const FilterOptions& opt = {}) {
  if (f.intervals.covers_everything()) {
    double e = 0.0;
    for (int k = 0; k < 64; ++k) e = std::max(e, std::abs(eval_filter(f, -kPi + 2 * kPi * k / 64.0) - 1.0));
    return e;
  }
  return filter_detail::validation_error(f.coeffs, f.degree, filter_detail::resolve_arcs(f.intervals),
                                         static_cast<std::size_t>(opt.validation_points));
}

inline nlohmann::json to_json(const FourierFilter& f) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : f.coeffs) coeffs.push_back({c.real(), c.imag()});
  return {{"d", f.degree},
          {"coeffs", coeffs},
          {"q", f.q},
          {"I", {f.intervals.inner.lo, f.intervals.inner.hi}},
          {"Iprime", {f.intervals.outer.lo, f.intervals.outer.hi}}};
}

inline FourierFilter filter_from_json(const nlohmann::json& j, const std::string& source = "filter") {
  if (!j.is_object()) throw ParseError(source + ": top level must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "d" && key != "coeffs" && key != "q" && key != "I" && key != "Iprime")
      throw ParseError(source + ": unknown field '" + key + "'");
  for (const char* key : {"d", "coeffs", "q", "I", "Iprime"})
    if (!j.contains(key)) throw ParseError(source + ": missing field '" + std::string(key) + "'");
  FourierFilter f;
  if (!j.at("d").is_number_integer() || j.at("d").get<int>() < 0)
    throw ParseError(source + ": field 'd' must be a nonnegative integer");
  f.degree = j.at("d").get<int>();
  const auto& cs = j.at("coeffs");
  if (!cs.is_array() || cs.size() != 2 * static_cast<std::size_t>(f.degree) + 1)
    throw ParseError(source + ": field 'coeffs' must hold 2d+1 [re, im] pairs");
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (!cs[i].is_array() || cs[i].size() != 2 || !cs[i][0].is_number() || !cs[i][1].is_number()) {
      std::ostringstream os;
      os << source << ": field 'coeffs[" << i << "]' must be [re, im]";
      throw ParseError(os.str());
    }
    f.coeffs.emplace_back(cs[i][0].get<double>(), cs[i][1].get<double>());
  }
  if (!j.at("q").is_number()) throw ParseError(source + ": field 'q' must be a number");
  f.q = j.at("q").get<double>();
  auto interval = [&](const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
      throw ParseError(source + ": field '" + key + "' must be [lo, hi]");
    return Interval{a[0].get<double>(), a[1].get<double>()};
  };
  try {
    f.intervals = IntervalPair::make(interval("I"), interval("Iprime"));
  } catch (const DomainError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return f;
}

// Content hash quoted in dataset sidecars.
inline std::uint64_t filter_digest(const FourierFilter& f) { return fnv1a64(to_json(f).dump()); }

inline void save_filter(const std::filesystem::path& path, const FourierFilter& f) {
  io_detail::write_file(path, to_json(f).dump(2) + "\n");
}

inline FourierFilter load_filter(const std::filesystem::path& path) {
  const std::string text = io_detail::read_file(path);
  return filter_from_json(io_detail::parse_json(text, path.string()), path.string());
}

}  // namespace qcels
