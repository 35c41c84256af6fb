#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcels/filter.hpp"
#include "qcels/rng.hpp"
#include "qcels/spectrum.hpp"

namespace qcels {

struct TimeSeriesDataset {
  double tau = 0.0;
  std::vector<double> times;   // nominal t_n = n tau
  std::vector<cplx> values;    // Z_n
  int shots_per_point = 0;     // N_s (0 for noiseless data)
  bool filtered = false;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> filter_digest;
  // Evolution time spent producing the data, one Re/Im shot pair counted once.
  double runtime_actual = 0.0;  // sum of |shot time|
  double runtime_bound = 0.0;   // sum of (d + n tau) for filtered data, n tau otherwise

  int n_points() const { return static_cast<int>(values.size()); }
};

struct ShotRecord {
  int x = 1;
  int y = 1;
};

enum class Basis { kRe, kIm };

// <psi| e^{-itH} |psi> = sum_m p_m e^{-i t lambda_m}.
inline cplx expectation(const SpectralModel& m, double t) {
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < m.size(); ++i) acc += m.weights[i] * std::polar(1.0, -t * m.eigenvalues[i]);
  return acc;
}

// One ancilla measurement with mean c, decided by a uniform draw u.
inline int shot_from_uniform(double c, double u) { return u < 0.5 * (1.0 + c) ? 1 : -1; }

inline int hadamard_shot(const SpectralModel& m, double t, Basis basis, const CounterRng& rng,
                         std::uint64_t counter) {
  const cplx e = expectation(m, t);
  return shot_from_uniform(basis == Basis::kRe ? e.real() : e.imag(), rng.uniform(counter));
}

// Sign of the integer shift in the filtered shot time. kMinus (t = n tau - l)
// makes E[Z_{n,q}] = sum_m p_m F(lambda_m) e^{-i n tau lambda_m}; kPlus is the
// literal listing and yields F(-lambda_m) instead.
enum class ShiftSign { kMinus, kPlus };

struct SamplerOptions {
  bool noiseless = false;  // Z_n set to exact expectations
  ShiftSign shift_sign = ShiftSign::kMinus;
};

namespace sampler_detail {

// Draw slots within one shot index k of one point n.
inline constexpr std::uint64_t kSlotX = 0, kSlotY = 1, kSlotShift = 2;

inline std::uint64_t counter(int k, std::uint64_t slot) { return 3 * static_cast<std::uint64_t>(k) + slot; }

inline void check_sizes(double tau, int n_points, int shots) {
  if (n_points < 1) throw DomainError("dataset needs N >= 1");
  if (shots < 1) throw DomainError("dataset needs N_s >= 1");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("dataset needs tau > 0");
}

}  // namespace sampler_detail

// Z_n = (1/N_s) sum_k (X_{k,n} + i Y_{k,n}) at t_n = n tau. Point n uses the
// child stream rng.split(n), so every point is independent of evaluation order.
inline TimeSeriesDataset generate_dataset(const SpectralModel& m, double tau, int n_points, int shots,
                                          const CounterRng& rng, const SamplerOptions& opt = {}) {
  using namespace sampler_detail;
  check_sizes(tau, n_points, shots);
  TimeSeriesDataset ds;
  ds.tau = tau;
  ds.shots_per_point = opt.noiseless ? 0 : shots;
  ds.seed = rng.key();
  for (int n = 0; n < n_points; ++n) {
    const double t = n * tau;
    const cplx e = expectation(m, t);
    ds.times.push_back(t);
    ds.runtime_actual += shots * t;
    ds.runtime_bound += shots * t;
    if (opt.noiseless) {
      ds.values.push_back(e);
      continue;
    }
    const CounterRng point = rng.split(static_cast<std::uint64_t>(n));
    cplx sum{0.0, 0.0};
    for (int k = 0; k < shots; ++k) {
      const int x = shot_from_uniform(e.real(), point.uniform(counter(k, kSlotX)));
      const int y = shot_from_uniform(e.imag(), point.uniform(counter(k, kSlotY)));
      sum += cplx(x, y);
    }
    ds.values.push_back(sum / static_cast<double>(shots));
  }
  return ds;
}

// Filtered data of the small-overlap pipeline: each shot draws one shift l
// with probability beta_l (shared by its Re and Im circuits), runs both at the
// shifted time and is weighted by one_norm * e^{i phi_l}.
inline TimeSeriesDataset generate_filtered_dataset(const SpectralModel& m, const FourierFilter& f, double tau,
                                                   int n_points, int shots, const CounterRng& rng,
                                                   const SamplerOptions& opt = {}) {
  using namespace sampler_detail;
  check_sizes(tau, n_points, shots);
  const ShiftDistribution dist = shift_distribution(f);
  const int d = f.degree;
  const double sign = opt.shift_sign == ShiftSign::kMinus ? -1.0 : 1.0;
  auto shot_time = [&](int n, int l) { return n * tau + sign * l; };

  TimeSeriesDataset ds;
  ds.tau = tau;
  ds.shots_per_point = opt.noiseless ? 0 : shots;
  ds.filtered = true;
  ds.seed = rng.key();
  ds.filter_digest = filter_digest(f);

  // Expectations at every reachable shifted time, indexed [n][l + d].
  std::vector<std::vector<cplx>> table(static_cast<std::size_t>(n_points),
                                       std::vector<cplx>(2 * static_cast<std::size_t>(d) + 1));
  for (int n = 0; n < n_points; ++n)
    for (int l = -d; l <= d; ++l)
      if (dist.beta[static_cast<std::size_t>(l + d)] > 0.0)
        table[static_cast<std::size_t>(n)][static_cast<std::size_t>(l + d)] = expectation(m, shot_time(n, l));

  for (int n = 0; n < n_points; ++n) {
    const auto& row = table[static_cast<std::size_t>(n)];
    ds.times.push_back(n * tau);
    if (opt.noiseless) {
      cplx acc{0.0, 0.0};
      for (int l = -d; l <= d; ++l) acc += f.coeff(l) * row[static_cast<std::size_t>(l + d)];
      ds.values.push_back(acc);
      double mean_time = 0.0;
      for (int l = -d; l <= d; ++l) mean_time += dist.beta[static_cast<std::size_t>(l + d)] * std::abs(shot_time(n, l));
      ds.runtime_actual += shots * mean_time;
      ds.runtime_bound += shots * (d + n * tau);
      continue;
    }
    const CounterRng point = rng.split(static_cast<std::uint64_t>(n));
    cplx sum{0.0, 0.0};
    std::vector<long long> hits(2 * static_cast<std::size_t>(d) + 1, 0);
    for (int k = 0; k < shots; ++k) {
      const int l = dist.sample(point.uniform(counter(k, kSlotShift)));
      const cplx e = row[static_cast<std::size_t>(l + d)];
      const int x = shot_from_uniform(e.real(), point.uniform(counter(k, kSlotX)));
      const int y = shot_from_uniform(e.imag(), point.uniform(counter(k, kSlotY)));
      sum += cplx(x, y) * dist.weight(l);
      ++hits[static_cast<std::size_t>(l + d)];
    }
    for (int l = -d; l <= d; ++l)
      if (hits[static_cast<std::size_t>(l + d)] > 0)
        ds.runtime_actual += static_cast<double>(hits[static_cast<std::size_t>(l + d)]) * std::abs(shot_time(n, l));
    ds.runtime_bound += shots * (d + n * tau);
    ds.values.push_back(sum / static_cast<double>(shots));
  }
  return ds;
}

// Hoeffding-type bound on the mean residual magnitude.
inline double noise_bound(int n_points, int shots, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0, 1)");
  if (n_points < 1 || shots < 1) throw DomainError("noise_bound needs N, N_s >= 1");
  return 2.0 / std::sqrt(static_cast<double>(shots)) + std::sqrt(2.0 * std::log(1.0 / eta) / n_points);
}

// E_n = Z_n - <psi| e^{-i t_n H} |psi>.
inline std::vector<cplx> noise_residual(const TimeSeriesDataset& ds, const SpectralModel& m) {
  if (ds.times.size() != ds.values.size()) throw ContractViolation("dataset times/values length mismatch");
  if (ds.filtered) throw ContractViolation("noise_residual expects unfiltered data; use filtered_noise_residual");
  std::vector<cplx> out;
  for (std::size_t n = 0; n < ds.values.size(); ++n) out.push_back(ds.values[n] - expectation(m, ds.times[n]));
  return out;
}

// G_{n,q} = Z_{n,q} - <psi| F(H) e^{-i n tau H} |psi>.
inline std::vector<cplx> filtered_noise_residual(const TimeSeriesDataset& ds, const SpectralModel& m,
                                                 const FourierFilter& f) {
  if (ds.times.size() != ds.values.size()) throw ContractViolation("dataset times/values length mismatch");
  std::vector<cplx> out;
  for (std::size_t n = 0; n < ds.values.size(); ++n) {
    cplx expect{0.0, 0.0};
    for (std::size_t i = 0; i < m.size(); ++i)
      expect += m.weights[i] * eval_filter(f, m.eigenvalues[i]) * std::polar(1.0, -ds.times[n] * m.eigenvalues[i]);
    out.push_back(ds.values[n] - expect);
  }
  return out;
}

}  // namespace qcels
