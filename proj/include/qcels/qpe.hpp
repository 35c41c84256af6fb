#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "qcels/fit.hpp"
#include "qcels/rng.hpp"
#include "qcels/spectrum.hpp"

namespace qcels {

// How one run turns its sampled outcomes into an estimate.
//  kMinimum: lowest eigenphase among `samples` outcomes. With a few samples
//            the ground peak is almost surely hit; with many, the kernel's
//            heavy tails start to dominate the minimum.
//  kLowestPeak: lowest eigenphase whose outcome count reaches
//               peak_fraction * samples (the lowest histogram peak).
//  kSingle: one outcome, one shot; saturates at the excited weight when p0 < 1.
enum class QpeReadout { kMinimum, kLowestPeak, kSingle };

struct QpeConfig {
  int bits = 8;  // K
  double tau = 1.0;
  int runs = 10;
  int samples = 10;
  QpeReadout readout = QpeReadout::kMinimum;
  double peak_fraction = 0.05;

  double t_max() const { return (std::ldexp(1.0, bits) - 1.0) * tau; }
  int shots_per_run() const { return readout == QpeReadout::kSingle ? 1 : samples; }
  double t_total_per_run() const { return shots_per_run() * t_max(); }

  void validate() const {
    if (bits < 1 || bits > 30) throw DomainError("QPE bits must lie in [1, 30]");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("QPE tau must be positive");
    if (runs < 1) throw DomainError("QPE runs must be positive");
    if (samples < 1) throw DomainError("QPE samples must be positive");
    if (!(peak_fraction > 0.0 && peak_fraction <= 1.0)) throw DomainError("QPE peak_fraction must lie in (0, 1]");
  }
};

// |sin(2^{K-1} x) / (2^K sin(x/2))|^2, equal to 1 at x = 0 mod 2 pi.
inline double qpe_kernel(int bits, double x) {
  const double m = std::ldexp(1.0, bits);
  const double s = std::sin(x / 2);
  if (std::abs(s) < 1e-15) return 1.0;
  const double v = std::sin(m * x / 2) / (m * s);
  return v * v;
}

// Outcome law Pr(j) = sum_m p_m kernel(phi_m - 2 pi j / 2^K) with phi_m = lambda_m tau.
inline std::vector<double> qpe_distribution(const SpectralModel& model, const QpeConfig& cfg) {
  cfg.validate();
  const auto outcomes = std::size_t{1} << cfg.bits;
  std::vector<double> p(outcomes, 0.0);
  for (std::size_t m = 0; m < model.size(); ++m) {
    const double phi = model.eigenvalues[m] * cfg.tau;
    for (std::size_t j = 0; j < outcomes; ++j)
      p[j] += model.weights[m] * qpe_kernel(cfg.bits, phi - 2 * kPi * static_cast<double>(j) / static_cast<double>(outcomes));
  }
  return p;
}

// Outcome j read as eigenvalue: 2 pi j / 2^K wrapped to [-pi, pi), divided by tau.
inline double qpe_phase(std::size_t j, const QpeConfig& cfg) {
  double phase = 2 * kPi * static_cast<double>(j) / std::ldexp(1.0, cfg.bits);
  if (phase >= kPi) phase -= 2 * kPi;
  return phase / cfg.tau;
}

struct QpeRun {
  double estimate = 0.0;
  double wrapped_error = 0.0;
  double abs_error = 0.0;
};

struct QpeEstimate {
  std::vector<QpeRun> runs;
  double mean_wrapped_error = 0.0;
  double t_max = 0.0;
  double t_total = 0.0;  // all runs
};

// Draws one outcome index from a cdf by inverse transform.
inline std::size_t sample_cdf(const std::vector<double>& cdf, double u) {
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u * cdf.back());
  return std::min(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

// Run r uses rng.split(r); sample s of a run uses counter s.
inline QpeEstimate qpe_estimate(const SpectralModel& model, const QpeConfig& cfg, const CounterRng& rng) {
  const auto p = qpe_distribution(model, cfg);
  std::vector<double> cdf(p.size());
  double run_sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) cdf[j] = run_sum += p[j];

  QpeEstimate out;
  const double lambda0 = model.ground_energy();
  for (int r = 0; r < cfg.runs; ++r) {
    const CounterRng stream = rng.split(static_cast<std::uint64_t>(r));
    const int shots = cfg.shots_per_run();
    std::vector<std::size_t> outcomes(static_cast<std::size_t>(shots));
    for (int s = 0; s < shots; ++s) outcomes[static_cast<std::size_t>(s)] = sample_cdf(cdf, stream.uniform(static_cast<std::uint64_t>(s)));
    double est = std::numeric_limits<double>::infinity();
    if (cfg.readout == QpeReadout::kLowestPeak) {
      std::map<std::size_t, int> counts;
      for (auto j : outcomes) ++counts[j];
      const double need = cfg.peak_fraction * shots;
      for (const auto& [j, c] : counts)
        if (c >= need) est = std::min(est, qpe_phase(j, cfg));
      if (!std::isfinite(est)) {  // no bin reaches the threshold: fall back to the most frequent
        const auto top = std::max_element(counts.begin(), counts.end(),
                                          [](const auto& a, const auto& b) { return a.second < b.second; });
        est = qpe_phase(top->first, cfg);
      }
    } else {
      for (auto j : outcomes) est = std::min(est, qpe_phase(j, cfg));
    }
    QpeRun run{est, wrapped_distance(est, lambda0, 2 * kPi / cfg.tau), std::abs(est - lambda0)};
    out.mean_wrapped_error += run.wrapped_error;
    out.runs.push_back(run);
  }
  out.mean_wrapped_error /= cfg.runs;
  out.t_max = cfg.t_max();
  out.t_total = cfg.runs * cfg.t_total_per_run();
  return out;
}

}  // namespace qcels
