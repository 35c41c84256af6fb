#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <sstream>
#include <variant>
#include <vector>

#include "qcels/filter.hpp"
#include "qcels/fit.hpp"
#include "qcels/sampler.hpp"

namespace qcels {

struct LevelSchedule {
  int J = 0;
  std::vector<double> taus;  // tau_1 .. tau_J, doubling
  int N = 0;
  int N_s = 0;
  double delta = 0.0;
  double epsilon = 0.0;
  double eta = 0.1;

  double tau_last() const { return taus.back(); }
};

// ceil(log2(1/eps)) by exact doubling.
inline int ceil_log2_inverse(double epsilon) {
  int k = 0;
  for (double x = epsilon; x < 1.0; x *= 2) ++k;
  return k;
}

// J = ceil(log2(1/eps)) + 1 and tau_j = 2^{j-1-ceil(log2(1/eps))} delta / (N eps),
// so N tau_J = delta / eps.
inline LevelSchedule build_schedule(double delta, double epsilon, int N, int N_s, double eta = 0.1) {
  if (!(epsilon > 0.0 && epsilon <= 0.5)) throw DomainError("epsilon must lie in (0, 1/2]");
  if (!(delta > 0.0 && delta <= 4.0)) throw DomainError("delta must lie in (0, 4]");
  if (N < 2) throw DomainError("N must be at least 2");
  if (N_s < 1) throw DomainError("N_s must be at least 1");
  if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0, 1)");
  const int k = ceil_log2_inverse(epsilon);
  LevelSchedule s{k + 1, {}, N, N_s, delta, epsilon, eta};
  const double top = delta / (N * epsilon);
  for (int j = 1; j <= s.J; ++j) s.taus.push_back(std::ldexp(top, j - 1 - k));
  // The first search interval is all of [-pi, pi]; it must fit in one period.
  if (s.taus.front() > 1.0) {
    std::ostringstream os;
    os << "tau_1 = " << s.taus.front() << " exceeds 1; [-pi, pi] would alias";
    throw DomainError(os.str());
  }
  return s;
}

struct LevelRecord {
  double tau = 0.0;
  double theta_star = 0.0;
  double lambda_min = 0.0;  // search interval used at this level
  double lambda_max = 0.0;
  double objective = 0.0;
};

struct EstimateResult {
  double theta_star = 0.0;
  std::vector<LevelRecord> history;
  double t_max = 0.0;            // N tau_J (+ d when filtered)
  double t_max_circuit = 0.0;    // (N-1) tau_J (+ d when filtered)
  double t_total = 0.0;          // sum of shot evolution times, one Re/Im pair counted once
  double t_total_theorem = 0.0;  // sum_j N (N-1) N_s tau_j (+ N N_s d when filtered)
  double t_total_bound = 0.0;    // filtered: sum of (d + n tau_j) per shot; equals t_total otherwise
  double wrapped_error = 0.0;    // against the model's ground energy
  double abs_error = 0.0;
  bool success = false;          // wrapped_error <= epsilon
  std::uint64_t seed = 0;
  std::optional<double> lambda_prior;
  int filter_degree = 0;
  double filter_q = 0.0;
};

struct CostReport {
  double t_max_theorem = 0.0;
  double t_max_circuit = 0.0;
  double t_total_circuit = 0.0;
  double t_total_theorem = 0.0;
};

inline CostReport cost_report(const EstimateResult& r) {
  return {r.t_max, r.t_max_circuit, r.t_total, r.t_total_theorem};
}

inline nlohmann::json to_json(const EstimateResult& r) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& h : r.history)
    hist.push_back({{"tau", h.tau},
                    {"theta_star", h.theta_star},
                    {"lambda_min", h.lambda_min},
                    {"lambda_max", h.lambda_max},
                    {"objective", h.objective}});
  nlohmann::json j{{"theta_star", r.theta_star},
                   {"history", hist},
                   {"t_max", {{"theorem", r.t_max}, {"circuit", r.t_max_circuit}}},
                   {"t_total", {{"circuit", r.t_total}, {"theorem", r.t_total_theorem}, {"bound", r.t_total_bound}}},
                   {"abs_error", r.abs_error},
                   {"wrapped_error", r.wrapped_error},
                   {"success", r.success},
                   {"seed", r.seed}};
  if (r.lambda_prior) j["lambda_prior"] = *r.lambda_prior;
  if (r.filter_degree > 0) j["filter"] = {{"d", r.filter_degree}, {"q", r.filter_q}};
  return j;
}

struct MultilevelOptions {
  bool noiseless = false;
  FitOptions fit;
  ShiftSign shift_sign = ShiftSign::kMinus;
};

namespace multilevel_detail {

inline void finish(EstimateResult& r, const SpectralModel& model, const LevelSchedule& s) {
  r.abs_error = std::abs(r.theta_star - model.ground_energy());
  r.wrapped_error = wrapped_distance(r.theta_star, model.ground_energy(), 2 * kPi);
  r.success = r.wrapped_error <= s.epsilon;
}

// Shared level loop. `make_data(j, tau)` returns the dataset of level j.
template <class MakeData>
EstimateResult run_levels(const SpectralModel& model, const LevelSchedule& s, const MultilevelOptions& opt,
                          MakeData&& make_data) {
  EstimateResult r;
  double lo = -kPi, hi = kPi;
  for (int j = 0; j < s.J; ++j) {
    const double tau = s.taus[static_cast<std::size_t>(j)];
    const TimeSeriesDataset ds = make_data(j, tau);
    const FitResult f = fit(ds, lo, hi, opt.fit);
    r.history.push_back({tau, f.theta_star, lo, hi, f.objective_value});
    r.t_total += ds.runtime_actual;
    r.t_total_bound += ds.runtime_bound;
    r.t_total_theorem += static_cast<double>(s.N) * (s.N - 1) * s.N_s * tau;
    lo = f.theta_star - kPi / (2 * tau);
    hi = f.theta_star + kPi / (2 * tau);
    r.theta_star = f.theta_star;
  }
  r.t_max = s.N * s.tau_last();
  r.t_max_circuit = (s.N - 1) * s.tau_last();
  finish(r, model, s);
  return r;
}

}  // namespace multilevel_detail

// Multi-level QCELS: fit each level over the current interval, then shrink it
// to theta*_j -/+ pi / (2 tau_j). Level j draws from rng.split(j).
inline EstimateResult run_multilevel(const SpectralModel& model, const LevelSchedule& s, const CounterRng& rng,
                                     const MultilevelOptions& opt = {}) {
  SamplerOptions so{opt.noiseless, opt.shift_sign};
  auto r = multilevel_detail::run_levels(model, s, opt, [&](int j, double tau) {
    return generate_dataset(model, tau, s.N, s.N_s, rng.split(static_cast<std::uint64_t>(j)), so);
  });
  r.seed = rng.key();
  return r;
}

// Rough ground-energy prior. Oracle mode perturbs the true lambda_0 by a
// uniform draw in [-D/2, D/2]; injected mode passes a caller value through.
struct OraclePrior {};
struct InjectedPrior {
  double value = 0.0;
};
using PriorMode = std::variant<OraclePrior, InjectedPrior>;

inline double rough_estimate(const SpectralModel& model, const PriorMode& mode, double distance, const CounterRng& rng) {
  if (const auto* inj = std::get_if<InjectedPrior>(&mode)) return inj->value;
  if (!(distance > 0.0) || !std::isfinite(distance)) throw DomainError("oracle prior needs finite D > 0");
  const double u = rng.split(std::string_view("prior")).uniform(0);
  return model.ground_energy() + (u - 0.5) * distance;
}

// I = [-pi, prior + D/2], I' = [-pi, prior + 3D/2], clipped to pi.
inline IntervalPair prior_intervals(double prior, double distance) {
  const double b = std::min(prior + distance / 2, kPi);
  const double bp = std::min(prior + 1.5 * distance, kPi);
  if (b == kPi) return IntervalPair::make({-kPi, kPi}, {-kPi, kPi});
  return IntervalPair::make({-kPi, b}, {-kPi, bp});
}

// Gap recipe: I = [-pi, prior + Delta/4], I' = [-pi, prior + 3 Delta/4] (D = Delta/2).
inline IntervalPair gap_intervals(double prior, double gap) { return prior_intervals(prior, gap / 2); }

// D = (lambda_K - lambda_0) / 4 with K the smallest index whose cumulative
// excited weight sum_{k=1..K} p_k exceeds p0 / 3.
inline double interval_distance(const SpectralModel& model) {
  double cum = 0.0;
  for (std::size_t k = 1; k < model.size(); ++k) {
    cum += model.weights[k];
    if (cum > model.ground_weight() / 3) return (model.eigenvalues[k] - model.ground_energy()) / 4;
  }
  throw DomainError("excited weight never exceeds p0/3; interval distance undefined");
}

// floor(15 p0^{-2} ln d), at least 1.
inline int default_gsee_shots(double p0, int degree) {
  if (degree < 2) return 1;
  return std::max(1, static_cast<int>(std::floor(15.0 / (p0 * p0) * std::log(static_cast<double>(degree)))));
}

// Small-overlap estimation with a prebuilt filter.
inline EstimateResult run_gsee_small_overlap(const SpectralModel& model, const FourierFilter& filter,
                                             const LevelSchedule& s, const CounterRng& rng,
                                             const MultilevelOptions& opt = {}) {
  SamplerOptions so{opt.noiseless, opt.shift_sign};
  auto r = multilevel_detail::run_levels(model, s, opt, [&](int j, double tau) {
    return generate_filtered_dataset(model, filter, tau, s.N, s.N_s, rng.split(static_cast<std::uint64_t>(j)), so);
  });
  r.t_max += filter.degree;
  r.t_max_circuit += filter.degree;
  r.t_total_theorem += static_cast<double>(s.N) * s.N_s * filter.degree * s.J;
  r.filter_degree = filter.degree;
  r.filter_q = filter.q;
  r.seed = rng.key();
  return r;
}

// Small-overlap estimation building the filter for (iv, q); infeasibility propagates.
inline EstimateResult run_gsee_small_overlap(const SpectralModel& model, const IntervalPair& iv, double q,
                                             const LevelSchedule& s, const CounterRng& rng,
                                             const MultilevelOptions& opt = {}) {
  relative_overlap(model, iv);  // throws when undefined
  return run_gsee_small_overlap(model, build_filter(iv, q), s, rng, opt);
}

}  // namespace qcels
