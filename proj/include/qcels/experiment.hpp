#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "qcels/dataset_io.hpp"
#include "qcels/hamiltonians.hpp"
#include "qcels/model_io.hpp"
#include "qcels/multilevel.hpp"
#include "qcels/qpe.hpp"

#ifndef QCELS_VERSION
#define QCELS_VERSION "0.1.0"
#endif

namespace qcels {

enum class Method { kQcels, kGsee, kQpe };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::kQcels: return "qcels";
    case Method::kGsee: return "gsee";
    case Method::kQpe: return "qpe";
  }
  return "?";
}

enum class SweepAxis { kEpsilon, kTmax };

// Parsed and validated experiment description.
struct ExperimentConfig {
  std::string label;
  nlohmann::json model;  // validated model section, built lazily
  std::vector<Method> methods;
  // schedule
  double delta = 1.0;
  std::vector<double> epsilons;
  std::vector<double> tmax;
  int N = 5;
  std::optional<int> N_s;  // empty: preset floor(15 p0^-2 ln d)
  double eta = 0.1;
  // filter (gsee)
  std::optional<double> filter_q;
  std::optional<int> filter_degree;  // empty with no q: preset floor(15/D)
  std::optional<double> distance;    // empty: derived from the spectrum
  std::string intervals = "prior";   // prior | gap | full
  // prior (gsee)
  bool prior_oracle = true;
  double prior_value = 0.0;
  // qpe
  double qpe_tau = 0.9;
  int qpe_samples = 10;
  QpeReadout qpe_readout = QpeReadout::kMinimum;
  std::optional<std::vector<int>> qpe_bits;
  // seeds and output
  std::vector<std::uint64_t> seeds;
  std::uint64_t base_seed = 0;
  std::filesystem::path out_dir = "out";
  std::string csv_name = "sweep.csv";
  std::string summary_name = "summary.json";
  std::string digest;  // FNV-1a of the canonical config text

  SweepAxis axis() const { return tmax.empty() ? SweepAxis::kEpsilon : SweepAxis::kTmax; }
  std::size_t point_count() const { return axis() == SweepAxis::kEpsilon ? epsilons.size() : tmax.size(); }
};

namespace config_detail {

class Checker {
 public:
  explicit Checker(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw ParseError(source_ + ": field '" + field + "' " + what);
  }

  void only(const nlohmann::json& obj, const std::string& where, std::initializer_list<const char*> keys) const {
    if (!obj.is_object()) fail(where, "must be an object");
    for (const auto& [k, _] : obj.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        fail(where.empty() ? k : where + "." + k, "is not a recognised key");
    }
  }

  double number(const nlohmann::json& obj, const std::string& where, const char* key) const {
    if (!obj.contains(key)) fail(join(where, key), "is required");
    if (!obj.at(key).is_number()) fail(join(where, key), "must be a number");
    return obj.at(key).get<double>();
  }

  int integer(const nlohmann::json& obj, const std::string& where, const char* key) const {
    if (!obj.contains(key)) fail(join(where, key), "is required");
    if (!obj.at(key).is_number_integer()) fail(join(where, key), "must be an integer");
    return obj.at(key).get<int>();
  }

  std::string string(const nlohmann::json& obj, const std::string& where, const char* key) const {
    if (!obj.contains(key)) fail(join(where, key), "is required");
    if (!obj.at(key).is_string()) fail(join(where, key), "must be a string");
    return obj.at(key).get<std::string>();
  }

  static std::string join(const std::string& where, const char* key) { return where.empty() ? key : where + "." + key; }

 private:
  std::string source_;
};

inline bool is_nonnegative_integer(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

inline std::vector<double> number_list(const Checker& c, const nlohmann::json& v, const std::string& field) {
  std::vector<double> out;
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) c.fail(field, "must be a number or an array of numbers");
  for (const auto& x : v) {
    if (!x.is_number()) c.fail(field, "must contain only numbers");
    out.push_back(x.get<double>());
  }
  if (out.empty()) c.fail(field, "must not be empty");
  return out;
}

inline void check_model(const Checker& c, const nlohmann::json& m) {
  c.only(m, "model", {"builder", "params", "normalize", "p0", "residual", "path"});
  const std::string builder = c.string(m, "model", "builder");
  if (builder == "file") {
    c.string(m, "model", "path");
    for (const char* k : {"params", "p0", "residual", "normalize"})
      if (m.contains(k)) c.fail(std::string("model.") + k, "is not allowed with builder 'file'");
    return;
  }
  if (builder != "tfim" && builder != "hubbard") c.fail("model.builder", "must be one of tfim, hubbard, file");
  if (m.contains("path")) c.fail("model.path", "is only allowed with builder 'file'");
  if (!m.contains("params")) c.fail("model.params", "is required");
  const auto& p = m.at("params");
  if (builder == "tfim") {
    c.only(p, "model.params", {"L", "g"});
    c.integer(p, "model.params", "L");
    c.number(p, "model.params", "g");
  } else {
    c.only(p, "model.params", {"L", "t", "U", "sector"});
    c.integer(p, "model.params", "L");
    c.number(p, "model.params", "t");
    c.number(p, "model.params", "U");
    if (p.contains("sector")) {
      c.only(p.at("sector"), "model.params.sector", {"n_up", "n_down"});
      c.integer(p.at("sector"), "model.params.sector", "n_up");
      c.integer(p.at("sector"), "model.params.sector", "n_down");
    }
  }
  if (m.contains("normalize") && !m.at("normalize").is_boolean()) c.fail("model.normalize", "must be a boolean");
  const double p0 = c.number(m, "model", "p0");
  if (!(p0 > 0.0 && p0 <= 1.0)) c.fail("model.p0", "must lie in (0, 1]");
  if (m.contains("residual")) {
    const auto& r = m.at("residual");
    c.only(r, "model.residual", {"policy", "seed", "count", "weights"});
    const std::string policy = c.string(r, "model.residual", "policy");
    if (policy == "pseudo-random") {
      if (r.contains("seed") && !is_nonnegative_integer(r.at("seed"))) c.fail("model.residual.seed", "must be a nonnegative integer");
    } else if (policy == "uniform-excited") {
      if (c.integer(r, "model.residual", "count") < 1) c.fail("model.residual.count", "must be positive");
    } else if (policy == "explicit") {
      if (!r.contains("weights")) c.fail("model.residual.weights", "is required");
      number_list(c, r.at("weights"), "model.residual.weights");
    } else {
      c.fail("model.residual.policy", "must be one of pseudo-random, uniform-excited, explicit");
    }
  }
}

inline Method parse_method(const Checker& c, const nlohmann::json& v) {
  if (!v.is_string()) c.fail("method", "must be a string or an array of strings");
  const auto s = v.get<std::string>();
  if (s == "qcels") return Method::kQcels;
  if (s == "gsee") return Method::kGsee;
  if (s == "qpe") return Method::kQpe;
  c.fail("method", "must be one of qcels, gsee, qpe");
}

}  // namespace config_detail

// Validates a config document; every error names the offending field.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::string& source = "config") {
  using config_detail::Checker;
  const Checker c(source);
  c.only(j, "", {"label", "model", "method", "schedule", "filter", "prior", "qpe", "seeds", "base_seed", "output"});
  ExperimentConfig cfg;
  cfg.digest = [&] {
    std::ostringstream os;
    os << std::hex << fnv1a64(j.dump());
    return os.str();
  }();
  cfg.label = j.contains("label") ? c.string(j, "", "label") : "experiment";

  if (!j.contains("model")) c.fail("model", "is required");
  config_detail::check_model(c, j.at("model"));
  cfg.model = j.at("model");

  if (!j.contains("method")) c.fail("method", "is required");
  if (j.at("method").is_array()) {
    for (const auto& m : j.at("method")) cfg.methods.push_back(config_detail::parse_method(c, m));
    if (cfg.methods.empty()) c.fail("method", "must not be empty");
  } else {
    cfg.methods.push_back(config_detail::parse_method(c, j.at("method")));
  }
  auto uses = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };

  if (!j.contains("schedule")) c.fail("schedule", "is required");
  const auto& s = j.at("schedule");
  c.only(s, "schedule", {"delta", "epsilon", "tmax", "N", "N_s", "eta"});
  if (s.contains("epsilon") == s.contains("tmax")) c.fail("schedule.epsilon", "or schedule.tmax must be given (exactly one)");
  if (s.contains("delta")) cfg.delta = c.number(s, "schedule", "delta");
  if (!(cfg.delta > 0.0 && cfg.delta <= 4.0)) c.fail("schedule.delta", "must lie in (0, 4]");
  if (s.contains("epsilon")) {
    cfg.epsilons = config_detail::number_list(c, s.at("epsilon"), "schedule.epsilon");
    for (double e : cfg.epsilons)
      if (!(e > 0.0 && e < 0.5)) c.fail("schedule.epsilon", "values must lie in (0, 1/2)");
  } else {
    cfg.tmax = config_detail::number_list(c, s.at("tmax"), "schedule.tmax");
    for (double t : cfg.tmax)
      if (!(cfg.delta / t > 0.0 && cfg.delta / t < 0.5)) c.fail("schedule.tmax", "values must give delta/tmax in (0, 1/2)");
    for (double t : cfg.tmax) cfg.epsilons.push_back(cfg.delta / t);
  }
  if (s.contains("N")) cfg.N = c.integer(s, "schedule", "N");
  if (cfg.N < 2) c.fail("schedule.N", "must be at least 2");
  if (s.contains("N_s")) {
    if (s.at("N_s").is_string()) {
      if (s.at("N_s").get<std::string>() != "preset") c.fail("schedule.N_s", "must be a positive integer or \"preset\"");
      if (!uses(Method::kGsee)) c.fail("schedule.N_s", "\"preset\" needs method gsee");
    } else {
      cfg.N_s = c.integer(s, "schedule", "N_s");
      if (*cfg.N_s < 1) c.fail("schedule.N_s", "must be positive");
    }
  } else {
    cfg.N_s = 100;
  }
  if (s.contains("eta")) cfg.eta = c.number(s, "schedule", "eta");
  if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) c.fail("schedule.eta", "must lie in (0, 1)");

  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    c.only(f, "filter", {"q", "degree", "distance", "intervals"});
    if (f.contains("q") && f.contains("degree")) c.fail("filter.q", "and filter.degree are mutually exclusive");
    if (f.contains("q")) {
      cfg.filter_q = c.number(f, "filter", "q");
      if (!(*cfg.filter_q > 0.0 && *cfg.filter_q < 0.5)) c.fail("filter.q", "must lie in (0, 0.5)");
    }
    if (f.contains("degree")) {
      if (f.at("degree").is_string()) {
        if (f.at("degree").get<std::string>() != "preset") c.fail("filter.degree", "must be an integer or \"preset\"");
      } else {
        cfg.filter_degree = c.integer(f, "filter", "degree");
        if (*cfg.filter_degree < 0) c.fail("filter.degree", "must be nonnegative");
      }
    }
    if (f.contains("distance")) {
      cfg.distance = c.number(f, "filter", "distance");
      if (!(*cfg.distance > 0.0)) c.fail("filter.distance", "must be positive");
    }
    if (f.contains("intervals")) {
      cfg.intervals = c.string(f, "filter", "intervals");
      if (cfg.intervals != "prior" && cfg.intervals != "gap" && cfg.intervals != "full")
        c.fail("filter.intervals", "must be one of prior, gap, full");
    }
  }
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    c.only(p, "prior", {"mode", "value"});
    const auto mode = c.string(p, "prior", "mode");
    if (mode == "oracle") {
      if (p.contains("value")) c.fail("prior.value", "is only allowed with mode injected");
    } else if (mode == "injected") {
      cfg.prior_oracle = false;
      cfg.prior_value = c.number(p, "prior", "value");
    } else {
      c.fail("prior.mode", "must be oracle or injected");
    }
  }
  if (j.contains("qpe")) {
    const auto& q = j.at("qpe");
    c.only(q, "qpe", {"tau", "samples", "readout", "bits"});
    if (q.contains("tau")) cfg.qpe_tau = c.number(q, "qpe", "tau");
    if (!(cfg.qpe_tau > 0.0)) c.fail("qpe.tau", "must be positive");
    if (q.contains("samples")) cfg.qpe_samples = c.integer(q, "qpe", "samples");
    if (cfg.qpe_samples < 1) c.fail("qpe.samples", "must be positive");
    if (q.contains("readout")) {
      const auto r = c.string(q, "qpe", "readout");
      if (r == "minimum") cfg.qpe_readout = QpeReadout::kMinimum;
      else if (r == "lowest-peak") cfg.qpe_readout = QpeReadout::kLowestPeak;
      else if (r == "single") cfg.qpe_readout = QpeReadout::kSingle;
      else c.fail("qpe.readout", "must be one of minimum, lowest-peak, single");
    }
    if (q.contains("bits")) {
      std::vector<int> bits;
      if (!q.at("bits").is_array()) c.fail("qpe.bits", "must be an array of integers");
      for (const auto& b : q.at("bits")) {
        if (!b.is_number_integer() || b.get<int>() < 1 || b.get<int>() > 30) c.fail("qpe.bits", "values must be integers in [1, 30]");
        bits.push_back(b.get<int>());
      }
      if (bits.size() != cfg.point_count()) c.fail("qpe.bits", "must have one entry per sweep point");
      cfg.qpe_bits = bits;
    }
  }

  if (!j.contains("seeds")) c.fail("seeds", "is required");
  if (!j.at("seeds").is_array()) c.fail("seeds", "must be an array of nonnegative integers");
  for (const auto& s2 : j.at("seeds")) {
    if (!config_detail::is_nonnegative_integer(s2)) c.fail("seeds", "must contain nonnegative integers");
    cfg.seeds.push_back(s2.get<std::uint64_t>());
  }
  if (cfg.seeds.empty()) c.fail("seeds", "must not be empty");
  if (j.contains("base_seed")) {
    if (!config_detail::is_nonnegative_integer(j.at("base_seed"))) c.fail("base_seed", "must be a nonnegative integer");
    cfg.base_seed = j.at("base_seed").get<std::uint64_t>();
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    c.only(o, "output", {"dir", "csv", "summary"});
    if (o.contains("dir")) cfg.out_dir = c.string(o, "output", "dir");
    if (o.contains("csv")) cfg.csv_name = c.string(o, "output", "csv");
    if (o.contains("summary")) cfg.summary_name = c.string(o, "output", "summary");
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(io_detail::parse_json(io_detail::read_file(path), path.string()), path.string());
}

// Builds the spectral model named by a validated model section. Relative
// model paths resolve against `base`.
inline SpectralModel build_model(const nlohmann::json& m, const std::filesystem::path& base = {}) {
  const auto builder = m.at("builder").get<std::string>();
  if (builder == "file") {
    std::filesystem::path p = m.at("path").get<std::string>();
    if (p.is_relative() && !base.empty()) p = base / p;
    return load_model(p);
  }
  const auto& p = m.at("params");
  HamiltonianMatrix h;
  if (builder == "tfim") {
    h = build_tfim(p.at("L").get<int>(), p.at("g").get<double>());
  } else {
    std::optional<HubbardSector> sector;
    if (p.contains("sector")) sector = HubbardSector{p.at("sector").at("n_up").get<int>(), p.at("sector").at("n_down").get<int>()};
    h = build_hubbard(p.at("L").get<int>(), p.at("t").get<double>(), p.at("U").get<double>(), sector);
  }
  Eigensystem eig = eigendecompose(h);
  const bool norm = m.value("normalize", true);
  if (norm) eig = normalize(eig);
  ResidualPolicy policy = residual::PseudoRandom{1};
  if (m.contains("residual")) {
    const auto& r = m.at("residual");
    const auto kind = r.at("policy").get<std::string>();
    if (kind == "pseudo-random") policy = residual::PseudoRandom{r.value("seed", std::uint64_t{1})};
    else if (kind == "uniform-excited") policy = residual::UniformExcited{static_cast<std::size_t>(r.at("count").get<int>())};
    else policy = residual::Explicit{r.at("weights").get<std::vector<double>>()};
  }
  return make_spectral_model(eig, m.at("p0").get<double>(), policy, h.label + (norm ? " normalized" : ""));
}

struct SweepRow {
  Method method = Method::kQcels;
  std::string model_label;
  std::uint64_t seed = 0;
  double p0 = 0.0;
  double delta = 0.0;
  int N = 0;
  int N_s = 0;
  int J = 0;
  double tau_J = 0.0;
  double t_max = 0.0;
  double t_total = 0.0;
  double theta_star = 0.0;
  double abs_error = 0.0;
  double wrapped_error = 0.0;
  // Not written to the CSV; used for grouping.
  std::size_t point = 0;
  double epsilon = 0.0;
};

inline const char* kSweepHeader = "method,model_label,seed,p0,delta,N,N_s,J,tau_J,t_max,t_total,theta_star,abs_error,wrapped_error";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    out += to_string(r.method) + "," + csv_field(r.model_label) + "," + std::to_string(r.seed) + "," + format_double(r.p0) +
           "," + format_double(r.delta) + "," + std::to_string(r.N) + "," + std::to_string(r.N_s) + "," + std::to_string(r.J) +
           "," + format_double(r.tau_J) + "," + format_double(r.t_max) + "," + format_double(r.t_total) + "," +
           format_double(r.theta_star) + "," + format_double(r.abs_error) + "," + format_double(r.wrapped_error) + "\n";
  }
  return out;
}

// Least-squares line through (log x, log y): returns (slope, intercept).
inline std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("log-log fit needs at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("log-log fit needs positive data");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct PointSummary {
  Method method = Method::kQcels;
  std::size_t point = 0;
  double epsilon = 0.0;
  double t_max = 0.0;  // median over seeds
  double t_total = 0.0;
  double error_mean = 0.0;
  double error_median = 0.0;
  double success_rate = 0.0;  // fraction with wrapped_error <= epsilon
  int count = 0;
};

inline std::vector<PointSummary> summarize(const std::vector<SweepRow>& rows) {
  std::map<std::pair<Method, std::size_t>, std::vector<const SweepRow*>> groups;
  for (const auto& r : rows) groups[{r.method, r.point}].push_back(&r);
  std::vector<PointSummary> out;
  for (const auto& [key, rs] : groups) {
    PointSummary s{key.first, key.second, rs.front()->epsilon};
    std::vector<double> tm, tt, err;
    int ok = 0;
    for (const auto* r : rs) {
      tm.push_back(r->t_max);
      tt.push_back(r->t_total);
      err.push_back(r->wrapped_error);
      ok += r->wrapped_error <= r->epsilon;
    }
    s.t_max = median(tm);
    s.t_total = median(tt);
    s.error_median = median(err);
    for (double e : err) s.error_mean += e;
    s.error_mean /= static_cast<double>(err.size());
    s.success_rate = static_cast<double>(ok) / static_cast<double>(rs.size());
    s.count = static_cast<int>(rs.size());
    out.push_back(s);
  }
  return out;
}

struct ExperimentOutput {
  std::vector<SweepRow> rows;
  nlohmann::json summary;
};

struct RunOptions {
  int threads = 1;
  bool with_slopes = false;
  std::filesystem::path config_dir;  // base for relative model paths
  std::function<void(const std::string&)> log;  // progress messages
};

namespace experiment_detail {

// Runs task(i) for i in [0, n) on up to `threads` workers; exceptions are
// rethrown in index order after all workers stop.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1 || n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline int qpe_bits_for(const ExperimentConfig& cfg, std::size_t point) {
  if (cfg.qpe_bits) return (*cfg.qpe_bits)[point];
  if (cfg.axis() == SweepAxis::kTmax) {
    const double k = std::log2(cfg.tmax[point] / cfg.qpe_tau + 1.0);
    return std::clamp(static_cast<int>(std::lround(k)), 1, 30);
  }
  // Smallest K whose half grid spacing pi / (2^K tau) is at most epsilon.
  const double k = std::ceil(std::log2(kPi / (cfg.qpe_tau * cfg.epsilons[point])));
  return std::clamp(static_cast<int>(k), 1, 30);
}

}  // namespace experiment_detail

// Executes every (method, point, seed) combination. Rows come back sorted by
// (method, point, seed index) whatever the thread count.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {}) {
  using experiment_detail::qpe_bits_for;
  auto log = [&](const std::string& s) {
    if (opt.log) opt.log(s);
  };
  const SpectralModel model = build_model(cfg.model, opt.config_dir);
  log("model " + model.label + ": " + std::to_string(model.size()) + " levels");
  const CounterRng root(cfg.base_seed);
  auto seed_stream = [&](std::uint64_t seed) { return root.split(seed); };

  const bool gsee = std::find(cfg.methods.begin(), cfg.methods.end(), Method::kGsee) != cfg.methods.end();
  double distance = std::numeric_limits<double>::infinity();
  int preset_degree = 0;
  std::vector<FourierFilter> filters(cfg.seeds.size());
  std::vector<double> priors(cfg.seeds.size(), 0.0);
  int gsee_shots = cfg.N_s.value_or(0);
  if (gsee) {
    if (cfg.intervals == "full") {
      distance = std::numeric_limits<double>::infinity();
    } else if (cfg.distance) {
      distance = *cfg.distance;
    } else if (cfg.intervals == "gap") {
      if (model.size() < 2) throw DomainError("gap intervals need at least two levels");
      distance = (model.eigenvalues[1] - model.eigenvalues[0]) / 2;
    } else {
      distance = interval_distance(model);
    }
    if (std::isfinite(distance)) preset_degree = default_filter_degree(distance);
    experiment_detail::parallel_for(cfg.seeds.size(), opt.threads, [&](std::size_t i) {
      IntervalPair iv;
      if (std::isfinite(distance)) {
        const PriorMode mode = cfg.prior_oracle ? PriorMode{OraclePrior{}} : PriorMode{InjectedPrior{cfg.prior_value}};
        priors[i] = rough_estimate(model, mode, distance, seed_stream(cfg.seeds[i]));
        iv = prior_intervals(priors[i], distance);
      } else {
        priors[i] = model.ground_energy();
      }
      if (cfg.filter_q) filters[i] = build_filter(iv, *cfg.filter_q);
      else filters[i] = build_filter_with_degree(iv, cfg.filter_degree.value_or(preset_degree));
    });
    if (!cfg.N_s) gsee_shots = default_gsee_shots(model.ground_weight(), filters.front().degree);
    log("gsee: D = " + format_double(distance) + ", d = " + std::to_string(filters.front().degree) +
        ", N_s = " + std::to_string(gsee_shots));
  }

  struct Task {
    Method method;
    std::size_t point;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (auto m : cfg.methods)
    for (std::size_t p = 0; p < cfg.point_count(); ++p)
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({m, p, s});

  std::vector<SweepRow> rows(tasks.size());
  std::atomic<std::size_t> done{0};
  std::mutex log_mutex;
  experiment_detail::parallel_for(tasks.size(), opt.threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    const std::uint64_t seed = cfg.seeds[t.seed_index];
    const double eps = cfg.epsilons[t.point];
    const CounterRng rng = seed_stream(seed);
    SweepRow row;
    row.method = t.method;
    row.model_label = model.label;
    row.seed = seed;
    row.p0 = model.ground_weight();
    row.point = t.point;
    row.epsilon = eps;
    if (t.method == Method::kQpe) {
      QpeConfig qc;
      qc.bits = qpe_bits_for(cfg, t.point);
      qc.tau = cfg.qpe_tau;
      qc.runs = 1;
      qc.samples = cfg.qpe_samples;
      qc.readout = cfg.qpe_readout;
      const auto est = qpe_estimate(model, qc, rng.split(std::string_view("qpe")));
      row.N = static_cast<int>(std::ldexp(1.0, qc.bits)) - 1;
      row.N_s = qc.shots_per_run();
      row.J = qc.bits;
      row.tau_J = qc.tau;
      row.delta = eps * row.N * row.tau_J;
      row.t_max = est.t_max;
      row.t_total = est.t_total;
      row.theta_star = est.runs.front().estimate;
      row.abs_error = est.runs.front().abs_error;
      row.wrapped_error = est.runs.front().wrapped_error;
    } else {
      const int shots = t.method == Method::kGsee ? gsee_shots : cfg.N_s.value_or(100);
      const LevelSchedule sched = build_schedule(cfg.delta, eps, cfg.N, shots, cfg.eta);
      const CounterRng data = rng.split(std::string_view("levels"));
      const EstimateResult r = t.method == Method::kGsee
                                   ? run_gsee_small_overlap(model, filters[t.seed_index], sched, data)
                                   : run_multilevel(model, sched, data);
      row.delta = cfg.delta;
      row.N = cfg.N;
      row.N_s = shots;
      row.J = sched.J;
      row.tau_J = sched.tau_last();
      row.t_max = r.t_max;
      row.t_total = r.t_total;
      row.theta_star = r.theta_star;
      row.abs_error = r.abs_error;
      row.wrapped_error = r.wrapped_error;
    }
    rows[i] = row;
    const auto k = ++done;
    if (opt.log && (k % 10 == 0 || k == tasks.size())) {
      std::lock_guard lock(log_mutex);
      opt.log("completed " + std::to_string(k) + "/" + std::to_string(tasks.size()) + " runs");
    }
  });

  ExperimentOutput out;
  out.rows = std::move(rows);
  const auto points = summarize(out.rows);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& s : points)
    pts.push_back({{"method", to_string(s.method)},
                   {"point", s.point},
                   {"epsilon", s.epsilon},
                   {"t_max_median", s.t_max},
                   {"t_total_median", s.t_total},
                   {"error_mean", s.error_mean},
                   {"error_median", s.error_median},
                   {"success_rate", s.success_rate},
                   {"runs", s.count}});
  nlohmann::json seeds = nlohmann::json::array();
  for (auto s : cfg.seeds) seeds.push_back(s);
  out.summary = {{"tool", "qcels"},
                 {"version", QCELS_VERSION},
                 {"label", cfg.label},
                 {"config_digest", cfg.digest},
                 {"base_seed", cfg.base_seed},
                 {"seeds", seeds},
                 {"model", {{"label", model.label}, {"levels", model.size()}, {"p0", model.ground_weight()},
                            {"ground_energy", model.ground_energy()}}},
                 {"axis", cfg.axis() == SweepAxis::kEpsilon ? "epsilon" : "tmax"},
                 {"points", pts}};
  if (gsee) {
    nlohmann::json pri = nlohmann::json::array();
    for (double p : priors) pri.push_back(p);
    out.summary["gsee"] = {{"distance", std::isfinite(distance) ? nlohmann::json(distance) : nlohmann::json(nullptr)},
                           {"filter_degree", filters.front().degree},
                           {"filter_q", filters.front().q},
                           {"N_s", gsee_shots},
                           {"lambda_prior", pri}};
  }
  if (opt.with_slopes) {
    nlohmann::json slopes = nlohmann::json::object();
    for (auto m : cfg.methods) {
      std::vector<double> tm, tt, err;
      for (const auto& s : points) {
        if (s.method != m || !(s.error_mean > 0.0)) continue;
        tm.push_back(s.t_max);
        tt.push_back(s.t_total);
        err.push_back(s.error_mean);
      }
      if (tm.size() < 2) continue;
      const auto [a, b] = loglog_fit(tm, err);
      const auto [c, d] = loglog_fit(tt, err);
      slopes[to_string(m)] = {{"error_vs_t_max", {{"slope", a}, {"constant", std::exp(b)}}},
                              {"error_vs_t_total", {{"slope", c}, {"constant", std::exp(d)}}}};
    }
    out.summary["slopes"] = slopes;
  }
  return out;
}

// Writes <out_dir>/<csv> and <out_dir>/<summary>.
inline void write_experiment(const ExperimentConfig& cfg, const ExperimentOutput& out,
                             const std::optional<std::filesystem::path>& out_dir = std::nullopt) {
  const auto dir = out_dir.value_or(cfg.out_dir);
  io_detail::write_file(dir / cfg.csv_name, sweep_csv(out.rows));
  io_detail::write_file(dir / cfg.summary_name, out.summary.dump(2) + "\n");
}

}  // namespace qcels
