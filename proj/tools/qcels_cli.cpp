// qcels: model building, dataset generation and experiment sweeps.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>

#include "qcels/qcels.hpp"

namespace {

using namespace qcels;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("qcels");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("QCELS_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

struct ModelBuildArgs {
  std::string builder = "tfim";
  int sites = 8;
  double g = 4.0;
  double hopping = 1.0;
  double interaction = 10.0;
  std::vector<int> sector;
  double p0 = 0.8;
  std::string residual = "pseudo-random";
  std::uint64_t residual_seed = 1;
  int count = 1;
  bool raw = false;
  std::string out;
};

int model_build(const ModelBuildArgs& a) {
  nlohmann::json spec{{"builder", a.builder}, {"p0", a.p0}, {"normalize", !a.raw}};
  if (a.builder == "tfim") {
    spec["params"] = {{"L", a.sites}, {"g", a.g}};
  } else {
    spec["params"] = {{"L", a.sites}, {"t", a.hopping}, {"U", a.interaction}};
    if (!a.sector.empty()) {
      if (a.sector.size() != 2) throw ParseError("--sector takes two integers: n_up n_down");
      spec["params"]["sector"] = {{"n_up", a.sector[0]}, {"n_down", a.sector[1]}};
    }
  }
  if (a.residual == "pseudo-random") spec["residual"] = {{"policy", a.residual}, {"seed", a.residual_seed}};
  else spec["residual"] = {{"policy", a.residual}, {"count", a.count}};
  // Reuse the config validator so flags and config files obey the same rules.
  config_detail::check_model(config_detail::Checker("model build"), spec);
  spdlog::info("diagonalizing {} model", a.builder);
  const SpectralModel m = build_model(spec);
  if (a.out.empty()) std::cout << to_json(m).dump(2) << "\n";
  else save_model(a.out, m);
  spdlog::info("model {} with {} levels, lambda_0 = {}", m.label, m.size(), m.ground_energy());
  return 0;
}

int model_inspect(const std::string& path) {
  const SpectralModel m = load_model(path);
  nlohmann::json j{{"label", m.label},
                   {"levels", m.size()},
                   {"ground_energy", m.ground_energy()},
                   {"p0", m.ground_weight()},
                   {"spectral_radius", std::max(std::abs(m.eigenvalues.front()), std::abs(m.eigenvalues.back()))}};
  if (m.size() > 1) j["gap"] = m.eigenvalues[1] - m.eigenvalues[0];
  try {
    const double d = interval_distance(m);
    j["interval_distance"] = d;
    j["preset_degree"] = default_filter_degree(d);
  } catch (const Error&) {
    j["interval_distance"] = nullptr;
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  int threads = 1;
  std::string axis;
};

int run(const RunArgs& a, bool sweep) {
  ExperimentConfig cfg = load_config(a.config);
  if (a.seed) cfg.base_seed = *a.seed;
  if (sweep) {
    if (a.axis == "tmax" && cfg.tmax.empty()) {
      for (double e : cfg.epsilons) cfg.tmax.push_back(cfg.delta / e);
    } else if (a.axis == "epsilon" && !cfg.tmax.empty()) {
      cfg.tmax.clear();
    }
    if (cfg.point_count() < 3) throw ParseError(a.config + ": field 'schedule' needs at least 3 sweep points for a sweep");
  }
  RunOptions opt;
  opt.threads = a.threads;
  opt.with_slopes = sweep;
  opt.config_dir = std::filesystem::path(a.config).parent_path();
  opt.log = [](const std::string& s) { spdlog::info("{}", s); };
  const auto out = run_experiment(cfg, opt);
  const std::filesystem::path dir = a.out_dir.empty() ? cfg.out_dir : std::filesystem::path(a.out_dir);
  write_experiment(cfg, out, dir);
  spdlog::info("wrote {} rows to {}", out.rows.size(), (dir / cfg.csv_name).string());
  return 0;
}

struct DatasetArgs {
  std::string model;
  std::string filter;
  double tau = 0.1;
  int n_points = 5;
  int shots = 100;
  std::uint64_t seed = 0;
  bool noiseless = false;
  std::string out;
};

int dataset(const DatasetArgs& a) {
  const SpectralModel m = load_model(a.model);
  const CounterRng rng(a.seed);
  SamplerOptions so;
  so.noiseless = a.noiseless;
  const TimeSeriesDataset ds = a.filter.empty()
                                   ? generate_dataset(m, a.tau, a.n_points, a.shots, rng, so)
                                   : generate_filtered_dataset(m, load_filter(a.filter), a.tau, a.n_points, a.shots, rng, so);
  save_dataset(a.out, ds);
  return 0;
}

struct FilterArgs {
  std::vector<double> inner, outer;
  std::optional<double> q;
  std::optional<int> degree;
  std::string out;
};

int filter_build(const FilterArgs& a) {
  const auto iv = IntervalPair::make({a.inner.at(0), a.inner.at(1)}, {a.outer.at(0), a.outer.at(1)});
  FourierFilter f;
  if (a.q) f = build_filter(iv, *a.q);
  else if (a.degree) f = build_filter_with_degree(iv, *a.degree);
  else f = build_filter_with_degree(iv, default_filter_degree(iv.distance));
  spdlog::info("filter degree {}, achieved q {}, one-norm {}", f.degree, f.q, f.one_norm());
  if (a.out.empty()) std::cout << to_json(f).dump(2) << "\n";
  else save_filter(a.out, f);
  return 0;
}

int fit_dataset(const std::string& stem, double lo, double hi) {
  const TimeSeriesDataset ds = load_dataset(stem);
  std::cout << to_json(fit(ds, lo, hi)).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"QCELS phase estimation: models, datasets, filters and experiment sweeps"};
  app.set_version_flag("--version", std::string(QCELS_VERSION));
  app.require_subcommand(1);

  auto* model = app.add_subcommand("model", "Build or inspect spectral models");
  model->require_subcommand(1);
  ModelBuildArgs mb;
  auto* build = model->add_subcommand("build", "Diagonalize a Hamiltonian and write a spectral model");
  build->add_option("--builder", mb.builder, "Hamiltonian family")->check(CLI::IsMember({"tfim", "hubbard"}));
  build->add_option("--L", mb.sites, "Site count");
  build->add_option("--g", mb.g, "TFIM transverse field");
  build->add_option("--t", mb.hopping, "Hubbard hopping");
  build->add_option("--U", mb.interaction, "Hubbard interaction");
  build->add_option("--sector", mb.sector, "Hubbard particle sector: n_up n_down")->expected(2);
  build->add_option("--p0", mb.p0, "Ground-state overlap");
  build->add_option("--residual", mb.residual, "Residual weight policy")
      ->check(CLI::IsMember({"pseudo-random", "uniform-excited"}));
  build->add_option("--residual-seed", mb.residual_seed, "Seed of the pseudo-random residual state");
  build->add_option("--count", mb.count, "Excited levels for uniform-excited");
  build->add_flag("--raw", mb.raw, "Skip normalization to spectral radius pi/4");
  build->add_option("-o,--output", mb.out, "Output model JSON (stdout if omitted)");
  std::string inspect_path;
  auto* inspect = model->add_subcommand("inspect", "Summarize a model file");
  inspect->add_option("model", inspect_path, "Model JSON")->required()->check(CLI::ExistingFile);

  RunArgs ra;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment config");
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a sweep and fit log-log slopes");
  for (auto* cmd : {run_cmd, sweep_cmd}) {
    cmd->add_option("config", ra.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", ra.seed, "Top-level seed (overrides base_seed)");
    cmd->add_option("--out-dir", ra.out_dir, "Output directory (overrides output.dir)");
    cmd->add_option("--threads", ra.threads, "Worker threads")->check(CLI::PositiveNumber);
  }
  ra.axis = "epsilon";
  sweep_cmd->add_option("--axis", ra.axis, "Sweep axis")->check(CLI::IsMember({"epsilon", "tmax"}));

  DatasetArgs da;
  auto* ds_cmd = app.add_subcommand("dataset", "Simulate a Hadamard-test dataset");
  ds_cmd->add_option("--model", da.model, "Model JSON")->required()->check(CLI::ExistingFile);
  ds_cmd->add_option("--filter", da.filter, "Filter JSON (filtered data)")->check(CLI::ExistingFile);
  ds_cmd->add_option("--tau", da.tau, "Time step");
  ds_cmd->add_option("--N", da.n_points, "Points");
  ds_cmd->add_option("--Ns", da.shots, "Shots per point");
  ds_cmd->add_option("--seed", da.seed, "Seed");
  ds_cmd->add_flag("--noiseless", da.noiseless, "Exact expectations instead of shots");
  ds_cmd->add_option("-o,--output", da.out, "Output stem (<stem>.csv, <stem>.json)")->required();

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Eigenvalue filters");
  filter->require_subcommand(1);
  auto* fbuild = filter->add_subcommand("build", "Build a filter for I inside I'");
  fbuild->add_option("--I", fa.inner, "Inner interval a b")->expected(2)->required();
  fbuild->add_option("--Iprime", fa.outer, "Outer interval a b")->expected(2)->required();
  auto* qopt = fbuild->add_option("--q", fa.q, "Target uniform error");
  fbuild->add_option("--degree", fa.degree, "Fixed degree (q measured)")->excludes(qopt);
  fbuild->add_option("-o,--output", fa.out, "Output filter JSON (stdout if omitted)");

  std::string fit_stem;
  double fit_lo = -kPi, fit_hi = kPi;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a saved dataset");
  fit_cmd->add_option("dataset", fit_stem, "Dataset stem")->required();
  fit_cmd->add_option("--lo", fit_lo, "Search interval start");
  fit_cmd->add_option("--hi", fit_hi, "Search interval end");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*build) return model_build(mb);
    if (*inspect) return model_inspect(inspect_path);
    if (*run_cmd) return run(ra, false);
    if (*sweep_cmd) return run(ra, true);
    if (*ds_cmd) return dataset(da);
    if (*fbuild) return filter_build(fa);
    if (*fit_cmd) return fit_dataset(fit_stem, fit_lo, fit_hi);
  } catch (const ParseError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const InfeasibleError& e) {
    spdlog::error("infeasible: {} (best achieved {})", e.what(), e.best_achieved());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
