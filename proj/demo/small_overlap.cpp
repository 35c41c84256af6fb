// Filtered ground-energy estimation for a Hubbard chain with p0 = 0.4.
#include <iostream>

#include "qcels/qcels.hpp"

int main() {
  using namespace qcels;
  const Eigensystem eig = normalize(eigendecompose(build_hubbard(4, 1.0, 10.0)));
  const SpectralModel model = make_spectral_model(eig, 0.4, residual::PseudoRandom{1});

  const double D = interval_distance(model);
  const CounterRng rng(7);
  const double prior = rough_estimate(model, OraclePrior{}, D, rng);
  const IntervalPair iv = prior_intervals(prior, D);
  const FourierFilter filter = build_filter_with_degree(iv, default_filter_degree(D));
  std::cout << "D " << D << ", filter degree " << filter.degree << ", achieved q " << filter.q
            << ", relative overlap " << relative_overlap(model, iv) << "\n";

  const int shots = default_gsee_shots(model.ground_weight(), filter.degree);
  const LevelSchedule sched = build_schedule(1.0, 1.0 / 256, 5, shots);
  const EstimateResult r = run_gsee_small_overlap(model, filter, sched, rng.split(std::string_view("levels")));
  std::cout << "lambda_0 " << model.ground_energy() << "  estimate " << r.theta_star << "  error " << r.wrapped_error
            << "  T_max " << r.t_max << "\n";
}
