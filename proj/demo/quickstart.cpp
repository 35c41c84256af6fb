// Estimate the ground energy of a normalized TFIM chain with multi-level QCELS.
#include <iostream>

#include "qcels/qcels.hpp"

int main() {
  using namespace qcels;
  const Eigensystem eig = normalize(eigendecompose(build_tfim(8, 4.0)));
  const SpectralModel model = make_spectral_model(eig, 0.8, residual::PseudoRandom{1});

  const LevelSchedule sched = build_schedule(/*delta=*/1.0, /*epsilon=*/1.0 / 256, /*N=*/5, /*N_s=*/100);
  const EstimateResult r = run_multilevel(model, sched, CounterRng(42));

  std::cout << "lambda_0      " << model.ground_energy() << "\n"
            << "estimate      " << r.theta_star << "\n"
            << "error         " << r.wrapped_error << "\n"
            << "T_max         " << r.t_max << "\n"
            << "T_total       " << r.t_total << "\n";
  for (const auto& h : r.history)
    std::cout << "  tau " << h.tau << "  [" << h.lambda_min << ", " << h.lambda_max << "]  theta* " << h.theta_star << "\n";
}
