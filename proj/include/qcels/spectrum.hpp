#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "qcels/error.hpp"
#include "qcels/rng.hpp"

namespace qcels {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

// Dense Hermitian operator in energy units.
struct HamiltonianMatrix {
  Eigen::MatrixXcd entries;
  std::string label;

  Eigen::Index dim() const noexcept { return entries.rows(); }
};

// Largest elementwise |H - H^dagger|.
inline double hermiticity_defect(const Eigen::MatrixXcd& h) {
  if (h.rows() != h.cols()) return std::numeric_limits<double>::infinity();
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const HamiltonianMatrix& h) {
  if (h.dim() < 1 || h.entries.rows() != h.entries.cols())
    throw ContractViolation("Hamiltonian must be a non-empty square matrix");
  const double scale = std::max(1.0, h.entries.cwiseAbs().maxCoeff());
  const double defect = hermiticity_defect(h.entries);
  if (defect > 1e-12 * scale) {
    std::ostringstream os;
    os << "Hamiltonian '" << h.label << "' is not Hermitian (max |H-H^+| = " << defect << ")";
    throw ContractViolation(os.str());
  }
}

// Eigenpairs, ascending eigenvalues; column m of `vectors` is |psi_m>.
struct Eigensystem {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;

  Eigen::Index size() const noexcept { return values.size(); }
};

// Dense Hermitian eigensolver. Real-symmetric inputs (all imaginary parts
// exactly zero) take the real path, which is several times faster.
inline Eigensystem eigendecompose(const HamiltonianMatrix& h) {
  require_hermitian(h);
  Eigensystem out;
  if (h.entries.imag().cwiseAbs().maxCoeff() == 0.0) {
    const Eigen::MatrixXd real = h.entries.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(real, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw Error("eigensolver failed to converge");
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors().cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.entries, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw Error("eigensolver failed to converge");
    out.values = solver.eigenvalues();
    out.vectors = solver.eigenvectors();
  }
  return out;
}

// ||H||_2 from the spectrum (largest |lambda|).
inline double spectral_norm(const Eigensystem& eig) {
  return eig.values.size() == 0 ? 0.0 : eig.values.cwiseAbs().maxCoeff();
}

inline double normalization_factor(double norm) {
  if (!(norm > 0.0)) throw DegenerateInputError("cannot normalize a zero operator");
  return kPi / (4.0 * norm);
}

// pi H / (4 ||H||_2): spectrum lands in [-pi/4, pi/4].
inline HamiltonianMatrix normalize(const HamiltonianMatrix& h) {
  const double factor = normalization_factor(spectral_norm(eigendecompose(h)));
  return {h.entries * factor, h.label + " normalized"};
}

// Same rescaling applied to an existing eigensystem (no second solve).
inline Eigensystem normalize(const Eigensystem& eig) {
  const double factor = normalization_factor(spectral_norm(eig));
  return {eig.values * factor, eig.vectors};
}

// Eigenvalues and overlap weights of the initial state: everything an
// estimator can observe about the quantum system.
struct SpectralModel {
  std::vector<double> eigenvalues;  // strictly ascending, in [-pi, pi)
  std::vector<double> weights;      // nonnegative, sum to 1
  std::string label;

  std::size_t size() const noexcept { return eigenvalues.size(); }
  double ground_energy() const { return eigenvalues.front(); }
  double ground_weight() const { return weights.front(); }

  void validate() const {
    if (eigenvalues.empty()) throw ContractViolation("spectral model is empty");
    if (eigenvalues.size() != weights.size())
      throw ContractViolation("eigenvalues and weights differ in length");
    double sum = 0.0;
    for (std::size_t m = 0; m < size(); ++m) {
      const double lam = eigenvalues[m];
      if (!std::isfinite(lam) || lam < -kPi || lam >= kPi) {
        std::ostringstream os;
        os << "eigenvalue[" << m << "] = " << lam << " outside [-pi, pi)";
        throw DomainError(os.str());
      }
      if (m > 0 && !(lam > eigenvalues[m - 1])) {
        std::ostringstream os;
        os << "eigenvalues not strictly ascending at index " << m;
        throw ContractViolation(os.str());
      }
      if (!(weights[m] >= 0.0) || !std::isfinite(weights[m])) {
        std::ostringstream os;
        os << "weight[" << m << "] = " << weights[m] << " is negative or not finite";
        throw DomainError(os.str());
      }
      sum += weights[m];
    }
    if (std::abs(sum - 1.0) > 1e-10) {
      std::ostringstream os;
      os.precision(17);
      os << "weights sum to " << sum << ", expected 1";
      throw ContractViolation(os.str());
    }
  }
};

// How the weight 1 - p0 not on the ground state is spread over the rest.
namespace residual {

// Seeded random state: Gaussian vector, projected on excited eigenvectors,
// weights proportional to squared components.
struct PseudoRandom {
  std::uint64_t seed = 1;
};

// Even split over the K lowest excited (distinct) levels.
struct UniformExcited {
  std::size_t count = 1;
};

// Weights for the excited levels in ascending order; must sum to 1 - p0.
struct Explicit {
  std::vector<double> excited_weights;
};

}  // namespace residual

using ResidualPolicy = std::variant<residual::PseudoRandom, residual::UniformExcited, residual::Explicit>;

namespace detail {

// Groups ascending eigenvalues into blocks whose spread is within `tol`.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> degenerate_blocks(const Eigen::VectorXd& values,
                                                                             double tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;
  Eigen::Index start = 0;
  for (Eigen::Index i = 1; i <= values.size(); ++i) {
    if (i == values.size() || values[i] - values[start] > tol) {
      blocks.emplace_back(start, i);
      start = i;
    }
  }
  return blocks;
}

inline double degeneracy_tolerance(const Eigen::VectorXd& values) {
  return 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
}

}  // namespace detail

// Builds the initial-state model: weight p0 on the ground eigenvector (the
// first vector of a degenerate ground block), 1 - p0 spread per `policy`.
// Degenerate excited eigenvectors are merged into one level; levels with
// exactly zero weight are dropped.
inline SpectralModel make_spectral_model(const Eigensystem& eig, double p0, const ResidualPolicy& policy,
                                         std::string label = {}) {
  if (!(p0 > 0.0 && p0 <= 1.0)) {
    std::ostringstream os;
    os << "p0 = " << p0 << " outside (0, 1]";
    throw DomainError(os.str());
  }
  if (eig.size() == 0) throw ContractViolation("empty eigensystem");

  const auto blocks = detail::degenerate_blocks(eig.values, detail::degeneracy_tolerance(eig.values));
  const std::size_t levels = blocks.size();
  std::vector<double> level_weight(levels, 0.0);
  level_weight[0] = p0;
  const double rest = 1.0 - p0;

  if (rest > 0.0) {
    if (levels < 2) throw DomainError("p0 < 1 but the spectrum has no excited level");
    std::visit(
        [&](const auto& pol) {
          using P = std::decay_t<decltype(pol)>;
          if constexpr (std::is_same_v<P, residual::PseudoRandom>) {
            const Eigen::Index dim = eig.vectors.rows();
            RngCursor cur(CounterRng(pol.seed).split("residual-state"));
            Eigen::VectorXcd v(dim);
            for (Eigen::Index i = 0; i < dim; ++i) {
              const double re = cur.normal();
              const double im = cur.normal();
              v[i] = cplx(re, im);
            }
            // Components outside the ground block; orthogonal to the ground space.
            const Eigen::Index first_excited = blocks[0].second;
            const Eigen::Index n_exc = eig.size() - first_excited;
            const Eigen::VectorXcd comps = eig.vectors.rightCols(n_exc).adjoint() * v;
            double total = 0.0;
            for (std::size_t b = 1; b < levels; ++b) {
              double w = 0.0;
              for (Eigen::Index i = blocks[b].first; i < blocks[b].second; ++i)
                w += std::norm(comps[i - first_excited]);
              level_weight[b] = w;
              total += w;
            }
            if (!(total > 0.0)) throw DegenerateInputError("random residual state has no excited component");
            for (std::size_t b = 1; b < levels; ++b) level_weight[b] *= rest / total;
          } else if constexpr (std::is_same_v<P, residual::UniformExcited>) {
            if (pol.count < 1 || pol.count > levels - 1) {
              std::ostringstream os;
              os << "uniform-excited count " << pol.count << " outside [1, " << levels - 1 << "]";
              throw DomainError(os.str());
            }
            for (std::size_t b = 1; b <= pol.count; ++b) level_weight[b] = rest / static_cast<double>(pol.count);
          } else {
            const auto& w = pol.excited_weights;
            if (w.size() > levels - 1) throw DomainError("explicit weight list longer than the excited spectrum");
            double sum = 0.0;
            for (double x : w) {
              if (!(x >= 0.0)) throw DomainError("explicit weights must be nonnegative");
              sum += x;
            }
            if (std::abs(sum - rest) > 1e-10) throw DomainError("explicit weights must sum to 1 - p0");
            for (std::size_t b = 0; b < w.size(); ++b) level_weight[b + 1] = w[b];
          }
        },
        policy);
  }

  SpectralModel model;
  model.label = std::move(label);
  for (std::size_t b = 0; b < levels; ++b) {
    if (b > 0 && level_weight[b] == 0.0) continue;
    model.eigenvalues.push_back(eig.values[blocks[b].first]);
    model.weights.push_back(level_weight[b]);
  }
  model.validate();
  return model;
}

// Closed interval [lo, hi].
struct Interval {
  double lo = -kPi;
  double hi = kPi;

  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  double width() const noexcept { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

// I inside I' with separation D = dist([-pi, pi] \ I', I). When I' covers
// the whole of [-pi, pi] the complement is empty and D is +infinity.
struct IntervalPair {
  Interval inner;
  Interval outer;
  double distance = std::numeric_limits<double>::infinity();

  static double separation(const Interval& inner, const Interval& outer) noexcept {
    double d = std::numeric_limits<double>::infinity();
    if (outer.lo > -kPi) d = std::min(d, inner.lo - outer.lo);
    if (outer.hi < kPi) d = std::min(d, outer.hi - inner.hi);
    return d;
  }

  bool covers_everything() const noexcept { return outer.lo <= -kPi && outer.hi >= kPi; }

  static IntervalPair make(Interval inner, Interval outer) {
    if (!(inner.lo <= inner.hi) || !(outer.lo <= outer.hi))
      throw DomainError("interval endpoints out of order");
    if (inner.lo < -kPi || outer.lo < -kPi || inner.hi > kPi || outer.hi > kPi)
      throw DomainError("intervals must lie in [-pi, pi]");
    if (inner.lo < outer.lo || inner.hi > outer.hi) throw DomainError("I must be contained in I'");
    IntervalPair p{inner, outer, separation(inner, outer)};
    if (!(p.distance > 0.0)) throw DomainError("intervals I and I' must be separated by D > 0");
    return p;
  }
};

// p0 1[lambda_0 in I] / sum_{lambda_k in I'} p_k.
inline double relative_overlap(const SpectralModel& model, const IntervalPair& iv) {
  double denom = 0.0;
  for (std::size_t k = 0; k < model.size(); ++k)
    if (iv.outer.contains(model.eigenvalues[k])) denom += model.weights[k];
  if (!(denom > 0.0)) throw UndefinedOverlapError("no weight inside I'; relative overlap undefined");
  const double num = iv.inner.contains(model.ground_energy()) ? model.ground_weight() : 0.0;
  return num / denom;
}

}  // namespace qcels
