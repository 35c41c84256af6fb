#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "qcels/spectrum.hpp"

namespace qcels {

// Largest matrix dimension the dense builders will produce.
inline constexpr Eigen::Index kMaxDenseDim = 4900;

// Periodic 1-D transverse-field Ising chain
//   H = -(sum_i Z_i Z_{i+1} + Z_L Z_1) - g sum_i X_i.
// Bit i of a basis index is site i, with Z = +1 on bit value 0.
inline HamiltonianMatrix build_tfim(int sites, double g) {
  if (sites < 2 || sites > 12) {
    std::ostringstream os;
    os << "TFIM site count " << sites << " outside [2, 12]";
    throw SizeError(os.str());
  }
  const Eigen::Index dim = Eigen::Index{1} << sites;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    double zz = 0.0;
    for (int i = 0; i < sites; ++i) {
      const int j = (i + 1) % sites;
      const int zi = ((s >> i) & 1) ? -1 : 1;
      const int zj = ((s >> j) & 1) ? -1 : 1;
      zz += zi * zj;
    }
    h(s, s) = -zz;
    for (int i = 0; i < sites; ++i) h(s ^ (Eigen::Index{1} << i), s) += -g;
  }
  std::ostringstream label;
  label << "tfim(L=" << sites << ",g=" << g << ")";
  return {h.cast<cplx>(), label.str()};
}

// Fixed particle numbers per spin species.
struct HubbardSector {
  int n_up = 0;
  int n_down = 0;
};

namespace detail {

// Fermionic sign of c_mode acting on `state`: parity of occupied modes below.
inline int jw_sign(std::uint64_t state, int mode) noexcept {
  const std::uint64_t below = state & ((std::uint64_t{1} << mode) - 1);
  return (std::popcount(below) & 1) ? -1 : 1;
}

}  // namespace detail

// Open-boundary 1-D Hubbard chain
//   H = -t sum_{j,s} (c+_{j,s} c_{j+1,s} + h.c.) + U sum_j (n_up - 1/2)(n_down - 1/2)
// in the occupation basis. Mode order: up spins on sites 0..L-1, then down
// spins on sites 0..L-1; Jordan-Wigner strings follow that order.
inline HamiltonianMatrix build_hubbard(int sites, double hopping, double interaction,
                                       std::optional<HubbardSector> sector = std::nullopt) {
  if (sites < 1 || sites > 16) {
    std::ostringstream os;
    os << "Hubbard site count " << sites << " outside [1, 16]";
    throw SizeError(os.str());
  }
  const int modes = 2 * sites;
  const std::uint64_t site_mask = (std::uint64_t{1} << sites) - 1;

  std::vector<std::uint64_t> basis;
  if (sector) {
    if (sector->n_up < 0 || sector->n_up > sites || sector->n_down < 0 || sector->n_down > sites)
      throw SizeError("Hubbard sector particle numbers outside [0, L]");
    for (std::uint64_t up = 0; up <= site_mask; ++up) {
      if (std::popcount(up) != sector->n_up) continue;
      for (std::uint64_t dn = 0; dn <= site_mask; ++dn)
        if (std::popcount(dn) == sector->n_down) basis.push_back(up | (dn << sites));
      if (static_cast<Eigen::Index>(basis.size()) > kMaxDenseDim) break;
    }
  } else {
    if (sites > 6) {
      std::ostringstream os;
      os << "full Hubbard space 4^" << sites << " exceeds 4096; give a particle sector";
      throw SizeError(os.str());
    }
    for (std::uint64_t s = 0; s < (std::uint64_t{1} << modes); ++s) basis.push_back(s);
  }
  const auto dim = static_cast<Eigen::Index>(basis.size());
  if (dim > kMaxDenseDim || dim == 0) {
    std::ostringstream os;
    os << "Hubbard dimension " << dim << " infeasible for dense diagonalization";
    throw SizeError(os.str());
  }

  std::unordered_map<std::uint64_t, Eigen::Index> index_of;
  index_of.reserve(basis.size());
  for (Eigen::Index i = 0; i < dim; ++i) index_of.emplace(basis[i], i);

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    const std::uint64_t s = basis[col];
    double diag = 0.0;
    for (int j = 0; j < sites; ++j) {
      const double nu = static_cast<double>((s >> j) & 1);
      const double nd = static_cast<double>((s >> (j + sites)) & 1);
      diag += (nu - 0.5) * (nd - 0.5);
    }
    h(col, col) += interaction * diag;

    for (int spin = 0; spin < 2; ++spin) {
      for (int j = 0; j + 1 < sites; ++j) {
        const int a = j + spin * sites;
        const int b = a + 1;
        // c+_a c_b and c+_b c_a
        for (const auto& [to, from] : {std::pair{a, b}, std::pair{b, a}}) {
          if (!((s >> from) & 1) || ((s >> to) & 1)) continue;
          const std::uint64_t mid = s ^ (std::uint64_t{1} << from);
          const int sign = detail::jw_sign(s, from) * detail::jw_sign(mid, to);
          const std::uint64_t target = mid | (std::uint64_t{1} << to);
          h(index_of.at(target), col) += -hopping * sign;
        }
      }
    }
  }
  std::ostringstream label;
  label << "hubbard(L=" << sites << ",t=" << hopping << ",U=" << interaction;
  if (sector) label << ",up=" << sector->n_up << ",down=" << sector->n_down;
  label << ")";
  return {h.cast<cplx>(), label.str()};
}

}  // namespace qcels
