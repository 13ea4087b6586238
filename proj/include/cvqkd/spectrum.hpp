#pragma once

#include <array>
#include <vector>

#include "cvqkd/covariance.hpp"

namespace cvqkd {

/// Symplectic eigenvalues below 1 by at most this much are rounded up to 1;
/// anything lower is treated as unphysical.
inline constexpr double kPhysicalityTol = 1e-8;

/// Symplectic eigenvalues of a state, sorted descending. Values inside the
/// [1 - kPhysicalityTol, 1) band are clamped to exactly 1.
struct SymplecticSpectrum {
  enum class Method { Generic, Quartic };

  std::vector<double> eigenvalues;
  Method method = Method::Generic;

  double min() const;
  bool is_physical(double tol = kPhysicalityTol) const;
};

/// Spectral oracle: moduli of the eigenvalues of Omega*Gamma, computed with a
/// general nonsymmetric eigensolver and paired greedily. A pairing mismatch
/// above 1e-6 (relative for large values) raises NumericalError.
SymplecticSpectrum symplectic_spectrum_generic(const CovarianceMatrix& gamma);

/// Symplectic invariants Delta_{4,j} = M_2j(Omega*Gamma) of a 4-mode state:
/// sums of all principal minors of order 2j. Requires exactly 4 modes.
std::array<double, 4> symplectic_invariants(const CovarianceMatrix& gamma);

/// Closed-form quartic solution for the four symplectic eigenvalues of a
/// 4-mode state from its invariants. Near-coincident eigenvalues are located
/// as a cluster; their exact splitting is not resolvable from the invariants.
SymplecticSpectrum symplectic_spectrum_quartic(const std::array<double, 4>& invariants);

/// G(lambda) = ((l+1)/2) log2((l+1)/2) - ((l-1)/2) log2((l-1)/2), G(1) = 0.
double g_function(double lambda);

double entropy_of_spectrum(const SymplecticSpectrum& spectrum);

/// Von Neumann entropy in bits: sum of G over the symplectic spectrum.
double von_neumann_entropy(const CovarianceMatrix& gamma);

/// Normal-form decomposition Gamma = S diag(l1,l1,...,ln,ln) S^T with S symplectic.
struct WilliamsonForm {
  Eigen::MatrixXd transform;
  std::vector<double> eigenvalues;
};

WilliamsonForm williamson(const CovarianceMatrix& gamma);

/// Clips the symplectic spectrum at 1 in the normal-form basis. Identity when
/// the input is already physical.
CovarianceMatrix project_to_physical(const CovarianceMatrix& gamma);

}  // namespace cvqkd
