#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cvqkd/errors.hpp"

namespace cvqkd {

/// Quadrature ordering is interleaved: (x1, p1, x2, p2, ...).
enum class Quadrature { X = 0, P = 1 };

/// 2n x 2n symplectic form, Omega = diag([[0,1],[-1,0]], ...).
Eigen::MatrixXd symplectic_form(std::size_t n_modes);

/// Covariance matrix of an n-mode Gaussian state in shot-noise units
/// (vacuum variance 1), with a label per mode. Symmetrized on construction.
class CovarianceMatrix {
 public:
  CovarianceMatrix(Eigen::MatrixXd entries, std::vector<std::string> labels);

  std::size_t n_modes() const { return labels_.size(); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  const std::vector<std::string>& labels() const { return labels_; }

  /// Index of the mode carrying `label`; throws IndexError if absent.
  std::size_t mode(std::string_view label) const;
  bool has_mode(std::string_view label) const;

  double var(std::size_t mode, Quadrature q) const;
  double cov(std::size_t mode_a, Quadrature qa, std::size_t mode_b, Quadrature qb) const;
  Eigen::Matrix2d block(std::size_t mode_a, std::size_t mode_b) const;

  CovarianceMatrix relabeled(std::vector<std::string> labels) const;
  CovarianceMatrix renamed(std::string_view from, std::string_view to) const;

 private:
  Eigen::MatrixXd entries_;
  std::vector<std::string> labels_;
};

/// Real matrix S with S Omega S^T = Omega (checked to 1e-12 on construction).
class SymplecticTransform {
 public:
  explicit SymplecticTransform(Eigen::MatrixXd entries);

  static SymplecticTransform identity(std::size_t n_modes);

  std::size_t n_modes() const { return static_cast<std::size_t>(entries_.rows()) / 2; }
  const Eigen::MatrixXd& entries() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// Two-mode squeezed vacuum: diagonal blocks V*I, off-diagonal sqrt(V^2-1)*sigma_z.
CovarianceMatrix epr_cm(double V, std::string label_a = "epr0", std::string label_b = "epr1");

/// Single vacuum mode (identity block).
CovarianceMatrix vacuum_cm(std::string label = "vac");

/// Single thermal mode diag(W, W).
CovarianceMatrix thermal_cm(double W, std::string label = "th");

/// Beam splitter of transmittance T on modes (i, j) of an n-mode system:
///   x_i' =  sqrt(T) x_i + sqrt(1-T) x_j
///   x_j' = -sqrt(1-T) x_i + sqrt(T) x_j      (same action on p).
SymplecticTransform beam_splitter(double T, std::size_t i, std::size_t j, std::size_t n_modes);

/// CV C-NOT gate with gain k. On the ordered quadruple (x_t, p_t, x_c, p_c):
///   x_t' = x_t - k x_c,  p_c' = p_c + k p_t,  other quadratures fixed.
SymplecticTransform cnot_gate(double k, std::size_t control, std::size_t target,
                              std::size_t n_modes);

/// Congruence S Gamma S^T, re-symmetrized.
CovarianceMatrix apply(const SymplecticTransform& s, const CovarianceMatrix& gamma);

CovarianceMatrix direct_sum(std::span<const CovarianceMatrix> parts);
CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b);
SymplecticTransform direct_sum(const SymplecticTransform& a, const SymplecticTransform& b);

/// Result mode j is input mode order[j]; `order` must be a permutation of 0..n-1.
CovarianceMatrix reorder(const CovarianceMatrix& gamma, std::span<const std::size_t> order);

/// Principal submatrix over `keep` (ordered, no duplicates).
CovarianceMatrix reduce(const CovarianceMatrix& gamma, std::span<const std::size_t> keep);

/// Conditional state after an ideal homodyne measurement of quadrature `q`
/// on `measured_mode`. Uses the range pseudo-inverse of X gamma X; the
/// measured mode is removed from the result.
CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& gamma,
                                       std::size_t measured_mode, Quadrature q);

CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& gamma,
                                       std::string_view measured_label, Quadrature q);

}  // namespace cvqkd
