#include "cvqkd/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>

namespace cvqkd {

namespace {

double clamp_eigenvalue(double lambda) {
  if (lambda < 1.0 && lambda >= 1.0 - kPhysicalityTol) return 1.0;
  return lambda;
}

std::vector<double> sorted_desc(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

// Sum of determinants of all k x k principal submatrices of m.
double principal_minor_sum(const Eigen::MatrixXd& m, int k) {
  const int dim = static_cast<int>(m.rows());
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  double total = 0.0;
  Eigen::MatrixXd sub(k, k);
  while (true) {
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b)
        sub(a, b) = m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    total += sub.determinant();
    int pos = k - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == dim - k + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int a = pos + 1; a < k; ++a)
      idx[static_cast<std::size_t>(a)] = idx[static_cast<std::size_t>(a - 1)] + 1;
  }
  return total;
}

}  // namespace

double SymplecticSpectrum::min() const {
  double m = eigenvalues.empty() ? 0.0 : eigenvalues.front();
  for (double v : eigenvalues) m = std::min(m, v);
  return m;
}

bool SymplecticSpectrum::is_physical(double tol) const { return min() >= 1.0 - tol; }

namespace {

// Moduli of the eigenvalues of Omega*Gamma. For positive definite Gamma the
// congruence root gives the similar antisymmetric matrix A = G^{1/2} Omega
// G^{1/2}; i*A is Hermitian with eigenvalues +-lambda, so a self-adjoint
// solve delivers them with absolute error at the lambda_max scale. That route
// also stays exact on degenerate (pure-state) spectra where plain unbalanced
// Schur iteration can stall. Indefinite inputs take the direct nonsymmetric
// solve.
std::vector<double> omega_gamma_moduli(const CovarianceMatrix& gamma) {
  const std::size_t n = gamma.n_modes();
  std::vector<double> moduli(2 * n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sym(gamma.entries());
  if (sym.info() == Eigen::Success && sym.eigenvalues().minCoeff() > 0.0) {
    const Eigen::MatrixXd root = sym.eigenvectors() *
                                 sym.eigenvalues().cwiseSqrt().asDiagonal() *
                                 sym.eigenvectors().transpose();
    Eigen::MatrixXd a = root * symplectic_form(n) * root;
    a = ((a - a.transpose()) / 2.0).eval();
    Eigen::MatrixXcd herm = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    herm.imag() = a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> pairs(herm);
    if (pairs.info() != Eigen::Success)
      throw NumericalError("symplectic spectrum: symmetric eigensolve failed");
    for (std::size_t i = 0; i < 2 * n; ++i)
      moduli[i] = std::abs(pairs.eigenvalues()(static_cast<Eigen::Index>(i)));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(symplectic_form(n) * gamma.entries(),
                                               /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
      throw NumericalError("symplectic spectrum: eigensolver did not converge");
    for (std::size_t i = 0; i < 2 * n; ++i)
      moduli[i] = std::abs(solver.eigenvalues()(static_cast<Eigen::Index>(i)));
  }
  std::sort(moduli.begin(), moduli.end(), std::greater<>());
  return moduli;
}

}  // namespace

SymplecticSpectrum symplectic_spectrum_generic(const CovarianceMatrix& gamma) {
  const std::size_t n = gamma.n_modes();
  const std::vector<double> moduli = omega_gamma_moduli(gamma);

  SymplecticSpectrum spec;
  spec.method = SymplecticSpectrum::Method::Generic;
  spec.eigenvalues.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = moduli[2 * i];
    const double b = moduli[2 * i + 1];
    if (std::abs(a - b) > 1e-6 * std::max(1.0, 0.5 * (a + b)))
      throw NumericalError("symplectic_spectrum_generic: eigenvalue moduli do not pair");
    spec.eigenvalues.push_back(clamp_eigenvalue(0.5 * (a + b)));
  }
  return spec;
}

std::array<double, 4> symplectic_invariants(const CovarianceMatrix& gamma) {
  if (gamma.n_modes() != 4)
    throw DimensionError("symplectic_invariants: exactly 4 modes required");
  const Eigen::MatrixXd m = symplectic_form(4) * gamma.entries();
  return {principal_minor_sum(m, 2), principal_minor_sum(m, 4), principal_minor_sum(m, 6),
          principal_minor_sum(m, 8)};
}

SymplecticSpectrum symplectic_spectrum_quartic(const std::array<double, 4>& invariants) {
  using Cplx = std::complex<double>;
  const double d1 = invariants[0];
  const double d2 = invariants[1];
  const double d3 = invariants[2];
  const double d4 = invariants[3];

  // Resolvent-cubic pieces of the quartic z^4 - d1 z^3 + d2 z^2 - d3 z + d4.
  const double h = d2 * d2 - 3.0 * d1 * d3 + 12.0 * d4;
  const double l = 2.0 * d2 * d2 * d2 - 9.0 * d1 * d2 * d3 + 27.0 * d3 * d3 +
                   27.0 * d1 * d1 * d4 - 72.0 * d2 * d4;
  const double h_scale = d2 * d2 + 3.0 * std::abs(d1 * d3) + 12.0 * std::abs(d4) + 1.0;
  const double l_scale = 2.0 * std::abs(d2 * d2 * d2) + 9.0 * std::abs(d1 * d2 * d3) +
                         27.0 * d3 * d3 + 27.0 * std::abs(d1 * d1 * d4) +
                         72.0 * std::abs(d2 * d4) + 1.0;

  const double scale = 1.0 + d1 * d1;
  const double radicand_tol = 1e-8 * scale;

  const double cbrt2 = std::cbrt(2.0);
  double best_s2 = 0.0;
  double best_theta = 0.0;
  if (std::abs(h) < 1e-10 * h_scale && std::abs(l) < 1e-10 * l_scale) {
    // All four roots coincide to working precision; the cube roots would only
    // amplify rounding noise, and the resolvent root is 0.
    best_theta = 0.0;
    best_s2 = d1 * d1 / 4.0 - 2.0 * d2 / 3.0;
  } else {
    const Cplx disc_root = std::sqrt(Cplx(l * l - 4.0 * h * h * h));
    // Any cube-root branch yields a valid resolvent root; pick the one that
    // keeps the first radical best conditioned.
    const Cplx base = (std::abs(Cplx(l) + disc_root) >= std::abs(Cplx(l) - disc_root))
                          ? Cplx(l) + disc_root
                          : Cplx(l) - disc_root;
    const Cplx j0 = std::pow(base, 1.0 / 3.0);
    const Cplx rot(-0.5, std::sqrt(3.0) / 2.0);
    bool have_candidate = false;
    for (int branch = 0; branch < 3; ++branch) {
      Cplx j = j0;
      for (int r = 0; r < branch; ++r) j *= rot;
      const Cplx theta_c = cbrt2 * h / (3.0 * j) + j / (3.0 * cbrt2);
      if (std::abs(theta_c.imag()) > 1e-6 * (1.0 + std::abs(theta_c.real()))) continue;
      const double theta = theta_c.real();
      const double s2 = d1 * d1 / 4.0 - 2.0 * d2 / 3.0 + theta;
      if (!have_candidate || std::abs(s2) > std::abs(best_s2)) {
        best_s2 = s2;
        best_theta = theta;
        have_candidate = true;
      }
    }
    if (!have_candidate)
      throw NumericalError("symplectic_spectrum_quartic: no real resolvent root found");
  }

  double s2 = best_s2;
  const double theta = best_theta;
  if (s2 < 0.0) {
    if (s2 < -radicand_tol)
      throw NumericalError("symplectic_spectrum_quartic: negative radicand (ill-conditioned)");
    s2 = 0.0;
  }
  const double s = std::sqrt(s2);
  const double q_num = d1 * d1 * d1 - 4.0 * d1 * d2 + 8.0 * d3;
  const double q_scale =
      std::abs(d1 * d1 * d1) + 4.0 * std::abs(d1 * d2) + 8.0 * std::abs(d3) + 1.0;
  const double base_rad = d1 * d1 / 2.0 - 4.0 * d2 / 3.0 - theta;

  // With s ~ 0 the quartic is biquadratic and the odd term must vanish too.
  double correction = 0.0;
  if (4.0 * s > 1e-12 * std::sqrt(q_scale)) {
    correction = q_num / (4.0 * s);
  } else if (std::abs(q_num) > 1e-10 * q_scale) {
    throw NumericalError("symplectic_spectrum_quartic: degenerate resolvent with odd term");
  }

  std::vector<double> z_roots;
  z_roots.reserve(4);
  const double centers[2] = {d1 / 4.0 - s / 2.0, d1 / 4.0 + s / 2.0};
  const double radicands[2] = {base_rad - correction, base_rad + correction};
  for (int half = 0; half < 2; ++half) {
    double rad = radicands[half];
    if (rad < 0.0) {
      if (rad < -radicand_tol)
        throw NumericalError("symplectic_spectrum_quartic: negative radicand (ill-conditioned)");
      rad = 0.0;
    }
    const double w = std::sqrt(rad) / 2.0;
    z_roots.push_back(centers[half] - w);
    z_roots.push_back(centers[half] + w);
  }

  // The radicals cancel several digits; a few Newton steps on the monic
  // quartic recover them wherever the root is simple. A step is kept only if
  // it shrinks the residual, so clustered roots are never pushed around.
  const auto quartic_at = [&](double z) {
    return (((z - d1) * z + d2) * z - d3) * z + d4;
  };
  for (double& z : z_roots) {
    double residual = std::abs(quartic_at(z));
    for (int iter = 0; iter < 4; ++iter) {
      const double dp = ((4.0 * z - 3.0 * d1) * z + 2.0 * d2) * z - d3;
      if (dp == 0.0) break;
      const double step = quartic_at(z) / dp;
      if (!(std::abs(step) < 0.05 * (1.0 + std::abs(z)))) break;
      const double candidate = z - step;
      const double candidate_residual = std::abs(quartic_at(candidate));
      if (candidate_residual >= residual) break;
      z = candidate;
      residual = candidate_residual;
    }
  }

  SymplecticSpectrum spec;
  spec.method = SymplecticSpectrum::Method::Quartic;
  for (double z : z_roots) {
    if (z < 0.0) {
      if (z < -radicand_tol)
        throw NumericalError("symplectic_spectrum_quartic: negative squared eigenvalue");
      z = 0.0;
    }
    spec.eigenvalues.push_back(clamp_eigenvalue(std::sqrt(z)));
  }
  spec.eigenvalues = sorted_desc(std::move(spec.eigenvalues));
  return spec;
}

double g_function(double lambda) {
  if (lambda < 1.0 - kPhysicalityTol)
    throw DomainError("g_function: eigenvalue below 1");
  if (lambda <= 1.0) return 0.0;
  const double up = (lambda + 1.0) / 2.0;
  const double dn = (lambda - 1.0) / 2.0;
  return up * std::log2(up) - dn * std::log2(dn);
}

double entropy_of_spectrum(const SymplecticSpectrum& spectrum) {
  if (!spectrum.is_physical())
    throw PhysicalityError("entropy_of_spectrum: spectrum below the uncertainty bound");
  double total = 0.0;
  for (double lambda : spectrum.eigenvalues) total += g_function(clamp_eigenvalue(lambda));
  return total;
}

double von_neumann_entropy(const CovarianceMatrix& gamma) {
  return entropy_of_spectrum(symplectic_spectrum_generic(gamma));
}

WilliamsonForm williamson(const CovarianceMatrix& gamma) {
  const auto n = gamma.n_modes();
  const auto dim = static_cast<Eigen::Index>(2 * n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma.entries());
  if (es.info() != Eigen::Success)
    throw NumericalError("williamson: symmetric eigensolve failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw PhysicalityError("williamson: covariance matrix is not positive definite");

  const Eigen::MatrixXd root =
      es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
  Eigen::MatrixXd a = root * symplectic_form(n) * root;
  a = ((a - a.transpose()) / 2.0).eval();

  // -a^2 is symmetric PSD with each squared symplectic eigenvalue doubled.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(-(a * a));
  if (es2.info() != Eigen::Success)
    throw NumericalError("williamson: symmetric eigensolve failed");

  const double scale = std::max(1.0, es2.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::MatrixXd k(dim, dim);
  std::vector<double> lambdas;
  lambdas.reserve(n);
  std::vector<Eigen::VectorXd> accepted;
  accepted.reserve(2 * n);
  // Largest eigenvalues first so near-degenerate small ones come last.
  for (Eigen::Index col = dim - 1; col >= 0 && accepted.size() < 2 * n; --col) {
    Eigen::VectorXd u = es2.eigenvectors().col(col);
    for (const auto& w : accepted) u -= w.dot(u) * w;
    const double norm = u.norm();
    if (norm < 1e-8) continue;  // direction already covered by a partner vector
    u /= norm;
    const double mu2 = u.dot(-(a * (a * u)));
    if (mu2 <= scale * 1e-14)
      throw NumericalError("williamson: vanishing symplectic eigenvalue");
    const double mu = std::sqrt(mu2);
    Eigen::VectorXd v = (a * u) / mu;
    for (const auto& w : accepted) v -= w.dot(v) * w;
    if (v.norm() < 0.5)
      throw NumericalError("williamson: failed to pair normal-form vectors");
    v.normalize();
    const auto slot = static_cast<Eigen::Index>(2 * lambdas.size());
    k.col(slot) = v;
    k.col(slot + 1) = u;
    lambdas.push_back(mu);
    accepted.push_back(u);
    accepted.push_back(v);
  }
  if (lambdas.size() != n) throw NumericalError("williamson: incomplete normal form");

  Eigen::VectorXd dinv(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = 1.0 / std::sqrt(lambdas[i]);
    dinv(static_cast<Eigen::Index>(2 * i)) = r;
    dinv(static_cast<Eigen::Index>(2 * i + 1)) = r;
  }
  WilliamsonForm form;
  form.transform = root * k * dinv.asDiagonal();
  form.eigenvalues = std::move(lambdas);

  const Eigen::MatrixXd omega = symplectic_form(n);
  const double defect =
      (form.transform * omega * form.transform.transpose() - omega).cwiseAbs().maxCoeff();
  if (defect > 1e-6)
    throw NumericalError("williamson: normal-form transform lost symplecticity");
  return form;
}

CovarianceMatrix project_to_physical(const CovarianceMatrix& gamma) {
  // Physicality is Gamma + i Omega >= 0, with the symplectic spectrum clipped
  // at 1 exactly when that Hermitian form is clipped at 0. Repairing the form
  // directly keeps every correction at the size of the violation itself; a
  // normal-form clip would instead inflate the conjugate quadrature of a
  // squeezed deficient mode by orders of magnitude more than the estimation
  // noise that caused the violation.
  const auto dim = static_cast<Eigen::Index>(2 * gamma.n_modes());
  Eigen::MatrixXcd herm = gamma.entries().cast<std::complex<double>>();
  herm.imag() = symplectic_form(gamma.n_modes());

  Eigen::MatrixXd total_bump = Eigen::MatrixXd::Zero(dim, dim);
  bool bumped = false;
  for (int round = 0; round < 8 * static_cast<int>(dim); ++round) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
    if (es.info() != Eigen::Success)
      throw NumericalError("project_to_physical: Hermitian eigensolve failed");
    const double nu = es.eigenvalues().minCoeff();
    if (nu >= 0.0) break;
    Eigen::Index which = 0;
    es.eigenvalues().minCoeff(&which);
    const Eigen::VectorXcd v = es.eigenvectors().col(which);
    const Eigen::MatrixXd dir =
        ((v * v.adjoint() + v.conjugate() * v.transpose()) / 2.0).real();
    const double gain = v.dot(dir.cast<std::complex<double>>() * v).real();
    if (!(gain > 0.0))
      throw NumericalError("project_to_physical: degenerate violation direction");
    const double slack = 1e-12 * std::max(1.0, std::abs(es.eigenvalues().maxCoeff()));
    const Eigen::MatrixXd bump = ((-nu + slack) / gain) * dir;
    total_bump += bump;
    herm += bump.cast<std::complex<double>>();
    bumped = true;
  }
  if (!bumped) return gamma;
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
    if (es.eigenvalues().minCoeff() < 0.0)
      throw NumericalError("project_to_physical: clipping did not converge");
  }
  return CovarianceMatrix(gamma.entries() + total_bump, gamma.labels());
}

}  // namespace cvqkd
