#include "cvqkd/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "cvqkd/spectrum.hpp"

namespace cvqkd {

namespace {

constexpr double kSymplecticTol = 1e-12;

void check_mode_index(std::size_t m, std::size_t n, const char* what) {
  if (m >= n) throw IndexError(std::string(what) + ": mode index out of range");
}

}  // namespace

Eigen::MatrixXd symplectic_form(std::size_t n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t m = 0; m < n_modes; ++m) {
    omega(2 * m, 2 * m + 1) = 1.0;
    omega(2 * m + 1, 2 * m) = -1.0;
  }
  return omega;
}

CovarianceMatrix::CovarianceMatrix(Eigen::MatrixXd entries, std::vector<std::string> labels)
    : entries_(std::move(entries)), labels_(std::move(labels)) {
  const auto dim = static_cast<Eigen::Index>(2 * labels_.size());
  if (labels_.empty()) throw DimensionError("CovarianceMatrix: at least one mode required");
  if (entries_.rows() != dim || entries_.cols() != dim)
    throw DimensionError("CovarianceMatrix: entries must be 2n x 2n for n labels");
  entries_ = ((entries_ + entries_.transpose()) / 2.0).eval();
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(entries_(i, i) > 0.0))
      throw PhysicalityError("CovarianceMatrix: diagonal entries must be strictly positive");
  }
}

std::size_t CovarianceMatrix::mode(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  throw IndexError("CovarianceMatrix: no mode labeled '" + std::string(label) + "'");
}

bool CovarianceMatrix::has_mode(std::string_view label) const {
  return std::any_of(labels_.begin(), labels_.end(),
                     [&](const std::string& l) { return l == label; });
}

double CovarianceMatrix::var(std::size_t m, Quadrature q) const {
  check_mode_index(m, n_modes(), "var");
  const auto i = static_cast<Eigen::Index>(2 * m + static_cast<std::size_t>(q));
  return entries_(i, i);
}

double CovarianceMatrix::cov(std::size_t ma, Quadrature qa, std::size_t mb, Quadrature qb) const {
  check_mode_index(ma, n_modes(), "cov");
  check_mode_index(mb, n_modes(), "cov");
  const auto i = static_cast<Eigen::Index>(2 * ma + static_cast<std::size_t>(qa));
  const auto j = static_cast<Eigen::Index>(2 * mb + static_cast<std::size_t>(qb));
  return entries_(i, j);
}

Eigen::Matrix2d CovarianceMatrix::block(std::size_t ma, std::size_t mb) const {
  check_mode_index(ma, n_modes(), "block");
  check_mode_index(mb, n_modes(), "block");
  return entries_.block<2, 2>(static_cast<Eigen::Index>(2 * ma),
                              static_cast<Eigen::Index>(2 * mb));
}

CovarianceMatrix CovarianceMatrix::relabeled(std::vector<std::string> labels) const {
  if (labels.size() != labels_.size())
    throw DimensionError("relabeled: label count must match mode count");
  return CovarianceMatrix(entries_, std::move(labels));
}

CovarianceMatrix CovarianceMatrix::renamed(std::string_view from, std::string_view to) const {
  auto labels = labels_;
  labels[mode(from)] = std::string(to);
  return CovarianceMatrix(entries_, std::move(labels));
}

SymplecticTransform::SymplecticTransform(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() % 2 != 0 || entries_.rows() == 0)
    throw DimensionError("SymplecticTransform: matrix must be 2n x 2n");
  const auto n = static_cast<std::size_t>(entries_.rows()) / 2;
  const Eigen::MatrixXd omega = symplectic_form(n);
  const double defect = (entries_ * omega * entries_.transpose() - omega).cwiseAbs().maxCoeff();
  if (defect > kSymplecticTol)
    throw DomainError("SymplecticTransform: S Omega S^T != Omega (defect " +
                      std::to_string(defect) + ")");
}

SymplecticTransform SymplecticTransform::identity(std::size_t n_modes) {
  return SymplecticTransform(Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes));
}

CovarianceMatrix epr_cm(double V, std::string label_a, std::string label_b) {
  if (!(V >= 1.0)) throw DomainError("epr_cm: variance must satisfy V >= 1");
  const double c = std::sqrt(V * V - 1.0);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 4);
  g(0, 0) = g(1, 1) = g(2, 2) = g(3, 3) = V;
  g(0, 2) = g(2, 0) = c;
  g(1, 3) = g(3, 1) = -c;
  return CovarianceMatrix(std::move(g), {std::move(label_a), std::move(label_b)});
}

CovarianceMatrix vacuum_cm(std::string label) {
  return CovarianceMatrix(Eigen::Matrix2d::Identity(), {std::move(label)});
}

CovarianceMatrix thermal_cm(double W, std::string label) {
  if (!(W >= 1.0)) throw DomainError("thermal_cm: variance must satisfy W >= 1");
  return CovarianceMatrix(W * Eigen::Matrix2d::Identity(), {std::move(label)});
}

SymplecticTransform beam_splitter(double T, std::size_t i, std::size_t j, std::size_t n_modes) {
  if (!(T >= 0.0 && T <= 1.0)) throw DomainError("beam_splitter: T must lie in [0, 1]");
  if (i == j) throw DomainError("beam_splitter: modes must differ");
  check_mode_index(i, n_modes, "beam_splitter");
  check_mode_index(j, n_modes, "beam_splitter");
  const double t = std::sqrt(T);
  const double r = std::sqrt(1.0 - T);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  for (int q = 0; q < 2; ++q) {
    const auto a = static_cast<Eigen::Index>(2 * i + q);
    const auto b = static_cast<Eigen::Index>(2 * j + q);
    s(a, a) = t;
    s(a, b) = r;
    s(b, a) = -r;
    s(b, b) = t;
  }
  return SymplecticTransform(std::move(s));
}

SymplecticTransform cnot_gate(double k, std::size_t control, std::size_t target,
                              std::size_t n_modes) {
  if (!std::isfinite(k)) throw DomainError("cnot_gate: gain must be finite");
  if (control == target) throw DomainError("cnot_gate: control and target must differ");
  check_mode_index(control, n_modes, "cnot_gate");
  check_mode_index(target, n_modes, "cnot_gate");
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  const auto xt = static_cast<Eigen::Index>(2 * target);
  const auto pt = static_cast<Eigen::Index>(2 * target + 1);
  const auto xc = static_cast<Eigen::Index>(2 * control);
  const auto pc = static_cast<Eigen::Index>(2 * control + 1);
  s(xt, xc) = -k;
  s(pc, pt) = k;
  return SymplecticTransform(std::move(s));
}

CovarianceMatrix apply(const SymplecticTransform& s, const CovarianceMatrix& gamma) {
  if (s.n_modes() != gamma.n_modes())
    throw DimensionError("apply: transform and state mode counts differ");
  Eigen::MatrixXd out = s.entries() * gamma.entries() * s.entries().transpose();
  return CovarianceMatrix(std::move(out), gamma.labels());
}

CovarianceMatrix direct_sum(std::span<const CovarianceMatrix> parts) {
  if (parts.empty()) throw DimensionError("direct_sum: no parts");
  std::size_t n = 0;
  for (const auto& p : parts) n += p.n_modes();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  std::vector<std::string> labels;
  labels.reserve(n);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    const auto d = static_cast<Eigen::Index>(2 * p.n_modes());
    g.block(at, at, d, d) = p.entries();
    labels.insert(labels.end(), p.labels().begin(), p.labels().end());
    at += d;
  }
  return CovarianceMatrix(std::move(g), std::move(labels));
}

CovarianceMatrix direct_sum(const CovarianceMatrix& a, const CovarianceMatrix& b) {
  const CovarianceMatrix parts[] = {a, b};
  return direct_sum(std::span<const CovarianceMatrix>(parts));
}

SymplecticTransform direct_sum(const SymplecticTransform& a, const SymplecticTransform& b) {
  const auto da = a.entries().rows();
  const auto db = b.entries().rows();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(da + db, da + db);
  s.topLeftCorner(da, da) = a.entries();
  s.bottomRightCorner(db, db) = b.entries();
  return SymplecticTransform(std::move(s));
}

CovarianceMatrix reorder(const CovarianceMatrix& gamma, std::span<const std::size_t> order) {
  const std::size_t n = gamma.n_modes();
  if (order.size() != n) throw DimensionError("reorder: permutation size must equal mode count");
  std::set<std::size_t> seen(order.begin(), order.end());
  if (seen.size() != n || *seen.rbegin() >= n)
    throw IndexError("reorder: order must be a permutation of 0..n-1");
  Eigen::MatrixXd g(2 * n, 2 * n);
  std::vector<std::string> labels(n);
  for (std::size_t a = 0; a < n; ++a) {
    labels[a] = gamma.labels()[order[a]];
    for (std::size_t b = 0; b < n; ++b) {
      g.block<2, 2>(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b)) =
          gamma.block(order[a], order[b]);
    }
  }
  return CovarianceMatrix(std::move(g), std::move(labels));
}

CovarianceMatrix reduce(const CovarianceMatrix& gamma, std::span<const std::size_t> keep) {
  const std::size_t n = gamma.n_modes();
  if (keep.empty()) throw DimensionError("reduce: must keep at least one mode");
  std::set<std::size_t> seen(keep.begin(), keep.end());
  if (seen.size() != keep.size()) throw IndexError("reduce: duplicate mode index");
  const std::size_t m = keep.size();
  Eigen::MatrixXd g(2 * m, 2 * m);
  std::vector<std::string> labels(m);
  for (std::size_t a = 0; a < m; ++a) {
    check_mode_index(keep[a], n, "reduce");
    labels[a] = gamma.labels()[keep[a]];
    for (std::size_t b = 0; b < m; ++b) {
      g.block<2, 2>(static_cast<Eigen::Index>(2 * a), static_cast<Eigen::Index>(2 * b)) =
          gamma.block(keep[a], keep[b]);
    }
  }
  return CovarianceMatrix(std::move(g), std::move(labels));
}

CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& gamma, std::size_t measured_mode,
                                       Quadrature q) {
  const std::size_t n = gamma.n_modes();
  check_mode_index(measured_mode, n, "condition_on_homodyne");
  if (n < 2) throw DimensionError("condition_on_homodyne: nothing would remain");

  const auto qi = static_cast<Eigen::Index>(2 * measured_mode + static_cast<std::size_t>(q));
  const Eigen::Matrix2d g_meas = gamma.block(measured_mode, measured_mode);
  const double d = g_meas(static_cast<int>(q), static_cast<int>(q));

  std::vector<Eigen::Index> rest;
  rest.reserve(2 * (n - 1));
  for (std::size_t m = 0; m < n; ++m) {
    if (m == measured_mode) continue;
    rest.push_back(static_cast<Eigen::Index>(2 * m));
    rest.push_back(static_cast<Eigen::Index>(2 * m + 1));
  }
  const auto dim = static_cast<Eigen::Index>(rest.size());
  Eigen::MatrixXd g_rest(dim, dim);
  Eigen::VectorXd c(dim);
  for (Eigen::Index a = 0; a < dim; ++a) {
    c(a) = gamma.entries()(rest[static_cast<std::size_t>(a)], qi);
    for (Eigen::Index b = 0; b < dim; ++b)
      g_rest(a, b) = gamma.entries()(rest[static_cast<std::size_t>(a)],
                                     rest[static_cast<std::size_t>(b)]);
  }

  // Range pseudo-inverse: the measured direction counts as zero when its
  // variance is negligible against the mode's scale.
  if (d >= 1e-12 * g_meas.trace()) g_rest -= (c * c.transpose()) / d;

  std::vector<std::string> labels;
  labels.reserve(n - 1);
  for (std::size_t m = 0; m < n; ++m)
    if (m != measured_mode) labels.push_back(gamma.labels()[m]);
  CovarianceMatrix out(std::move(g_rest), std::move(labels));
  if (!symplectic_spectrum_generic(out).is_physical())
    throw PhysicalityError("condition_on_homodyne: conditional state is unphysical");
  return out;
}

CovarianceMatrix condition_on_homodyne(const CovarianceMatrix& gamma,
                                       std::string_view measured_label, Quadrature q) {
  return condition_on_homodyne(gamma, gamma.mode(measured_label), q);
}

}  // namespace cvqkd
