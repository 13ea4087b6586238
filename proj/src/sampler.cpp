#include "cvqkd/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace cvqkd {

namespace {

constexpr std::size_t kMinShots = 100;

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double to_unit_interval(std::uint64_t v) {
  return static_cast<double>(v >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// Canonical measured channels of one shot, A2 handled separately.
constexpr int kNumPlain = 6;

struct QuadSource {
  int channel;  // 0..6, 4 = A2
  double sign;
};

// Channels 0..3 and 5..6 live in the 6-entry plain-measurement vector.
int plain_index(int channel) { return channel < 4 ? channel : channel - 1; }

QuadSource quad_source(std::size_t mode, Quadrature q) {
  const bool x = (q == Quadrature::X);
  switch (mode) {
    case 0: return x ? QuadSource{0, 1.0} : QuadSource{1, -1.0};
    case 1: return x ? QuadSource{0, -1.0} : QuadSource{1, 1.0};
    case 2: return x ? QuadSource{2, 1.0} : QuadSource{3, -1.0};
    case 3: return x ? QuadSource{2, -1.0} : QuadSource{3, 1.0};
    case 4: return QuadSource{4, 1.0};
    case 5: return x ? QuadSource{5, 1.0} : QuadSource{6, -1.0};
    case 6: return x ? QuadSource{5, -1.0} : QuadSource{6, 1.0};
    default: throw IndexError("quad_source: mode out of range");
  }
}

bool split_partners(std::size_t a, std::size_t b) {
  return (a == 0 && b == 1) || (a == 1 && b == 0) || (a == 2 && b == 3) ||
         (a == 3 && b == 2) || (a == 5 && b == 6) || (a == 6 && b == 5);
}

std::array<double, kNumPlain> plain_channels(const ShotRecord& s) {
  return {s.x_b2x, s.p_b2p, s.x_b1x, s.p_b1p, s.x_a1x, s.p_a1p};
}

/// Streaming second-moment accumulator for the measurement record.
struct MomentAccumulator {
  Eigen::Matrix<double, kNumPlain, kNumPlain> plain = decltype(plain)::Zero();
  Eigen::Matrix<double, kNumPlain, 1> cross_x = decltype(cross_x)::Zero();
  Eigen::Matrix<double, kNumPlain, 1> cross_p = decltype(cross_p)::Zero();
  double a2_xx = 0.0;
  double a2_pp = 0.0;
  std::size_t n = 0;
  std::size_t n_x = 0;
  std::size_t n_p = 0;

  void add(const ShotRecord& s) {
    const auto m = plain_channels(s);
    for (int i = 0; i < kNumPlain; ++i)
      for (int j = i; j < kNumPlain; ++j) plain(i, j) += m[static_cast<std::size_t>(i)] *
                                                         m[static_cast<std::size_t>(j)];
    if (s.a2_basis == Quadrature::X) {
      for (int i = 0; i < kNumPlain; ++i) cross_x(i) += m[static_cast<std::size_t>(i)] * s.a2_value;
      a2_xx += s.a2_value * s.a2_value;
      ++n_x;
    } else {
      for (int i = 0; i < kNumPlain; ++i) cross_p(i) += m[static_cast<std::size_t>(i)] * s.a2_value;
      a2_pp += s.a2_value * s.a2_value;
      ++n_p;
    }
    ++n;
  }

  EstimatedCM finalize() const;
};

EstimatedCM MomentAccumulator::finalize() const {
  if (n < kMinShots)
    throw InsufficientDataError("estimate_cm: at least " + std::to_string(kMinShots) +
                                " shots required");
  if (n_x == 0 || n_p == 0)
    throw InsufficientDataError("estimate_cm: both A2 bases must appear in the record");

  Eigen::Matrix<double, kNumPlain, kNumPlain> mom = plain;
  for (int i = 0; i < kNumPlain; ++i)
    for (int j = 0; j < i; ++j) mom(i, j) = mom(j, i);
  mom /= static_cast<double>(n);
  const Eigen::Matrix<double, kNumPlain, 1> mx = cross_x / static_cast<double>(n_x);
  const Eigen::Matrix<double, kNumPlain, 1> mp = cross_p / static_cast<double>(n_p);
  const double va2x = a2_xx / static_cast<double>(n_x);
  const double va2p = a2_pp / static_cast<double>(n_p);

  const bool degenerate = mom.cwiseAbs().maxCoeff() == 0.0 && va2x == 0.0 && va2p == 0.0;

  // Raw second moment of channels a, b and the effective shot count behind it.
  auto moment = [&](const QuadSource& a, Quadrature qa, const QuadSource& b,
                    Quadrature qb) -> std::pair<double, double> {
    if (a.channel == 4 && b.channel == 4) {
      if (qa != qb) return {0.0, 0.0};
      return qa == Quadrature::X ? std::pair{va2x, static_cast<double>(n_x)}
                                 : std::pair{va2p, static_cast<double>(n_p)};
    }
    if (a.channel == 4)
      return qa == Quadrature::X ? std::pair{mx(plain_index(b.channel)), static_cast<double>(n_x)}
                                 : std::pair{mp(plain_index(b.channel)), static_cast<double>(n_p)};
    if (b.channel == 4)
      return qb == Quadrature::X ? std::pair{mx(plain_index(a.channel)), static_cast<double>(n_x)}
                                 : std::pair{mp(plain_index(a.channel)), static_cast<double>(n_p)};
    return {mom(plain_index(a.channel), plain_index(b.channel)), static_cast<double>(n)};
  };
  auto channel_var = [&](const QuadSource& a, Quadrature qa) -> double {
    if (a.channel == 4) return qa == Quadrature::X ? va2x : va2p;
    return mom(plain_index(a.channel), plain_index(a.channel));
  };

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(14, 14);
  Eigen::MatrixXd se = Eigen::MatrixXd::Zero(14, 14);
  for (std::size_t ma = 0; ma < 7; ++ma) {
    for (std::size_t mb = 0; mb < 7; ++mb) {
      for (int ca = 0; ca < 2; ++ca) {
        for (int cb = 0; cb < 2; ++cb) {
          const auto qa = static_cast<Quadrature>(ca);
          const auto qb = static_cast<Quadrature>(cb);
          const auto sa = quad_source(ma, qa);
          const auto sb = quad_source(mb, qb);
          const auto [raw, n_eff] = moment(sa, qa, sb, qb);
          double value = sa.sign * sb.sign * raw;
          // Split partners share the ancilla vacuum; the leftover unit
          // variance lands on the same-quadrature cross entries.
          if (!degenerate && split_partners(ma, mb) && qa == qb) value += 1.0;
          const auto r = static_cast<Eigen::Index>(2 * ma + static_cast<std::size_t>(ca));
          const auto c = static_cast<Eigen::Index>(2 * mb + static_cast<std::size_t>(cb));
          g(r, c) = value;
          if (n_eff > 0.0) {
            se(r, c) = std::sqrt((channel_var(sa, qa) * channel_var(sb, qb) + raw * raw) / n_eff);
          } else {
            // A2's own x-p entry is pinned at zero rather than measured; score
            // it with the spread it would carry if it were.
            se(r, c) = std::sqrt(va2x * va2p / static_cast<double>(std::min(n_x, n_p)));
          }
        }
      }
    }
  }
  g = ((g + g.transpose()) / 2.0).eval();

  EstimatedCM est;
  est.entries = std::move(g);
  est.labels = {"B2X", "B2P", "B1X", "B1P", "A2", "A1X", "A1P"};
  est.standard_errors = std::move(se);
  est.n_shots = n;
  est.n_basis_x = n_x;
  est.n_basis_p = n_p;
  est.degenerate = degenerate;
  return est;
}

struct RatePoint {
  RateReport report;
  bool projected = false;
};

RatePoint rate_from_estimate(const EstimatedCM& est, const ProtocolScenario& meta,
                             bool enforce_tolerance) {
  CovarianceMatrix cm = est.as_covariance();
  const auto fixed = project_to_physical(cm);
  const bool projected = (fixed.entries() - cm.entries()).cwiseAbs().maxCoeff() > 0.0;
  if (projected) {
    if (enforce_tolerance) {
      const double floor_se = 1.0 / std::sqrt(static_cast<double>(est.n_shots));
      const Eigen::MatrixXd shift = (fixed.entries() - cm.entries()).cwiseAbs();
      for (Eigen::Index i = 0; i < shift.rows(); ++i)
        for (Eigen::Index j = 0; j < shift.cols(); ++j)
          if (shift(i, j) > 5.0 * std::max(est.standard_errors(i, j), floor_se))
            throw PhysicalityError(
                "key_rate_from_samples: physicality projection moved an entry by more than 5 "
                "standard errors");
    }
    cm = fixed;
  }

  const double k = resolve_gain(meta, cm);
  const auto post = bob_postprocess(cm, k, Variant::Het2M);
  const auto hol = holevo_bound(post, Variant::Het2M);

  RateReport report;
  report.I_BA = mutual_info_cm(post, Variant::Het2M);
  report.S_E = hol.S_E;
  report.S_E_cond = hol.S_E_cond;
  report.I_BE = hol.I_BE;
  report.K_R = meta.beta * report.I_BA - report.I_BE;
  report.k_used = k;
  report.spectrum_joint = hol.spectrum_joint;
  report.spectrum_cond = hol.spectrum_cond;
  return {std::move(report), projected};
}

const char* basis_token(Quadrature q) { return q == Quadrature::X ? "x" : "p"; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

}  // namespace

double ShotRng::uniform(std::uint64_t shot, std::uint64_t draw) const {
  const std::uint64_t key = mix64(seed ^ mix64(shot));
  return to_unit_interval(mix64(key + draw * 0x9e3779b97f4a7c15ULL));
}

double ShotRng::normal(std::uint64_t shot, std::uint64_t draw) const {
  const std::uint64_t pair = draw / 2;
  const double u1 = uniform(shot, 2 * pair);
  const double u2 = uniform(shot, 2 * pair + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (draw % 2 == 0) ? r * std::cos(angle) : r * std::sin(angle);
}

std::vector<ShotRecord> sample_shots(const CovarianceMatrix& gamma7, std::size_t n,
                                     std::uint64_t seed) {
  if (n == 0) throw DomainError("sample_shots: at least one shot required");
  if (gamma7.n_modes() != 7)
    throw DimensionError("sample_shots: canonical 7-mode state required");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma7.entries());
  if (es.info() != Eigen::Success)
    throw FactorizationError("sample_shots: eigendecomposition failed");
  const double lam_max = es.eigenvalues().maxCoeff();
  if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, lam_max))
    throw FactorizationError("sample_shots: covariance is not positive semidefinite");
  const Eigen::MatrixXd factor =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  const Eigen::Index ix_b2x = static_cast<Eigen::Index>(2 * gamma7.mode("B2X"));
  const Eigen::Index ip_b2p = static_cast<Eigen::Index>(2 * gamma7.mode("B2P") + 1);
  const Eigen::Index ix_b1x = static_cast<Eigen::Index>(2 * gamma7.mode("B1X"));
  const Eigen::Index ip_b1p = static_cast<Eigen::Index>(2 * gamma7.mode("B1P") + 1);
  const Eigen::Index ix_a2 = static_cast<Eigen::Index>(2 * gamma7.mode("A2"));
  const Eigen::Index ip_a2 = ix_a2 + 1;
  const Eigen::Index ix_a1x = static_cast<Eigen::Index>(2 * gamma7.mode("A1X"));
  const Eigen::Index ip_a1p = static_cast<Eigen::Index>(2 * gamma7.mode("A1P") + 1);

  const ShotRng rng{seed};
  std::vector<ShotRecord> shots(n);
  Eigen::VectorXd normals(14);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t j = 0; j < 14; ++j)
      normals(static_cast<Eigen::Index>(j)) = rng.normal(i, j);
    const Eigen::VectorXd z = factor * normals;
    ShotRecord& s = shots[i];
    s.index = i;
    s.x_b2x = z(ix_b2x);
    s.p_b2p = z(ip_b2p);
    s.x_b1x = z(ix_b1x);
    s.p_b1p = z(ip_b1p);
    s.x_a1x = z(ix_a1x);
    s.p_a1p = z(ip_a1p);
    s.a2_basis = rng.uniform(i, 14) < 0.5 ? Quadrature::X : Quadrature::P;
    s.a2_value = s.a2_basis == Quadrature::X ? z(ix_a2) : z(ip_a2);
  }
  return shots;
}

EstimatedCM estimate_cm(const std::vector<ShotRecord>& shots) {
  MomentAccumulator acc;
  for (const auto& s : shots) acc.add(s);
  return acc.finalize();
}

SampledRateReport key_rate_from_samples(const std::vector<ShotRecord>& shots,
                                        const ProtocolScenario& meta,
                                        std::size_t bootstrap_resamples,
                                        std::uint64_t bootstrap_seed) {
  if (meta.variant != Variant::Het2M)
    throw DomainError("key_rate_from_samples: shot emulation covers the Het2M pipeline");
  const auto est = estimate_cm(shots);
  if (est.degenerate)
    throw DegenerateError("key_rate_from_samples: degenerate (all-zero) measurement record");

  const auto point = rate_from_estimate(est, meta, /*enforce_tolerance=*/true);

  const std::size_t n = shots.size();
  const ShotRng rng{bootstrap_seed};
  std::vector<double> rates;
  rates.reserve(bootstrap_resamples);
  std::size_t failures = 0;
  for (std::size_t r = 0; r < bootstrap_resamples; ++r) {
    MomentAccumulator acc;
    for (std::size_t j = 0; j < n; ++j) {
      const auto idx = static_cast<std::size_t>(rng.uniform(r, j) * static_cast<double>(n));
      acc.add(shots[idx < n ? idx : n - 1]);
    }
    try {
      const auto resampled = rate_from_estimate(acc.finalize(), meta, /*enforce_tolerance=*/false);
      rates.push_back(resampled.report.K_R);
    } catch (const PhysicalityError&) {
      ++failures;
    } catch (const NumericalError&) {
      ++failures;
    }
  }
  if (rates.size() < bootstrap_resamples - bootstrap_resamples / 10)
    throw NumericalError("key_rate_from_samples: too many bootstrap resamples failed");

  double mean = 0.0;
  for (double v : rates) mean += v;
  mean /= static_cast<double>(rates.size());
  double var = 0.0;
  for (double v : rates) var += (v - mean) * (v - mean);
  var /= static_cast<double>(rates.size() > 1 ? rates.size() - 1 : 1);

  SampledRateReport out;
  out.report = point.report;
  out.kr_stderr = std::sqrt(var);
  out.kr_low = point.report.K_R - 3.0 * out.kr_stderr;
  out.kr_high = point.report.K_R + 3.0 * out.kr_stderr;
  out.resamples = rates.size();
  out.projected = point.projected;
  return out;
}

void write_shots_csv(std::ostream& out, const std::vector<ShotRecord>& shots) {
  out << "shot,x_B2X,p_B2P,x_B1X,p_B1P,x_A1X,p_A1P,basis_A2,value_A2\n";
  for (const auto& s : shots) {
    out << s.index << ',' << sci(s.x_b2x) << ',' << sci(s.p_b2p) << ',' << sci(s.x_b1x) << ','
        << sci(s.p_b1p) << ',' << sci(s.x_a1x) << ',' << sci(s.p_a1p) << ','
        << basis_token(s.a2_basis) << ',' << sci(s.a2_value) << '\n';
  }
}

std::vector<ShotRecord> read_shots_csv(std::istream& in) {
  std::vector<ShotRecord> shots;
  std::string line;
  if (!std::getline(in, line)) throw InsufficientDataError("read_shots_csv: empty stream");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ShotRecord s;
    auto next = [&]() -> std::string {
      if (!std::getline(ss, field, ',')) throw DomainError("read_shots_csv: short row");
      return field;
    };
    s.index = std::stoull(next());
    s.x_b2x = std::stod(next());
    s.p_b2p = std::stod(next());
    s.x_b1x = std::stod(next());
    s.p_b1p = std::stod(next());
    s.x_a1x = std::stod(next());
    s.p_a1p = std::stod(next());
    const std::string basis = next();
    if (basis != "x" && basis != "p") throw DomainError("read_shots_csv: basis must be x or p");
    s.a2_basis = basis == "x" ? Quadrature::X : Quadrature::P;
    s.a2_value = std::stod(next());
    shots.push_back(s);
  }
  return shots;
}

void write_estimated_cm_csv(std::ostream& out, const EstimatedCM& est, std::uint64_t seed) {
  nlohmann::json meta;
  meta["n_shots"] = est.n_shots;
  meta["seed"] = seed;
  out << meta.dump() << '\n';
  const Eigen::MatrixXd& g = est.entries;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
      if (j) out << ',';
      out << sci(g(i, j));
    }
    out << '\n';
  }
}

CovarianceMatrix read_estimated_cm_csv(std::istream& in, std::size_t* n_shots,
                                       std::uint64_t* seed) {
  std::string line;
  if (!std::getline(in, line)) throw DomainError("read_estimated_cm_csv: empty stream");
  const auto meta = nlohmann::json::parse(line);
  if (n_shots) *n_shots = meta.at("n_shots").get<std::size_t>();
  if (seed) *seed = meta.at("seed").get<std::uint64_t>();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    rows.push_back(std::move(row));
  }
  if (rows.size() != 14) throw DimensionError("read_estimated_cm_csv: expected 14 rows");
  Eigen::MatrixXd g(14, 14);
  for (Eigen::Index i = 0; i < 14; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != 14)
      throw DimensionError("read_estimated_cm_csv: expected 14 columns");
    for (Eigen::Index j = 0; j < 14; ++j)
      g(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return CovarianceMatrix(std::move(g), {"B2X", "B2P", "B1X", "B1P", "A2", "A1X", "A1P"});
}

}  // namespace cvqkd
