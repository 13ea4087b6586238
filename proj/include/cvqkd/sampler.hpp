#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "cvqkd/protocols.hpp"

namespace cvqkd {

/// One measurement round of the Het2M pipeline: heterodyne outcomes of B2,
/// B1, A1 plus one randomly chosen quadrature of A2.
struct ShotRecord {
  std::uint64_t index = 0;
  double x_b2x = 0.0;
  double p_b2p = 0.0;
  double x_b1x = 0.0;
  double p_b1p = 0.0;
  double x_a1x = 0.0;
  double p_a1p = 0.0;
  Quadrature a2_basis = Quadrature::X;
  double a2_value = 0.0;
};

/// Counter-based generator: the j-th draw of shot i depends only on
/// (seed, i, j), so parallel generation reproduces the serial stream.
struct ShotRng {
  std::uint64_t seed = 0;

  double uniform(std::uint64_t shot, std::uint64_t draw) const;
  /// Standard normals 2k and 2k+1 of a shot come from one Box-Muller pair.
  double normal(std::uint64_t shot, std::uint64_t draw) const;
};

/// Zero-mean Gaussian draws with the covariance of the canonical 7-mode Het2M
/// state; deterministic in `seed`.
std::vector<ShotRecord> sample_shots(const CovarianceMatrix& gamma7, std::size_t n,
                                     std::uint64_t seed);

struct EstimatedCM {
  Eigen::MatrixXd entries;  ///< 14x14; may be unphysical or, for degenerate input, zero
  std::vector<std::string> labels;
  Eigen::MatrixXd standard_errors;
  std::size_t n_shots = 0;
  std::size_t n_basis_x = 0;
  std::size_t n_basis_p = 0;
  bool degenerate = false;  ///< all-zero input shots

  CovarianceMatrix as_covariance() const { return CovarianceMatrix(entries, labels); }
};

/// Moment estimator of the canonical 7-mode CM. Unmeasured quadratures are
/// filled through the vacuum-split identities (variance mirroring, sign rule
/// for P-half covariances).
EstimatedCM estimate_cm(const std::vector<ShotRecord>& shots);

struct SampledRateReport {
  RateReport report;
  double kr_stderr = 0.0;
  double kr_low = 0.0;   ///< K_R - 3 sigma (bootstrap)
  double kr_high = 0.0;  ///< K_R + 3 sigma (bootstrap)
  std::size_t resamples = 0;
  bool projected = false;
};

/// Estimates the CM from shots, projects it to the nearest physical state if
/// needed, reruns the rate pipeline, and bootstraps a confidence interval.
SampledRateReport key_rate_from_samples(const std::vector<ShotRecord>& shots,
                                        const ProtocolScenario& meta,
                                        std::size_t bootstrap_resamples = 200,
                                        std::uint64_t bootstrap_seed = 0x9d2c5680);

/// Columnar shot CSV (one row per shot, basis written as "x"/"p").
void write_shots_csv(std::ostream& out, const std::vector<ShotRecord>& shots);
std::vector<ShotRecord> read_shots_csv(std::istream& in);

/// Row-major CM CSV with a one-line JSON metadata header.
void write_estimated_cm_csv(std::ostream& out, const EstimatedCM& est, std::uint64_t seed);
CovarianceMatrix read_estimated_cm_csv(std::istream& in, std::size_t* n_shots = nullptr,
                                       std::uint64_t* seed = nullptr);

}  // namespace cvqkd
