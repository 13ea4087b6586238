#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cvqkd/covariance.hpp"
#include "cvqkd/spectrum.hpp"

namespace cvqkd {

/// Linear channel with transmittance T and input-referred excess noise epsilon.
struct ChannelParams {
  double transmittance = 1.0;
  double excess_noise = 0.0;

  ChannelParams() = default;
  ChannelParams(double T, double eps);

  /// Total input-referred noise chi = eps + (1-T)/T.
  double chi() const;
  /// Entangling-cloner EPR variance W with T(V + chi) = T V + (1-T) W.
  double cloner_variance() const;
  bool is_identity() const { return transmittance == 1.0 && excess_noise == 0.0; }
};

double cloner_variance(const ChannelParams& ch);

enum class Variant { Het2M, Hom2M, HomHetM, HetHomM, OneWayHet, OneWayHom };

bool is_two_way(Variant v);
std::string variant_name(Variant v);
std::optional<Variant> variant_from_name(std::string_view name);
std::vector<Variant> all_two_way_variants();

/// How Bob's post-processing gain k is chosen.
struct GainPolicy {
  enum class Kind {
    Wiener,         ///< k* = Cov(x_target, x_control) / Var(x_control) from the model CM
    Transmittance,  ///< round-trip amplitude transmittance, adjusted for heterodyne splits
    Fixed
  };
  Kind kind = Kind::Wiener;
  double fixed_value = 0.0;

  static GainPolicy wiener() { return {Kind::Wiener, 0.0}; }
  static GainPolicy transmittance() { return {Kind::Transmittance, 0.0}; }
  static GainPolicy fixed(double k) { return {Kind::Fixed, k}; }
};

struct ProtocolScenario {
  Variant variant = Variant::Het2M;
  double V = 2.0;       ///< Bob's EPR variance
  double V_A = 2.0;     ///< Alice's EPR variance (two-way only)
  double T_A = 0.5;     ///< Alice's coupler transmittance (two-way only)
  double beta = 1.0;    ///< reconciliation efficiency
  ChannelParams ch1;    ///< forward channel (two-way only)
  ChannelParams ch2;    ///< backward channel; the only channel for one-way variants
  GainPolicy k_policy = GainPolicy::wiener();

  void validate() const;
};

struct RateReport {
  double I_BA = 0.0;
  double S_E = 0.0;
  double S_E_cond = 0.0;
  double I_BE = 0.0;
  double K_R = 0.0;
  double k_used = 0.0;
  std::vector<double> spectrum_joint;
  std::vector<double> spectrum_cond;
};

/// Entanglement-based state of a two-way scenario in the variant's canonical
/// mode order, assembled beam splitter by beam splitter. With keep_eve the
/// cloner modes are retained and the global state is pure.
CovarianceMatrix build_two_way_constructive(const ProtocolScenario& s, bool keep_eve = false);

/// Het2M-specific aliases for the canonical 7-mode state
/// (B2X B2P B1X B1P A2 A1X A1P).
CovarianceMatrix build_het2m_constructive(const ProtocolScenario& s, bool keep_eve = false);

/// Same 7-mode state from the closed-form channel-propagated matrix elements.
CovarianceMatrix build_het2m_closed_form(const ProtocolScenario& s);

/// Measured-variable labels Bob combines as x_B = x_target - k x_control.
struct GainLabels {
  std::string target;
  std::string control;
};
GainLabels gain_labels(Variant v);

/// Wiener gain k* = Cov(x_target, x_control) / Var(x_control) read off a model CM.
double estimator_gain(const CovarianceMatrix& gamma, const GainLabels& labels);

/// Gain actually used for a scenario under its policy.
double resolve_gain(const ProtocolScenario& s, const CovarianceMatrix& gamma);

/// Round-trip transmittance gain, rescaled for the heterodyne vacuum splits of
/// the variant's target/control variables.
double transmittance_gain(const ProtocolScenario& s);

/// Applies Bob's C-NOT post-processing to a canonical two-way CM and relabels
/// the transformed modes (B2X->B4, B1X->B3, B2P->B6, B1P->B5 for Het2M).
CovarianceMatrix bob_postprocess(const CovarianceMatrix& gamma, double k,
                                 Variant v = Variant::Het2M);

struct HolevoBound {
  double S_E = 0.0;
  double S_E_cond = 0.0;
  double I_BE = 0.0;
  std::vector<double> spectrum_joint;
  std::vector<double> spectrum_cond;
};

/// Holevo quantities from a post-processed CM: S_E of the full state and the
/// conditional entropy after homodyning Bob's measured output modes.
HolevoBound holevo_bound(const CovarianceMatrix& post, Variant v);

HolevoBound holevo_bound_het2m(const CovarianceMatrix& post);

/// I_BA read off a post-processed CM as log2 of conditional-variance ratios of
/// Alice's heterodyne outcomes given Bob's x_B (and p_B for Het2M).
double mutual_info_cm(const CovarianceMatrix& post, Variant v);

/// Closed-form I_BA of Het2M.
double mutual_info_het2m(const ProtocolScenario& s);

/// Closed-form I_BA of Hom2M / HomHetM / HetHomM.
double mutual_info_variant(const ProtocolScenario& s);

/// One-way baseline (coherent-state EB picture, reverse reconciliation).
RateReport one_way_rate(Variant v, double V, const ChannelParams& ch, double beta);

/// Full rate pipeline for any variant. I_BA, S(E) and S(E|x_B,p_B) all derive
/// from one covariance-matrix model evaluated at the policy's gain.
RateReport key_rate(const ProtocolScenario& s);

}  // namespace cvqkd
