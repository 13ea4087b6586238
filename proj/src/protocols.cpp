#include "cvqkd/protocols.hpp"

#include <algorithm>
#include <cmath>

namespace cvqkd {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440;

CovarianceMatrix add_mode_noise(const CovarianceMatrix& gamma, std::string_view label,
                                double eps) {
  Eigen::MatrixXd g = gamma.entries();
  const auto i = static_cast<Eigen::Index>(2 * gamma.mode(label));
  g(i, i) += eps;
  g(i + 1, i + 1) += eps;
  return CovarianceMatrix(std::move(g), gamma.labels());
}

/// Couples `signal` to half of a cloner EPR pair on a beam splitter of
/// transmittance T. T = 1 degenerates to added classical noise.
CovarianceMatrix apply_channel(CovarianceMatrix state, std::string_view signal,
                               const ChannelParams& ch, const std::string& eve_prefix,
                               bool keep_eve) {
  if (ch.transmittance == 1.0) {
    if (ch.excess_noise == 0.0) return state;
    if (keep_eve)
      throw DomainError("apply_channel: a lossless noisy leg has no finite purification");
    return add_mode_noise(state, signal, ch.excess_noise);
  }
  const double w = ch.cloner_variance();
  state = direct_sum(state, epr_cm(w, eve_prefix + "A", eve_prefix + "B"));
  const auto bs = beam_splitter(ch.transmittance, state.mode(signal), state.mode(eve_prefix + "A"),
                                state.n_modes());
  return apply(bs, state);
}

/// Heterodyne split: a 50:50 coupler with a fresh vacuum turns `label` into
/// the X output (signal slot) and P output (vacuum slot).
CovarianceMatrix heterodyne_split(CovarianceMatrix state, std::string_view label,
                                  const std::string& x_label, const std::string& p_label) {
  state = direct_sum(state, vacuum_cm("split_vac"));
  const auto bs =
      beam_splitter(0.5, state.mode(label), state.mode("split_vac"), state.n_modes());
  state = apply(bs, state);
  return state.renamed(label, x_label).renamed("split_vac", p_label);
}

std::vector<std::string> canonical_labels(Variant v) {
  switch (v) {
    case Variant::Het2M:
      return {"B2X", "B2P", "B1X", "B1P", "A2", "A1X", "A1P"};
    case Variant::Hom2M:
      return {"B2", "B1", "A2", "A1X", "A1P"};
    case Variant::HomHetM:
      return {"B2X", "B2P", "B1", "A2", "A1X", "A1P"};
    case Variant::HetHomM:
      return {"B2", "B1X", "B1P", "A2", "A1X", "A1P"};
    default:
      throw DomainError("canonical_labels: not a two-way variant");
  }
}

double half_log2_ratio(double var_alice, double cov, double var_bob) {
  const double cond = var_alice - cov * cov / var_bob;
  if (!(cond > 0.0))
    throw NumericalError("mutual information: conditional variance is not positive");
  return 0.5 * std::log2(var_alice / cond);
}

}  // namespace

ChannelParams::ChannelParams(double T, double eps) : transmittance(T), excess_noise(eps) {
  if (!(T > 0.0 && T <= 1.0))
    throw DomainError("ChannelParams: transmittance must lie in (0, 1]");
  if (!(eps >= 0.0)) throw DomainError("ChannelParams: excess noise must be >= 0");
}

double ChannelParams::chi() const {
  return excess_noise + (1.0 - transmittance) / transmittance;
}

double ChannelParams::cloner_variance() const {
  if (transmittance == 1.0) return 1.0;
  return 1.0 + transmittance * excess_noise / (1.0 - transmittance);
}

double cloner_variance(const ChannelParams& ch) { return ch.cloner_variance(); }

bool is_two_way(Variant v) {
  return v == Variant::Het2M || v == Variant::Hom2M || v == Variant::HomHetM ||
         v == Variant::HetHomM;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Het2M: return "het2m";
    case Variant::Hom2M: return "hom2m";
    case Variant::HomHetM: return "homhetm";
    case Variant::HetHomM: return "hethomm";
    case Variant::OneWayHet: return "oneway-het";
    case Variant::OneWayHom: return "oneway-hom";
  }
  return "unknown";
}

std::optional<Variant> variant_from_name(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "het2m") return Variant::Het2M;
  if (s == "hom2m") return Variant::Hom2M;
  if (s == "homhetm" || s == "homhet" || s == "hom-het") return Variant::HomHetM;
  if (s == "hethomm" || s == "hethom" || s == "het-hom") return Variant::HetHomM;
  if (s == "oneway-het" || s == "onewayhet" || s == "het") return Variant::OneWayHet;
  if (s == "oneway-hom" || s == "onewayhom" || s == "hom") return Variant::OneWayHom;
  return std::nullopt;
}

std::vector<Variant> all_two_way_variants() {
  return {Variant::Het2M, Variant::Hom2M, Variant::HomHetM, Variant::HetHomM};
}

void ProtocolScenario::validate() const {
  if (!(V >= 1.0)) throw DomainError("ProtocolScenario: V must satisfy V >= 1");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw DomainError("ProtocolScenario: beta must lie in [0, 1]");
  ChannelParams check2(ch2.transmittance, ch2.excess_noise);
  if (is_two_way(variant)) {
    if (!(V_A >= 1.0)) throw DomainError("ProtocolScenario: V_A must satisfy V_A >= 1");
    if (!(T_A > 0.0 && T_A < 1.0))
      throw DomainError("ProtocolScenario: T_A must lie in (0, 1)");
    ChannelParams check1(ch1.transmittance, ch1.excess_noise);
  }
  if (k_policy.kind == GainPolicy::Kind::Fixed && !std::isfinite(k_policy.fixed_value))
    throw DomainError("ProtocolScenario: fixed gain must be finite");
}

CovarianceMatrix build_two_way_constructive(const ProtocolScenario& s, bool keep_eve) {
  s.validate();
  if (!is_two_way(s.variant))
    throw DomainError("build_two_way_constructive: one-way variants have no two-way state");

  auto state = epr_cm(s.V, "B1", "C1");
  state = apply_channel(std::move(state), "C1", s.ch1, "E1", keep_eve);
  state = state.renamed("C1", "Ain");

  state = direct_sum(state, epr_cm(s.V_A, "A2e", "A1"));
  const auto coupler =
      beam_splitter(s.T_A, state.mode("Ain"), state.mode("A2e"), state.n_modes());
  state = apply(coupler, state).renamed("Ain", "Aout").renamed("A2e", "A2");

  state = apply_channel(std::move(state), "Aout", s.ch2, "E2", keep_eve);
  state = state.renamed("Aout", "B2");

  switch (s.variant) {
    case Variant::Het2M:
      state = heterodyne_split(std::move(state), "B2", "B2X", "B2P");
      state = heterodyne_split(std::move(state), "B1", "B1X", "B1P");
      state = heterodyne_split(std::move(state), "A1", "A1X", "A1P");
      break;
    case Variant::Hom2M:
      state = heterodyne_split(std::move(state), "A1", "A1X", "A1P");
      break;
    case Variant::HomHetM:
      state = heterodyne_split(std::move(state), "B2", "B2X", "B2P");
      state = heterodyne_split(std::move(state), "A1", "A1X", "A1P");
      break;
    case Variant::HetHomM:
      state = heterodyne_split(std::move(state), "B1", "B1X", "B1P");
      state = heterodyne_split(std::move(state), "A1", "A1X", "A1P");
      break;
    default:
      break;
  }

  auto order_labels = canonical_labels(s.variant);
  if (keep_eve) {
    for (const auto* eve : {"E1A", "E1B", "E2A", "E2B"})
      if (state.has_mode(eve)) order_labels.emplace_back(eve);
  }
  std::vector<std::size_t> keep;
  keep.reserve(order_labels.size());
  for (const auto& label : order_labels) keep.push_back(state.mode(label));
  return reduce(state, keep);
}

CovarianceMatrix build_het2m_constructive(const ProtocolScenario& s, bool keep_eve) {
  ProtocolScenario h = s;
  h.variant = Variant::Het2M;
  return build_two_way_constructive(h, keep_eve);
}

CovarianceMatrix build_het2m_closed_form(const ProtocolScenario& s) {
  s.validate();
  const double V = s.V, VA = s.V_A, TA = s.T_A;
  const double T1 = s.ch1.transmittance, T2 = s.ch2.transmittance;
  const double chi1 = s.ch1.chi(), chi2 = s.ch2.chi();

  const double g_b2 = 0.5 * (1.0 + T2 * (VA - TA * VA + T1 * TA * (V + chi1) + chi2));
  const double g_a2 = TA * VA + T1 * (1.0 - TA) * (V + chi1);
  const double c1 = 0.5 * std::sqrt(T1 * T2 * TA * (V * V - 1.0));
  const double c2 = std::sqrt(0.5 * T2 * (1.0 - TA) * TA) * (VA - T1 * (V + chi1));
  const double c3 = 0.5 * std::sqrt(T2 * (1.0 - TA) * (VA * VA - 1.0));
  const double c4 = -std::sqrt(0.5 * T1 * (1.0 - TA) * (V * V - 1.0));
  const double c5 = std::sqrt(0.5 * TA * (VA * VA - 1.0));

  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d sz = Eigen::Vector2d(1.0, -1.0).asDiagonal();

  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(14, 14);
  auto put = [&g](int a, int b, const Eigen::Matrix2d& blk) {
    g.block<2, 2>(2 * a, 2 * b) = blk;
    g.block<2, 2>(2 * b, 2 * a) = blk.transpose();
  };

  put(0, 0, g_b2 * id);
  put(1, 1, g_b2 * id);
  put(0, 1, id - g_b2 * id);
  put(2, 2, 0.5 * (1.0 + V) * id);
  put(3, 3, 0.5 * (1.0 + V) * id);
  put(2, 3, 0.5 * (1.0 - V) * id);
  put(4, 4, g_a2 * id);
  put(5, 5, 0.5 * (1.0 + VA) * id);
  put(6, 6, 0.5 * (1.0 + VA) * id);
  put(5, 6, 0.5 * (1.0 - VA) * id);

  put(0, 2, c1 * sz);
  put(0, 3, -c1 * sz);
  put(1, 2, -c1 * sz);
  put(1, 3, c1 * sz);
  put(0, 4, c2 * id);
  put(1, 4, -c2 * id);
  put(0, 5, c3 * sz);
  put(0, 6, -c3 * sz);
  put(1, 5, -c3 * sz);
  put(1, 6, c3 * sz);
  put(2, 4, c4 * sz);
  put(3, 4, -c4 * sz);
  put(4, 5, c5 * sz);
  put(4, 6, -c5 * sz);

  return CovarianceMatrix(std::move(g), canonical_labels(Variant::Het2M));
}

GainLabels gain_labels(Variant v) {
  switch (v) {
    case Variant::Het2M: return {"B2X", "B1X"};
    case Variant::Hom2M: return {"B2", "B1"};
    case Variant::HomHetM: return {"B2X", "B1"};
    case Variant::HetHomM: return {"B2", "B1X"};
    default:
      throw DomainError("gain_labels: one-way variants have no post-processing gain");
  }
}

double estimator_gain(const CovarianceMatrix& gamma, const GainLabels& labels) {
  const auto t = gamma.mode(labels.target);
  const auto c = gamma.mode(labels.control);
  const double var_c = gamma.var(c, Quadrature::X);
  if (var_c < 1e-12)
    throw DegenerateError("estimator_gain: control variance is degenerate");
  return gamma.cov(t, Quadrature::X, c, Quadrature::X) / var_c;
}

double transmittance_gain(const ProtocolScenario& s) {
  const double base =
      std::sqrt(s.ch1.transmittance * s.ch2.transmittance * s.T_A);
  switch (s.variant) {
    case Variant::Het2M:
    case Variant::Hom2M:
      return base;
    case Variant::HomHetM:
      return base * kSqrtHalf;  // target is a heterodyne half, control is raw
    case Variant::HetHomM:
      return base / kSqrtHalf;  // control is a heterodyne half, target is raw
    default:
      throw DomainError("transmittance_gain: one-way variants have no gain");
  }
}

double resolve_gain(const ProtocolScenario& s, const CovarianceMatrix& gamma) {
  switch (s.k_policy.kind) {
    case GainPolicy::Kind::Wiener:
      return estimator_gain(gamma, gain_labels(s.variant));
    case GainPolicy::Kind::Transmittance:
      return transmittance_gain(s);
    case GainPolicy::Kind::Fixed:
      return s.k_policy.fixed_value;
  }
  throw DomainError("resolve_gain: unknown policy");
}

CovarianceMatrix bob_postprocess(const CovarianceMatrix& gamma, double k, Variant v) {
  const auto labels = gain_labels(v);
  auto state = gamma;
  {
    const auto gate =
        cnot_gate(k, state.mode(labels.control), state.mode(labels.target), state.n_modes());
    state = apply(gate, state);
  }
  if (v == Variant::Het2M) {
    // p_B accumulates on B2P: the C-NOT with control B2P and target B1P
    // realizes p_B2P' = p_B2P + k p_B1P.
    const auto gate = cnot_gate(k, state.mode("B2P"), state.mode("B1P"), state.n_modes());
    state = apply(gate, state);
    return state.renamed("B2X", "B4").renamed("B1X", "B3").renamed("B2P", "B6").renamed("B1P",
                                                                                        "B5");
  }
  return state.renamed(labels.target, "B4").renamed(labels.control, "B3");
}

HolevoBound holevo_bound(const CovarianceMatrix& post, Variant v) {
  HolevoBound out;
  const auto joint = symplectic_spectrum_generic(post);
  out.S_E = entropy_of_spectrum(joint);
  out.spectrum_joint = joint.eigenvalues;

  auto cond = condition_on_homodyne(post, "B4", Quadrature::X);
  if (v == Variant::Het2M) cond = condition_on_homodyne(cond, "B6", Quadrature::P);
  const auto cond_spec = symplectic_spectrum_generic(cond);
  out.S_E_cond = entropy_of_spectrum(cond_spec);
  out.spectrum_cond = cond_spec.eigenvalues;
  out.I_BE = out.S_E - out.S_E_cond;
  return out;
}

HolevoBound holevo_bound_het2m(const CovarianceMatrix& post) {
  return holevo_bound(post, Variant::Het2M);
}

double mutual_info_cm(const CovarianceMatrix& post, Variant v) {
  const auto a1x = post.mode("A1X");
  const auto b4 = post.mode("B4");
  double info = half_log2_ratio(post.var(a1x, Quadrature::X),
                                post.cov(a1x, Quadrature::X, b4, Quadrature::X),
                                post.var(b4, Quadrature::X));
  if (v == Variant::Het2M) {
    const auto a1p = post.mode("A1P");
    const auto b6 = post.mode("B6");
    info += half_log2_ratio(post.var(a1p, Quadrature::P),
                            post.cov(a1p, Quadrature::P, b6, Quadrature::P),
                            post.var(b6, Quadrature::P));
  }
  return info;
}

double mutual_info_het2m(const ProtocolScenario& s) {
  const double V = s.V, VA = s.V_A, TA = s.T_A;
  const double T1 = s.ch1.transmittance, T2 = s.ch2.transmittance;
  const double chi1 = s.ch1.chi(), chi2 = s.ch2.chi();
  const double f = 2.0 * V - 2.0 * std::sqrt(V * V - 1.0) + chi1;
  const double shared = 1.0 + T1 * T2 * TA * (1.0 + f);
  return std::log2((shared + T2 * (VA - TA * VA + chi2)) / (shared + T2 * (1.0 - TA + chi2)));
}

double mutual_info_variant(const ProtocolScenario& s) {
  const double V = s.V, VA = s.V_A, TA = s.T_A;
  const double T1 = s.ch1.transmittance, T2 = s.ch2.transmittance;
  const double chi1 = s.ch1.chi(), chi2 = s.ch2.chi();
  const double f = 2.0 * V - 2.0 * std::sqrt(V * V - 1.0) + chi1;
  switch (s.variant) {
    case Variant::Hom2M:
      return 0.5 * std::log2((VA - TA * VA + TA * T1 * f + chi2) /
                             (1.0 - TA + TA * T1 * f + chi2));
    case Variant::HomHetM: {
      const double shared = 1.0 + T1 * T2 * TA * f;
      return 0.5 *
             std::log2((shared + T2 * (VA - TA * VA + chi2)) / (shared + T2 * (1.0 - TA + chi2)));
    }
    case Variant::HetHomM:
      return 0.5 * std::log2((VA - TA * VA + TA * T1 * (1.0 + f) + chi2) /
                             (1.0 - TA + TA * T1 * (1.0 + f) + chi2));
    default:
      throw DomainError("mutual_info_variant: use mutual_info_het2m or one_way_rate");
  }
}

RateReport one_way_rate(Variant v, double V, const ChannelParams& ch, double beta) {
  if (v != Variant::OneWayHet && v != Variant::OneWayHom)
    throw DomainError("one_way_rate: not a one-way variant");
  if (!(V >= 1.0)) throw DomainError("one_way_rate: V must satisfy V >= 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("one_way_rate: beta must lie in [0, 1]");

  auto state = epr_cm(V, "A", "B");
  state = apply_channel(std::move(state), "B", ch, "E", /*keep_eve=*/false);
  if (state.n_modes() > 2) {
    const std::size_t keep[] = {state.mode("A"), state.mode("B")};
    state = reduce(state, keep);
  }
  state = heterodyne_split(std::move(state), "A", "AX", "AP");

  RateReport report;
  if (v == Variant::OneWayHom) {
    const auto ax = state.mode("AX");
    const auto b = state.mode("B");
    report.I_BA = half_log2_ratio(state.var(b, Quadrature::X),
                                  state.cov(b, Quadrature::X, ax, Quadrature::X),
                                  state.var(ax, Quadrature::X));
    const auto joint = symplectic_spectrum_generic(state);
    report.S_E = entropy_of_spectrum(joint);
    report.spectrum_joint = joint.eigenvalues;
    const auto cond = condition_on_homodyne(state, "B", Quadrature::X);
    const auto cond_spec = symplectic_spectrum_generic(cond);
    report.S_E_cond = entropy_of_spectrum(cond_spec);
    report.spectrum_cond = cond_spec.eigenvalues;
  } else {
    state = heterodyne_split(std::move(state), "B", "BX", "BP");
    const auto ax = state.mode("AX");
    const auto ap = state.mode("AP");
    const auto bx = state.mode("BX");
    const auto bp = state.mode("BP");
    report.I_BA = half_log2_ratio(state.var(bx, Quadrature::X),
                                  state.cov(bx, Quadrature::X, ax, Quadrature::X),
                                  state.var(ax, Quadrature::X)) +
                  half_log2_ratio(state.var(bp, Quadrature::P),
                                  state.cov(bp, Quadrature::P, ap, Quadrature::P),
                                  state.var(ap, Quadrature::P));
    const auto joint = symplectic_spectrum_generic(state);
    report.S_E = entropy_of_spectrum(joint);
    report.spectrum_joint = joint.eigenvalues;
    auto cond = condition_on_homodyne(state, "BX", Quadrature::X);
    cond = condition_on_homodyne(cond, "BP", Quadrature::P);
    const auto cond_spec = symplectic_spectrum_generic(cond);
    report.S_E_cond = entropy_of_spectrum(cond_spec);
    report.spectrum_cond = cond_spec.eigenvalues;
  }
  report.I_BE = report.S_E - report.S_E_cond;
  report.K_R = beta * report.I_BA - report.I_BE;
  report.k_used = 0.0;
  return report;
}

RateReport key_rate(const ProtocolScenario& s) {
  s.validate();
  if (!is_two_way(s.variant)) return one_way_rate(s.variant, s.V, s.ch2, s.beta);

  const auto cm = build_two_way_constructive(s, /*keep_eve=*/false);
  const double k = resolve_gain(s, cm);
  const auto post = bob_postprocess(cm, k, s.variant);
  const auto hol = holevo_bound(post, s.variant);

  RateReport report;
  report.I_BA = mutual_info_cm(post, s.variant);
  report.S_E = hol.S_E;
  report.S_E_cond = hol.S_E_cond;
  report.I_BE = hol.I_BE;
  report.K_R = s.beta * report.I_BA - report.I_BE;
  report.k_used = k;
  report.spectrum_joint = hol.spectrum_joint;
  report.spectrum_cond = hol.spectrum_cond;
  return report;
}

}  // namespace cvqkd
