// Acceptance suite: one self-contained check per release criterion, each
// printing a PASS/FAIL line with timing. Exits nonzero if any check fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cvqkd/analysis.hpp"
#include "cvqkd/sampler.hpp"
#include "test_helpers.hpp"

using namespace cvqkd;

namespace {

struct Check {
  int id;
  std::string name;
  std::function<std::string()> run;  // empty string = pass, otherwise failure detail
  double budget_seconds = 0.0;       // 0 = no runtime requirement
};

ProtocolScenario grid_scenario(Variant variant, double v, double va, double ta, double t1,
                               double t2, double eps) {
  ProtocolScenario s;
  s.variant = variant;
  s.V = v;
  s.V_A = va;
  s.T_A = ta;
  s.beta = 1.0;
  s.ch1 = ChannelParams(t1, eps);
  s.ch2 = ChannelParams(t2, eps);
  return s;
}

ProtocolScenario fig3b_base(Variant variant) {
  ProtocolScenario s;
  s.variant = variant;
  s.V = 100.0;
  s.V_A = 100.0;
  s.T_A = 0.8;
  s.beta = 0.99;
  s.ch1 = ChannelParams(1.0, 0.2);
  s.ch2 = ChannelParams(1.0, 0.2);
  return s;
}

const double kGridV[] = {1.0, 2.0, 20.0, 100.0};
const double kGridTA[] = {0.3, 0.5, 0.8};
const double kGridT[] = {0.2, 0.7, 1.0};
const double kGridEps[] = {0.0, 0.1, 0.4};

std::string check_cm_equivalence() {
  double worst = 0.0;
  int points = 0;
  for (double v : kGridV)
    for (double ta : kGridTA)
      for (double t1 : kGridT)
        for (double t2 : kGridT)
          for (double eps : kGridEps) {
            const auto s = grid_scenario(Variant::Het2M, v, v, ta, t1, t2, eps);
            const auto closed = build_het2m_closed_form(s);
            const auto built = build_het2m_constructive(s);
            worst = std::max(worst,
                             (closed.entries() - built.entries()).cwiseAbs().maxCoeff());
            ++points;
          }
  char detail[128];
  std::snprintf(detail, sizeof(detail), "%d points, max |closed - constructive| = %.3e", points,
                worst);
  if (worst >= 1e-10) return std::string("tolerance 1e-10 exceeded: ") + detail;
  return "";
}

std::string check_eigenvalue_oracle() {
  std::mt19937_64 rng(20240817);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto gamma = cvqkd::testing::random_physical_cm(4, rng, 6.0);
    const auto generic = symplectic_spectrum_generic(gamma).eigenvalues;
    const auto quartic = symplectic_spectrum_quartic(symplectic_invariants(gamma)).eigenvalues;
    for (std::size_t i = 0; i < 4; ++i) {
      const double rel = std::abs(quartic[i] - generic[i]) / std::max(1.0, generic[i]);
      worst = std::max(worst, rel);
    }
  }
  if (worst >= 1e-8) {
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max relative deviation %.3e", worst);
    return detail;
  }
  return "";
}

std::string check_purification() {
  double worst_purity = 0.0;
  double worst_balance = 0.0;
  int points = 0;
  for (double v : kGridV)
    for (double ta : kGridTA)
      for (double t1 : kGridT)
        for (double t2 : kGridT)
          for (double eps : kGridEps) {
            if (t1 == 1.0 || t2 == 1.0) continue;  // cloner modes only exist on lossy legs
            const auto s = grid_scenario(Variant::Het2M, v, v, ta, t1, t2, eps);
            const auto global = build_het2m_constructive(s, /*keep_eve=*/true);
            if (global.n_modes() != 11) return "global state is not 11 modes";
            const auto spec = symplectic_spectrum_generic(global);
            for (double lambda : spec.eigenvalues)
              worst_purity = std::max(worst_purity, std::abs(lambda - 1.0));
            std::vector<std::size_t> ab, eve;
            for (std::size_t m = 0; m < global.n_modes(); ++m)
              (global.labels()[m].front() == 'E' ? eve : ab).push_back(m);
            const double s_ab = von_neumann_entropy(reduce(global, ab));
            const double s_eve = von_neumann_entropy(reduce(global, eve));
            worst_balance = std::max(worst_balance, std::abs(s_ab - s_eve));
            ++points;
          }
  char detail[160];
  std::snprintf(detail, sizeof(detail),
                "%d points, max |lambda - 1| = %.3e, max |S(AB) - S(E)| = %.3e", points,
                worst_purity, worst_balance);
  if (worst_purity >= 1e-8 || worst_balance >= 1e-8)
    return std::string("tolerance 1e-8 exceeded: ") + detail;
  return "";
}

std::string check_postprocess_invariance() {
  const auto s = scenario_at_distance(fig3b_base(Variant::Het2M), 20.0);
  const auto gamma = build_het2m_constructive(s);
  const double before = von_neumann_entropy(gamma);
  double worst = 0.0;
  for (double k : {0.0, 0.3, 1.0, 3.0})
    worst = std::max(worst, std::abs(von_neumann_entropy(bob_postprocess(gamma, k)) - before));
  if (worst >= 1e-10) {
    char detail[96];
    std::snprintf(detail, sizeof(detail), "max entropy shift %.3e", worst);
    return detail;
  }
  return "";
}

std::string check_tolerable_noise_ordering() {
  for (double d : {10.0, 20.0, 40.0}) {
    double prev = -1.0;
    for (double ta : {0.3, 0.5, 0.8}) {
      ProtocolScenario s;
      s.variant = Variant::Het2M;
      s.V = 1e5;
      s.V_A = s.V / (1.0 - ta);
      s.T_A = ta;
      s.beta = 0.99;
      s.ch1 = ChannelParams(1.0, 0.0);
      s.ch2 = ChannelParams(1.0, 0.0);
      const auto root = tolerable_epsilon(s, d);
      if (root.status != SweepStatus::Ok) {
        char detail[96];
        std::snprintf(detail, sizeof(detail), "no root at d = %g km, T_A = %g", d, ta);
        return detail;
      }
      if (root.value <= prev) {
        char detail[128];
        std::snprintf(detail, sizeof(detail),
                      "eps*(T_A = %g) = %.6f is not above the previous %.6f at %g km", ta,
                      root.value, prev, d);
        return detail;
      }
      prev = root.value;
    }
  }
  return "";
}

std::string check_max_distance_ordering() {
  double hom_het = 0.0;
  double best_other = 0.0;
  double worst_two_way = 1e30;
  for (const auto v : all_two_way_variants()) {
    const auto root = max_distance(fig3b_base(v));
    if (root.status != SweepStatus::Ok) return "a two-way variant has no positive-rate range";
    if (v == Variant::HomHetM)
      hom_het = root.value;
    else
      best_other = std::max(best_other, root.value);
    worst_two_way = std::min(worst_two_way, root.value);
  }
  double best_one_way = 0.0;
  for (const auto v : {Variant::OneWayHet, Variant::OneWayHom}) {
    const auto root = max_distance(fig3b_base(v));
    if (root.status != SweepStatus::Ok) return "a one-way baseline has no positive-rate range";
    best_one_way = std::max(best_one_way, root.value);
  }
  char detail[192];
  std::snprintf(detail, sizeof(detail),
                "d*(HomHetM) = %.2f km, best other two-way = %.2f km, worst two-way = %.2f km, "
                "best one-way = %.2f km",
                hom_het, best_other, worst_two_way, best_one_way);
  if (!(hom_het > best_other)) return std::string("HomHetM does not lead: ") + detail;
  if (!(worst_two_way > best_one_way))
    return std::string("a one-way baseline outranges a two-way variant: ") + detail;
  std::printf("          %s\n", detail);
  return "";
}

std::string check_mutual_info_consistency() {
  double worst = 0.0;
  for (double v : {2.0, 20.0, 100.0})
    for (double ta : {0.3, 0.5, 0.8})
      for (double t : {0.2, 0.7, 1.0}) {
        auto s = grid_scenario(Variant::Het2M, v, v, ta, t, t, 0.1);
        s.k_policy = GainPolicy::transmittance();
        const auto cm = build_two_way_constructive(s);
        const auto post = bob_postprocess(cm, resolve_gain(s, cm));
        const double via_cm = mutual_info_cm(post, Variant::Het2M);
        const double closed = mutual_info_het2m(s);
        worst = std::max(worst, std::abs(via_cm - closed) / std::max(1.0, std::abs(closed)));
      }
  char detail[96];
  std::snprintf(detail, sizeof(detail),
                "27 points, k = sqrt(T1 T2 T_A), max relative gap %.3e", worst);
  if (worst >= 1e-8) return std::string("tolerance 1e-8 exceeded: ") + detail;
  std::printf("          %s\n", detail);
  return "";
}

std::string check_fig4_monotonicity() {
  ProtocolScenario base;
  base.variant = Variant::Het2M;
  base.V = base.V_A = 20.0;
  base.T_A = 0.8;
  base.ch1 = ChannelParams(1.0, 0.1);
  base.ch2 = ChannelParams(1.0, 0.1);

  const std::vector<double> distances = {1.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  const std::vector<double> betas = {0.7, 0.8, 0.9, 1.0};
  for (double d : distances) {
    std::vector<double> rates;
    for (double beta : betas) {
      auto s = scenario_at_distance(scenario_at_epsilon(base, 0.1), d);
      s.beta = beta;
      rates.push_back(key_rate(s).K_R);
    }
    if (std::all_of(rates.begin(), rates.end(), [](double r) { return r > 0.0; }))
      for (std::size_t i = 1; i < rates.size(); ++i)
        if (!(rates[i] > rates[i - 1])) {
          char detail[96];
          std::snprintf(detail, sizeof(detail), "K_R not increasing in beta at %g km", d);
          return detail;
        }
  }
  const std::vector<double> epsilons = {0.05, 0.1, 0.2, 0.4};
  for (double d : distances) {
    std::vector<double> rates;
    for (double eps : epsilons) {
      auto s = scenario_at_distance(scenario_at_epsilon(base, eps), d);
      s.beta = 0.9;
      rates.push_back(key_rate(s).K_R);
    }
    if (std::all_of(rates.begin(), rates.end(), [](double r) { return r > 0.0; }))
      for (std::size_t i = 1; i < rates.size(); ++i)
        if (!(rates[i] < rates[i - 1])) {
          char detail[96];
          std::snprintf(detail, sizeof(detail), "K_R not decreasing in epsilon at %g km", d);
          return detail;
        }
  }
  return "";
}

std::string check_sampler_convergence() {
  const auto scenario = scenario_at_distance(fig3b_base(Variant::Het2M), 20.0);
  const auto gamma = build_het2m_constructive(scenario);
  const double analytic = key_rate(scenario).K_R;

  const auto shots = sample_shots(gamma, 1000000, 20240818);
  const auto sampled = key_rate_from_samples(shots, scenario, 200);
  char interval[160];
  std::snprintf(interval, sizeof(interval),
                "K_R interval [%.6f, %.6f] vs analytic %.6f, sigma = %.2e", sampled.kr_low,
                sampled.kr_high, analytic, sampled.kr_stderr);
  if (!(sampled.kr_low <= analytic && analytic <= sampled.kr_high))
    return std::string("interval misses the analytic rate: ") + interval;

  std::vector<double> log_n, log_err;
  for (std::size_t n : {1000ul, 10000ul, 100000ul, 1000000ul}) {
    const std::vector<ShotRecord> prefix(shots.begin(),
                                         shots.begin() + static_cast<std::ptrdiff_t>(n));
    const auto est = estimate_cm(prefix);
    const double err = (est.entries - gamma.entries()).norm();
    log_n.push_back(std::log10(static_cast<double>(n)));
    log_err.push_back(std::log10(err));
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mean_x += log_n[i];
    mean_y += log_err[i];
  }
  mean_x /= static_cast<double>(log_n.size());
  mean_y /= static_cast<double>(log_n.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    sxy += (log_n[i] - mean_x) * (log_err[i] - mean_y);
    sxx += (log_n[i] - mean_x) * (log_n[i] - mean_x);
  }
  const double slope = sxy / sxx;
  char detail[224];
  std::snprintf(detail, sizeof(detail), "%s, error slope %.3f", interval, slope);
  if (!(slope >= -0.6 && slope <= -0.4))
    return std::string("slope outside [-0.6, -0.4]: ") + detail;
  std::printf("          %s\n", detail);
  return "";
}

std::string check_trivial_limits() {
  for (const auto v : all_two_way_variants()) {
    auto s = grid_scenario(v, 20.0, 20.0, 0.8, 1.0, 1.0, 0.0);
    s.beta = 0.9;
    const auto r = key_rate(s);
    if (!(std::abs(r.I_BE) < 1e-9)) return variant_name(v) + ": identity-channel I_BE leaks";
    if (!(std::abs(r.K_R - s.beta * r.I_BA) < 1e-9))
      return variant_name(v) + ": K_R != beta * I_BA on the identity channel";
  }
  for (const auto v : {Variant::OneWayHet, Variant::OneWayHom}) {
    const auto r = one_way_rate(v, 20.0, ChannelParams(1.0, 0.0), 0.9);
    if (!(std::abs(r.I_BE) < 1e-9)) return variant_name(v) + ": identity-channel I_BE leaks";
    if (!(std::abs(r.K_R - 0.9 * r.I_BA) < 1e-9))
      return variant_name(v) + ": K_R != beta * I_BA on the identity channel";
  }
  for (const auto v : all_two_way_variants()) {
    auto s = grid_scenario(v, 20.0, 1.0, 0.8, 0.7, 0.7, 0.1);
    const auto r = key_rate(s);
    if (!(std::abs(r.I_BA) < 1e-12)) return variant_name(v) + ": I_BA nonzero without modulation";
  }
  return "";
}

}  // namespace

int main() {
  const std::vector<Check> checks = {
      {1, "covariance builders agree on the 324-point grid", check_cm_equivalence, 5.0},
      {2, "quartic eigenvalues match the spectral oracle on 1000 states",
       check_eigenvalue_oracle, 10.0},
      {3, "kept-cloner global state is pure and entropy-balanced", check_purification, 0.0},
      {4, "Bob's post-processing leaves Eve's entropy unchanged", check_postprocess_invariance,
       0.0},
      {5, "tolerable excess noise rises with the coupler transmittance",
       check_tolerable_noise_ordering, 60.0},
      {6, "transmission-distance ordering of the protocol family", check_max_distance_ordering,
       0.0},
      {7, "covariance pipeline reproduces the closed-form mutual information",
       check_mutual_info_consistency, 0.0},
      {8, "key rate monotone in reconciliation efficiency and excess noise",
       check_fig4_monotonicity, 0.0},
      {9, "shot-level estimates converge to the analytic rate", check_sampler_convergence,
       120.0},
      {10, "identity-channel and no-modulation limits", check_trivial_limits, 0.0},
  };

  int failures = 0;
  for (const auto& check : checks) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    try {
      detail = check.run();
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (detail.empty() && check.budget_seconds > 0.0 && seconds > check.budget_seconds) {
      char over[96];
      std::snprintf(over, sizeof(over), "runtime %.2fs exceeds the %.0fs budget", seconds,
                    check.budget_seconds);
      detail = over;
    }
    if (detail.empty()) {
      std::printf("[PASS] criterion %2d (%6.2fs): %s\n", check.id, seconds, check.name.c_str());
    } else {
      std::printf("[FAIL] criterion %2d (%6.2fs): %s\n       %s\n", check.id, seconds,
                  check.name.c_str(), detail.c_str());
      ++failures;
    }
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
