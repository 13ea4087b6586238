#include "cvqkd/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace cvqkd {

namespace {

constexpr double kResidualTol = 1e-8;
constexpr int kMaxBisectionIters = 200;
constexpr int kPreScanPoints = 32;

/// Bisection on [lo, hi] with f(lo) >= 0 > f(hi). Narrows until both the
/// interval tolerance and the residual tolerance are met.
RootResult bisect(const std::function<double(double)>& f, double lo, double hi, double f_lo,
                  double interval_tol) {
  double f_mid = f_lo;
  double mid = lo;
  for (int i = 0; i < kMaxBisectionIters; ++i) {
    mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    if (f_mid >= 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < interval_tol && std::abs(f_mid) < kResidualTol) break;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) break;
  }
  RootResult out;
  out.status = SweepStatus::Ok;
  out.value = mid;
  out.residual = std::abs(f_mid);
  return out;
}

bool multiple_sign_changes(const std::function<double(double)>& f, double lo, double hi) {
  int changes = 0;
  double prev = f(lo);
  for (int i = 1; i <= kPreScanPoints; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / kPreScanPoints;
    const double cur = f(x);
    if ((prev >= 0.0) != (cur >= 0.0)) ++changes;
    prev = cur;
  }
  return changes > 1;
}

RootResult find_root_upward(const std::function<double(double)>& f, double bracket_seed,
                            double bracket_cap, double interval_tol) {
  const double f0 = f(0.0);
  if (f0 <= 0.0) return {};  // NoRoot: not even the benign end is positive

  double hi = bracket_seed;
  double f_hi = f(hi);
  while (f_hi >= 0.0 && hi < bracket_cap) {
    hi = std::min(2.0 * hi, bracket_cap);
    f_hi = f(hi);
  }
  if (f_hi >= 0.0) return {};  // no sign change inside the allowed bracket

  auto result = bisect(f, 0.0, hi, f0, interval_tol);
  result.monotonic_warning = multiple_sign_changes(f, 0.0, hi);
  return result;
}

}  // namespace

double distance_to_transmittance(double d_km, double loss_db_per_km) {
  if (d_km < 0.0) throw DomainError("distance_to_transmittance: distance must be >= 0");
  return std::pow(10.0, -loss_db_per_km * d_km / 10.0);
}

ProtocolScenario scenario_at_distance(const ProtocolScenario& base, double d_km,
                                      double loss_db_per_km) {
  const double t = distance_to_transmittance(d_km, loss_db_per_km);
  ProtocolScenario s = base;
  s.ch1 = ChannelParams(t, base.ch1.excess_noise);
  s.ch2 = ChannelParams(t, base.ch2.excess_noise);
  return s;
}

ProtocolScenario scenario_at_epsilon(const ProtocolScenario& base, double epsilon) {
  ProtocolScenario s = base;
  s.ch1 = ChannelParams(base.ch1.transmittance, epsilon);
  s.ch2 = ChannelParams(base.ch2.transmittance, epsilon);
  return s;
}

std::string status_name(SweepStatus s) {
  switch (s) {
    case SweepStatus::Ok: return "ok";
    case SweepStatus::NegativeRate: return "negative_rate";
    case SweepStatus::NoRoot: return "no_root";
  }
  return "unknown";
}

std::string axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::DistanceKm: return "distance_km";
    case SweepAxis::Epsilon: return "epsilon";
    case SweepAxis::Beta: return "beta";
    case SweepAxis::TA: return "T_A";
  }
  return "unknown";
}

RootResult tolerable_epsilon(const ProtocolScenario& base, double d_km) {
  const auto at_distance = scenario_at_distance(base, d_km);
  auto rate = [&](double eps) { return key_rate(scenario_at_epsilon(at_distance, eps)).K_R; };
  return find_root_upward(rate, 1.0, 64.0, 1e-6);
}

RootResult max_distance(const ProtocolScenario& base) {
  auto rate = [&](double d) { return key_rate(scenario_at_distance(base, d)).K_R; };
  return find_root_upward(rate, 1.0, 1e5, 0.01);
}

void SweepSpec::validate() const {
  if (variants.empty()) throw DomainError("SweepSpec: at least one variant required");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("SweepSpec: grid must be strictly increasing");
  if (axis == SweepAxis::DistanceKm)
    for (double d : grid)
      if (d < 0.0) throw DomainError("SweepSpec: distances must be >= 0");
}

std::vector<SweepRow> sweep(const SweepSpec& spec) {
  spec.validate();
  std::vector<SweepRow> rows;
  rows.reserve(spec.grid.size() * spec.variants.size());
  for (double x : spec.grid) {
    for (Variant v : spec.variants) {
      ProtocolScenario s = spec.base;
      s.variant = v;
      SweepRow row;
      row.axis_value = x;
      row.variant = v;
      try {
        switch (spec.axis) {
          case SweepAxis::DistanceKm: s = scenario_at_distance(s, x); break;
          case SweepAxis::Epsilon: s = scenario_at_epsilon(s, x); break;
          case SweepAxis::Beta: s.beta = x; break;
          case SweepAxis::TA: s.T_A = x; break;
        }
        switch (spec.quantity) {
          case SweepQuantity::KeyRate: {
            const double kr = key_rate(s).K_R;
            row.value = kr;
            row.status = kr >= 0.0 ? SweepStatus::Ok : SweepStatus::NegativeRate;
            break;
          }
          case SweepQuantity::TolerableEpsilon: {
            const auto root = tolerable_epsilon(s, spec.axis == SweepAxis::DistanceKm ? x : 0.0);
            row.value = root.value;
            row.status = root.status;
            row.monotonic_warning = root.monotonic_warning;
            break;
          }
          case SweepQuantity::MaxDistance: {
            const auto root = max_distance(s);
            row.value = root.value;
            row.status = root.status;
            row.monotonic_warning = root.monotonic_warning;
            break;
          }
        }
      } catch (const std::exception&) {
        row.status = SweepStatus::NoRoot;
        row.value = 0.0;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace cvqkd
