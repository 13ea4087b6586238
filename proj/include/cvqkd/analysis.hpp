#pragma once

#include <string>
#include <vector>

#include "cvqkd/protocols.hpp"

namespace cvqkd {

inline constexpr double kFiberLossDbPerKm = 0.2;

/// T = 10^(-loss * d / 10), applied per fiber leg.
double distance_to_transmittance(double d_km, double loss_db_per_km = kFiberLossDbPerKm);

/// Scenario at one-way fiber length d: both legs get the same per-leg
/// transmittance (symmetric channels); one-way variants use a single leg.
ProtocolScenario scenario_at_distance(const ProtocolScenario& base, double d_km,
                                      double loss_db_per_km = kFiberLossDbPerKm);

/// Scenario with the excess noise of both channels set jointly.
ProtocolScenario scenario_at_epsilon(const ProtocolScenario& base, double epsilon);

enum class SweepStatus { Ok, NegativeRate, NoRoot };
std::string status_name(SweepStatus s);

struct RootResult {
  SweepStatus status = SweepStatus::NoRoot;
  double value = 0.0;     ///< the root, when status == Ok
  double residual = 0.0;  ///< |K_R| at the returned root
  bool monotonic_warning = false;
};

/// Largest excess noise with K_R >= 0 at fixed distance. Bisection over
/// epsilon with the upper bracket doubled from 1 until sign change (cap 64);
/// refined until the residual drops below 1e-8 bits.
RootResult tolerable_epsilon(const ProtocolScenario& base, double d_km);

/// Largest distance with K_R >= 0 (bracket doubled from 1 km).
RootResult max_distance(const ProtocolScenario& base);

enum class SweepAxis { DistanceKm, Epsilon, Beta, TA };
std::string axis_name(SweepAxis a);

enum class SweepQuantity { KeyRate, TolerableEpsilon, MaxDistance };

struct SweepSpec {
  std::vector<Variant> variants;
  SweepAxis axis = SweepAxis::DistanceKm;
  std::vector<double> grid;  ///< strictly increasing
  ProtocolScenario base;
  SweepQuantity quantity = SweepQuantity::KeyRate;

  void validate() const;
};

struct SweepRow {
  double axis_value = 0.0;
  Variant variant = Variant::Het2M;
  double value = 0.0;
  SweepStatus status = SweepStatus::Ok;
  bool monotonic_warning = false;  ///< root search saw multiple sign changes
};

/// Evaluates the requested quantity at every grid point for every variant;
/// per-row status, never aborts the whole sweep.
std::vector<SweepRow> sweep(const SweepSpec& spec);

}  // namespace cvqkd
