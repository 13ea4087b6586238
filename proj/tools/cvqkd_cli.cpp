#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cvqkd/analysis.hpp"
#include "cvqkd/csv.hpp"
#include "cvqkd/protocols.hpp"
#include "cvqkd/sampler.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct ScenarioOpts {
  std::string variant = "het2m";
  double V = 100.0;
  double V_A = 100.0;
  double T_A = 0.8;
  double beta = 0.99;
  double eps = 0.0;
  double dist = -1.0;  // km per leg; mutually exclusive with --T
  double T = -1.0;
  std::string k_policy = "wiener";
  double k_fixed = 0.0;
};

void add_scenario_options(CLI::App* cmd, ScenarioOpts& o) {
  cmd->add_option("--variant", o.variant,
                  "protocol variant: het2m|hom2m|homhetm|hethomm|oneway-het|oneway-hom")
      ->capture_default_str();
  cmd->add_option("--V", o.V, "Bob's EPR variance (>= 1)")->capture_default_str();
  cmd->add_option("--VA", o.V_A, "Alice's EPR variance (>= 1)")->capture_default_str();
  cmd->add_option("--TA", o.T_A, "Alice's coupler transmittance, in (0,1)")->capture_default_str();
  cmd->add_option("--beta", o.beta, "reconciliation efficiency, in [0,1]")->capture_default_str();
  cmd->add_option("--eps", o.eps, "excess noise per channel (shot-noise units)")
      ->capture_default_str();
  cmd->add_option("--dist", o.dist, "one-way fiber length in km (0.2 dB/km per leg)");
  cmd->add_option("--T", o.T, "per-leg transmittance, overrides --dist");
  cmd->add_option("--k-policy", o.k_policy, "gain policy: wiener|transmittance|fixed")
      ->capture_default_str();
  cmd->add_option("--k", o.k_fixed, "gain value for --k-policy fixed");
}

cvqkd::ProtocolScenario make_scenario(const ScenarioOpts& o) {
  cvqkd::ProtocolScenario s;
  const auto variant = cvqkd::variant_from_name(o.variant);
  if (!variant) throw cvqkd::DomainError("unknown variant '" + o.variant + "'");
  s.variant = *variant;
  s.V = o.V;
  s.V_A = o.V_A;
  s.T_A = o.T_A;
  s.beta = o.beta;
  double t = 1.0;
  if (o.T >= 0.0)
    t = o.T;
  else if (o.dist >= 0.0)
    t = cvqkd::distance_to_transmittance(o.dist);
  s.ch1 = cvqkd::ChannelParams(t, o.eps);
  s.ch2 = cvqkd::ChannelParams(t, o.eps);
  if (o.k_policy == "wiener")
    s.k_policy = cvqkd::GainPolicy::wiener();
  else if (o.k_policy == "transmittance")
    s.k_policy = cvqkd::GainPolicy::transmittance();
  else if (o.k_policy == "fixed")
    s.k_policy = cvqkd::GainPolicy::fixed(o.k_fixed);
  else
    throw cvqkd::DomainError("unknown k policy '" + o.k_policy + "'");
  s.validate();
  return s;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size())
      throw cvqkd::DomainError("grid entry '" + field + "' is not a number");
    grid.push_back(v);
  }
  return grid;
}

std::vector<cvqkd::Variant> parse_variants(const std::string& text) {
  std::vector<cvqkd::Variant> variants;
  std::stringstream ss(text);
  std::string field;
  while (std::getline(ss, field, ',')) {
    if (field.empty()) continue;
    const auto v = cvqkd::variant_from_name(field);
    if (!v) throw cvqkd::DomainError("unknown variant '" + field + "'");
    variants.push_back(*v);
  }
  if (variants.empty()) throw cvqkd::DomainError("no variants given");
  return variants;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cvqkd::DomainError("cannot open output file '" + path + "'");
  out << content;
}

std::string spectrum_line(const std::vector<double>& spectrum) {
  std::string line;
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    if (i) line += ", ";
    line += cvqkd::format_sci(spectrum[i]);
  }
  return line;
}

std::string report_text(const cvqkd::RateReport& r) {
  std::ostringstream out;
  out << "I_BA      " << cvqkd::format_sci(r.I_BA) << " bits\n"
      << "S_E       " << cvqkd::format_sci(r.S_E) << " bits\n"
      << "S_E_cond  " << cvqkd::format_sci(r.S_E_cond) << " bits\n"
      << "I_BE      " << cvqkd::format_sci(r.I_BE) << " bits\n"
      << "K_R       " << cvqkd::format_sci(r.K_R) << " bits/use\n"
      << "k_used    " << cvqkd::format_sci(r.k_used) << "\n"
      << "spectrum_joint  " << spectrum_line(r.spectrum_joint) << "\n"
      << "spectrum_cond   " << spectrum_line(r.spectrum_cond) << "\n";
  return out.str();
}

std::string report_csv(const cvqkd::RateReport& r) {
  std::ostringstream out;
  out << "I_BA,S_E,S_E_cond,I_BE,K_R,k_used\n"
      << cvqkd::format_sci(r.I_BA) << ',' << cvqkd::format_sci(r.S_E) << ','
      << cvqkd::format_sci(r.S_E_cond) << ',' << cvqkd::format_sci(r.I_BE) << ','
      << cvqkd::format_sci(r.K_R) << ',' << cvqkd::format_sci(r.k_used) << '\n';
  return out.str();
}

int run(int argc, char** argv) {
  CLI::App app{"Two-way CV-QKD key-rate toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; command-line flags take precedence");

  ScenarioOpts keyrate_opts;
  std::string keyrate_out;
  bool keyrate_csv = false;
  auto* keyrate = app.add_subcommand("keyrate", "secret key rate for one scenario");
  add_scenario_options(keyrate, keyrate_opts);
  keyrate->add_option("-o,--output", keyrate_out, "write report to file instead of stdout");
  keyrate->add_flag("--csv", keyrate_csv, "emit the report as CSV");

  ScenarioOpts sweep_opts;
  std::string sweep_out, sweep_axis = "distance", sweep_grid, sweep_variants = "het2m";
  auto* sweep_cmd = app.add_subcommand("sweep", "K_R over a parameter grid");
  add_scenario_options(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--axis", sweep_axis, "distance|epsilon|beta|TA")->capture_default_str();
  sweep_cmd->add_option("--grid", sweep_grid, "comma-separated, strictly increasing")->required();
  sweep_cmd->add_option("--variants", sweep_variants, "comma-separated variant list")
      ->capture_default_str();
  sweep_cmd->add_option("-o,--output", sweep_out, "output CSV path");

  ScenarioOpts tol_opts;
  std::string tol_out, tol_grid, tol_variants = "het2m";
  auto* tol_cmd = app.add_subcommand("tolerable-noise",
                                     "largest excess noise with K_R >= 0, per distance");
  add_scenario_options(tol_cmd, tol_opts);
  tol_cmd->add_option("--grid", tol_grid, "comma-separated distances in km")->required();
  tol_cmd->add_option("--variants", tol_variants, "comma-separated variant list")
      ->capture_default_str();
  tol_cmd->add_option("-o,--output", tol_out, "output CSV path");

  ScenarioOpts maxd_opts;
  std::string maxd_out, maxd_variants = "het2m";
  auto* maxd_cmd = app.add_subcommand("max-distance", "largest distance with K_R >= 0");
  add_scenario_options(maxd_cmd, maxd_opts);
  maxd_cmd->add_option("--variants", maxd_variants, "comma-separated variant list")
      ->capture_default_str();
  maxd_cmd->add_option("-o,--output", maxd_out, "output CSV path");

  ScenarioOpts emu_opts;
  std::string emu_shots_out, emu_cm_out, emu_report_out;
  std::size_t emu_n = 100000;
  std::uint64_t emu_seed = 1;
  std::size_t emu_resamples = 200;
  auto* emu_cmd = app.add_subcommand("emulate",
                                     "shot-level emulation and covariance re-estimation");
  add_scenario_options(emu_cmd, emu_opts);
  emu_cmd->add_option("--n-shots", emu_n, "number of measurement rounds")->capture_default_str();
  emu_cmd->add_option("--seed", emu_seed, "RNG seed")->envname("CVQKD_SEED");
  emu_cmd->add_option("--resamples", emu_resamples, "bootstrap resamples")->capture_default_str();
  emu_cmd->add_option("--shots-out", emu_shots_out, "write the shot record CSV here");
  emu_cmd->add_option("--cm-out", emu_cm_out, "write the estimated covariance CSV here");
  emu_cmd->add_option("-o,--output", emu_report_out, "write report to file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*keyrate) {
      const auto scenario = make_scenario(keyrate_opts);
      const auto report = cvqkd::key_rate(scenario);
      write_output(keyrate_out, keyrate_csv ? report_csv(report) : report_text(report));
    } else if (*sweep_cmd) {
      cvqkd::SweepSpec spec;
      spec.base = make_scenario(sweep_opts);
      spec.variants = parse_variants(sweep_variants);
      spec.grid = parse_grid(sweep_grid);
      spec.quantity = cvqkd::SweepQuantity::KeyRate;
      if (sweep_axis == "distance")
        spec.axis = cvqkd::SweepAxis::DistanceKm;
      else if (sweep_axis == "epsilon")
        spec.axis = cvqkd::SweepAxis::Epsilon;
      else if (sweep_axis == "beta")
        spec.axis = cvqkd::SweepAxis::Beta;
      else if (sweep_axis == "TA")
        spec.axis = cvqkd::SweepAxis::TA;
      else
        throw cvqkd::DomainError("unknown sweep axis '" + sweep_axis + "'");
      const auto rows = cvqkd::sweep(spec);
      std::ostringstream out;
      cvqkd::write_sweep_csv(out, spec.axis, spec.quantity, rows);
      write_output(sweep_out, out.str());
    } else if (*tol_cmd) {
      cvqkd::SweepSpec spec;
      spec.base = make_scenario(tol_opts);
      spec.variants = parse_variants(tol_variants);
      spec.grid = parse_grid(tol_grid);
      spec.axis = cvqkd::SweepAxis::DistanceKm;
      spec.quantity = cvqkd::SweepQuantity::TolerableEpsilon;
      const auto rows = cvqkd::sweep(spec);
      for (const auto& row : rows)
        if (row.monotonic_warning)
          std::cerr << "warning: multiple sign changes while bracketing "
                    << cvqkd::variant_name(row.variant) << " at "
                    << cvqkd::format_sci(row.axis_value) << " km\n";
      std::ostringstream out;
      cvqkd::write_sweep_csv(out, spec.axis, spec.quantity, rows);
      write_output(tol_out, out.str());
    } else if (*maxd_cmd) {
      const auto scenario = make_scenario(maxd_opts);
      const auto variants = parse_variants(maxd_variants);
      std::ostringstream out;
      out << "variant,d_star,status\n";
      for (const auto v : variants) {
        cvqkd::ProtocolScenario s = scenario;
        s.variant = v;
        const auto root = cvqkd::max_distance(s);
        out << cvqkd::variant_name(v) << ',' << cvqkd::format_sci(root.value) << ','
            << cvqkd::status_name(root.status) << '\n';
      }
      write_output(maxd_out, out.str());
    } else if (*emu_cmd) {
      const auto scenario = make_scenario(emu_opts);
      if (scenario.variant != cvqkd::Variant::Het2M)
        throw cvqkd::DomainError("emulate currently covers the het2m pipeline");
      const auto gamma = cvqkd::build_het2m_constructive(scenario);
      const auto shots = cvqkd::sample_shots(gamma, emu_n, emu_seed);
      const auto sampled = cvqkd::key_rate_from_samples(shots, scenario, emu_resamples);
      if (!emu_shots_out.empty()) {
        std::ofstream out(emu_shots_out, std::ios::binary);
        if (!out) throw cvqkd::DomainError("cannot open '" + emu_shots_out + "'");
        cvqkd::write_shots_csv(out, shots);
      }
      if (!emu_cm_out.empty()) {
        std::ofstream out(emu_cm_out, std::ios::binary);
        if (!out) throw cvqkd::DomainError("cannot open '" + emu_cm_out + "'");
        cvqkd::write_estimated_cm_csv(out, cvqkd::estimate_cm(shots), emu_seed);
      }
      std::ostringstream out;
      out << "n_shots   " << shots.size() << "\nseed      " << emu_seed << "\n"
          << report_text(sampled.report) << "K_R 3-sigma interval ["
          << cvqkd::format_sci(sampled.kr_low) << ", " << cvqkd::format_sci(sampled.kr_high)
          << "] from " << sampled.resamples << " resamples\n"
          << "analytic K_R " << cvqkd::format_sci(cvqkd::key_rate(scenario).K_R) << "\n";
      write_output(emu_report_out, out.str());
    }
  } catch (const cvqkd::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cvqkd::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cvqkd::IndexError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const cvqkd::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
