#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wqed/analysis.hpp"
#include "wqed/baseline.hpp"
#include "wqed/evolution.hpp"
#include "wqed/io.hpp"
#include "wqed/lazy.hpp"
#include "wqed/oracle.hpp"
#include "wqed/state.hpp"
#include "wqed/svg.hpp"
#include "wqed/version.hpp"
#include "wqed/views.hpp"

namespace wqed {

/// Invalid configuration; the CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// User-facing knobs. Negative values mean "use the scenario default"; the
/// effective values are echoed into the run manifest.
struct ScenarioConfig {
  std::string scenario;
  double dt = 0.05;
  double t_max = -1.0;
  double gamma = -1.0;
  double gamma_left = -1.0;
  double gamma_right = -1.0;
  double tau_g = -1.0;
  double t0 = -1.0;
  double phi = std::numbers::pi;
  double delay = -1.0;
  std::string out_dir = "out";
  std::string format = "both";  // csv | svg | both
  int substeps = 1;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
};

struct RunManifest {
  std::string scenario;
  std::string version;
  std::map<std::string, double> config;
  std::string out_dir;
  std::string format;
  std::vector<std::string> outputs;
  std::vector<CheckResult> checks;
  double wall_seconds = 0.0;
  std::filesystem::path path;

  bool all_passed() const {
    for (const CheckResult& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

namespace detail {

struct EffectiveConfig {
  std::string scenario;
  double dt, t_max, gamma, gamma_left, gamma_right, tau_g, t0, phi, delay;
  std::filesystem::path out_dir;
  bool want_csv, want_svg;
  int substeps;

  std::map<std::string, double> echo() const {
    return {{"dt", dt},         {"t_max", t_max}, {"gamma", gamma},
            {"gamma_left", gamma_left}, {"gamma_right", gamma_right},
            {"tau_g", tau_g},   {"t0", t0},       {"phi", phi},
            {"delay", delay},   {"substeps", static_cast<double>(substeps)}};
  }
  std::string provenance() const {
    std::string s = "scenario=" + scenario;
    for (const auto& [k, v] : echo()) s += " " + k + "=" + io::format_double(v);
    return s;
  }
};

inline EffectiveConfig resolve_config(const ScenarioConfig& c) {
  const std::vector<std::string> known = {"single-scatter", "two-scatter", "two-waveguide",
                                          "feedback",       "benchmark",   "convergence"};
  if (std::find(known.begin(), known.end(), c.scenario) == known.end())
    throw ConfigError("unknown scenario '" + c.scenario + "'");
  EffectiveConfig e;
  e.scenario = c.scenario;
  e.dt = c.dt;
  const bool two_wg = c.scenario == "two-waveguide";
  e.t_max = c.t_max >= 0 ? c.t_max : (two_wg ? 15.0 : 10.0);
  e.gamma = c.gamma >= 0 ? c.gamma : 1.0;
  e.gamma_left = c.gamma_left >= 0 ? c.gamma_left : 0.5;
  e.gamma_right = c.gamma_right >= 0 ? c.gamma_right : 0.5;
  e.tau_g = c.tau_g >= 0 ? c.tau_g : (two_wg ? 2.0 : 1.0);
  e.t0 = c.t0 >= 0 ? c.t0 : (two_wg ? 7.5 : 5.0);
  e.phi = c.phi;
  e.delay = c.delay >= 0 ? c.delay : 1.0;
  e.out_dir = c.out_dir;
  e.substeps = c.substeps;

  if (!(e.dt > 0)) throw ConfigError("dt must be positive");
  if (!(e.t_max > 0)) throw ConfigError("t-max must be positive");
  if (!(e.gamma > 0) || !(e.gamma_left > 0) || !(e.gamma_right > 0))
    throw ConfigError("rates must be positive");
  if (!(e.tau_g > 0)) throw ConfigError("tau-g must be positive");
  if (e.t0 < 0) throw ConfigError("t0 must be non-negative");
  if (e.substeps < 1) throw ConfigError("substeps must be >= 1");
  if (c.format == "csv") {
    e.want_csv = true;
    e.want_svg = false;
  } else if (c.format == "svg") {
    e.want_csv = false;
    e.want_svg = true;
  } else if (c.format == "both") {
    e.want_csv = e.want_svg = true;
  } else {
    throw ConfigError("format must be csv, svg or both");
  }
  if (c.scenario == "feedback") {
    if (!(e.delay > 0)) throw ConfigError("feedback needs a positive delay");
    const double ratio = e.delay / e.dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * (1.0 + std::abs(ratio)))
      throw ConfigError("delay must be an integer multiple of dt (delay/dt = " +
                        io::format_double(ratio) + ")");
    const int tau_bins = static_cast<int>(std::round(ratio));
    const int n_bins = static_cast<int>(std::lround(e.t_max / e.dt)) + 1;
    const int steps = n_bins - 1 - tau_bins;
    if (steps < 1)
      throw ConfigError("feedback horizon violates steps + delay_bins <= n_bins: need t_max > "
                        "delay + dt (t_max = " +
                        io::format_double(e.t_max) + ", delay = " + io::format_double(e.delay) +
                        ")");
  }
  return e;
}

inline LazyOp scatter_hamiltonian(const CompositeBasis& comp, const FockBasis& be,
                                  const WaveguideBasis& bw, double gamma, int guide) {
  const complex c = complex(0.0, 1.0) * std::sqrt(gamma / bw.grid().dt());
  return lazy_sum(
      {scale(c, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, guide)}})),
       scale(-c, lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw, guide)}}))});
}

inline std::vector<double> reals(const std::vector<complex>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

struct ScenarioOutput {
  std::vector<std::string> outputs;
  std::vector<CheckResult> checks;
};

// ---------------------------------------------------------------------------
// single-scatter: Gaussian one-photon pulse on a two-level emitter, compared
// against the closed-form solution of the scattering equations of motion.
// ---------------------------------------------------------------------------
inline ScenarioOutput run_single_scatter(const EffectiveConfig& cfg) {
  const TimeGrid grid = TimeGrid::span(0.0, cfg.t_max, cfg.dt);
  const WaveguideBasis bw(1, 1, grid);
  const FockBasis be(1);
  const CompositeBasis comp = tensor_basis({be, bw});
  const oracle::GaussianPulseParams pulse{cfg.tau_g, cfg.t0, cfg.gamma};

  LazyOp h = scatter_hamiltonian(comp, be, bw, cfg.gamma, 1);
  const StateVector psi_in = tensor_state(
      fock_state(be, 0),
      onephoton(bw, 1, [&](double t) { return complex(oracle::gaussian_xi(t, pulse), 0.0); }));
  const std::vector<double> times = grid.times();
  const EvolutionResult res =
      waveguide_evolution(times, psi_in, h, {}, SolverConfig{cfg.substeps});

  const OnePhotonWavefunction in_view = one_photon_view(psi_in);
  const OnePhotonWavefunction out_view = one_photon_view(res.final_state);
  std::vector<complex> oracle_out(static_cast<std::size_t>(grid.n_bins()));
  for (int k = 1; k <= grid.n_bins(); ++k)
    oracle_out[static_cast<std::size_t>(k - 1)] = oracle::analytic_xi_out(grid.time_at(k), pulse);

  const L2Error err = l2_error(out_view.values, oracle_out, cfg.dt);
  ScenarioOutput out;
  out.checks.push_back({"relative_l2_error_vs_oracle_below_1e-2", err.relative < 1e-2,
                        err.relative});
  // With one Runge-Kutta step per bin the norm drifts at the 1e-5 scale;
  // raise --substeps to push it down (drift scales as substeps^-5).
  out.checks.push_back({"norm_drift", std::abs(res.final_state.norm() - psi_in.norm()) < 1e-4,
                        std::abs(res.final_state.norm() - psi_in.norm())});

  if (cfg.want_csv) {
    io::write_one_photon_csv(cfg.out_dir / "wavefunction_input.csv", in_view);
    io::write_one_photon_csv(cfg.out_dir / "wavefunction_output.csv", out_view);
    OnePhotonWavefunction oracle_view{grid, 1, oracle_out, 0.0};
    io::write_one_photon_csv(cfg.out_dir / "wavefunction_oracle.csv", oracle_view);
    out.outputs.insert(out.outputs.end(), {"wavefunction_input.csv", "wavefunction_output.csv",
                                           "wavefunction_oracle.csv"});
  }
  if (cfg.want_svg) {
    svg::line_plot(cfg.out_dir / "single_scatter.svg",
                   {{"input", times, reals(in_view.values)},
                    {"scattered", times, reals(out_view.values)},
                    {"scattered (EOM)", times, reals(oracle_out)}},
                   "Single-photon scattering", "t", "xi(t)", cfg.provenance());
    out.outputs.push_back("single_scatter.svg");
  }
  return out;
}

// ---------------------------------------------------------------------------
// two-scatter: two-photon Gaussian pulse on the emitter; the scattered
// wavefunction is decomposed into product modes.
// ---------------------------------------------------------------------------
inline ScenarioOutput run_two_scatter(const EffectiveConfig& cfg) {
  const TimeGrid grid = TimeGrid::span(0.0, cfg.t_max, cfg.dt);
  const WaveguideBasis bw(2, 1, grid);
  const FockBasis be(1);
  const CompositeBasis comp = tensor_basis({be, bw});
  const oracle::GaussianPulseParams pulse{cfg.tau_g, cfg.t0, cfg.gamma};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const auto xi2 = [&](double t, double tp) {
    return complex(inv_sqrt2 * oracle::gaussian_xi(t, pulse) * oracle::gaussian_xi(tp, pulse),
                   0.0);
  };

  LazyOp h = scatter_hamiltonian(comp, be, bw, cfg.gamma, 1);
  StateVector psi_in = tensor_state(fock_state(be, 0), twophoton(bw, 1, xi2));
  psi_in.normalize();  // the discretized pulse is O(dt^2) away from unit norm
  const std::vector<double> times = grid.times();
  const EvolutionResult res =
      waveguide_evolution(times, psi_in, h, {}, SolverConfig{cfg.substeps});

  const TwoPhotonWavefunction in_view = two_photon_view(psi_in);
  const TwoPhotonWavefunction out_view = two_photon_view(res.final_state);
  const SchmidtDecomposition dec_in = schmidt_decompose(in_view);
  const SchmidtDecomposition dec_out = schmidt_decompose(out_view);

  ScenarioOutput out;
  const double l1_in = dec_in.lambdas[0] * dec_in.lambdas[0];
  const double l1_out = dec_out.lambdas[0] * dec_out.lambdas[0];
  int above = 0;
  for (double l : dec_out.lambdas)
    if (l * l > 1e-3) ++above;
  out.checks.push_back({"input_lambda1_sq_is_1", std::abs(l1_in - 1.0) < 1e-8, l1_in});
  out.checks.push_back({"scattered_lambda1_sq_below_0.999", l1_out < 0.999, l1_out});
  out.checks.push_back({"scattered_modes_above_1e-3_at_least_3", above >= 3,
                        static_cast<double>(above)});
  out.checks.push_back(
      {"norm_drift", std::abs(res.final_state.norm() - 1.0) < 1e-3,
       std::abs(res.final_state.norm() - 1.0)});

  if (cfg.want_csv) {
    io::write_two_photon_csv(cfg.out_dir / "xi2_output.csv", out_view);
    io::write_schmidt_csv(cfg.out_dir / "schmidt.csv", dec_out);
    out.outputs.insert(out.outputs.end(), {"xi2_output.csv", "schmidt.csv"});
    for (std::size_t i = 0; i < 3 && i < dec_out.modes.size(); ++i) {
      const std::string name = "schmidt_mode_" + std::to_string(i + 1) + ".csv";
      io::write_schmidt_mode_csv(cfg.out_dir / name, dec_out, i);
      out.outputs.push_back(name);
    }
  }
  if (cfg.want_svg) {
    std::vector<double> density(out_view.values.size());
    for (std::size_t i = 0; i < density.size(); ++i) density[i] = std::norm(out_view.values[i]);
    svg::heatmap(cfg.out_dir / "xi2_density.svg", density, out_view.n(), grid.t0(),
                 grid.time_at(grid.n_bins()), "|xi2(t, t')|^2 after scattering", "t'", "t",
                 cfg.provenance());
    out.outputs.push_back("xi2_density.svg");
  }
  return out;
}

// ---------------------------------------------------------------------------
// two-waveguide: two-photon pulse in guide 1 (transmitted, "R") on an emitter
// coupled to both guides; guide 2 collects the reflection ("L").
// ---------------------------------------------------------------------------
inline ScenarioOutput run_two_waveguide(const EffectiveConfig& cfg) {
  const TimeGrid grid = TimeGrid::span(0.0, cfg.t_max, cfg.dt);
  const WaveguideBasis bw(2, 2, grid);
  const FockBasis be(1);
  const CompositeBasis comp = tensor_basis({be, bw});
  const oracle::GaussianPulseParams pulse{cfg.tau_g, cfg.t0, 1.0};
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const auto xi2 = [&](double t, double tp) {
    return complex(inv_sqrt2 * oracle::gaussian_xi(t, pulse) * oracle::gaussian_xi(tp, pulse),
                   0.0);
  };

  LazyOp h = lazy_sum({scatter_hamiltonian(comp, be, bw, cfg.gamma_right, 1),
                       scatter_hamiltonian(comp, be, bw, cfg.gamma_left, 2)});
  StateVector psi_in = tensor_state(fock_state(be, 0), twophoton(bw, 1, xi2));
  psi_in.normalize();
  const std::vector<double> times = grid.times();

  // Per-bin populations: emitter occupation and 2x the ground-slice sector
  // probabilities (the two-time density integrals reduce to exactly these).
  const std::size_t n = static_cast<std::size_t>(grid.n_bins());
  const std::size_t rr_lo = bw.pair_same_offset(1), rr_hi = rr_lo + n * (n + 1) / 2;
  const std::size_t ll_lo = bw.pair_same_offset(2), ll_hi = ll_lo + n * (n + 1) / 2;
  const std::size_t lr_lo = bw.pair_cross_offset(1, 2), lr_hi = lr_lo + n * n;
  const std::size_t wdim = bw.dimension();
  const Observer fout = [&](double, const StateVector& psi) {
    const auto amps = psi.amplitudes();
    double ne = 0.0;
    for (std::size_t w = 0; w < wdim; ++w) ne += std::norm(amps[wdim + w]);  // emitter excited
    double rr = 0.0, ll = 0.0, lr = 0.0;
    for (std::size_t w = rr_lo; w < rr_hi; ++w) rr += std::norm(amps[w]);
    for (std::size_t w = ll_lo; w < ll_hi; ++w) ll += std::norm(amps[w]);
    for (std::size_t w = lr_lo; w < lr_hi; ++w) lr += std::norm(amps[w]);
    return std::vector<complex>{complex(ne, 0.0), complex(2.0 * rr, 0.0), complex(2.0 * ll, 0.0),
                                complex(2.0 * lr, 0.0)};
  };
  const EvolutionResult res =
      waveguide_evolution(times, psi_in, h, fout, SolverConfig{cfg.substeps});

  const TwoPhotonWavefunction rr_view = two_photon_view(res.final_state, 1);
  const TwoPhotonWavefunction ll_view = two_photon_view(res.final_state, 2);
  const TwoPhotonWavefunction lr_view = two_photon_view(res.final_state, 2, 1);
  const double n_rr = mode_population(rr_view);
  const double n_ll = mode_population(ll_view);
  const double n_lr = mode_population(lr_view);
  const double ne_end = res.series.back()[0].real();

  ScenarioOutput out;
  const double total = n_rr + n_ll + n_lr + 2.0 * ne_end;
  out.checks.push_back({"population_sum_is_2", std::abs(total - 2.0) < 1e-2, total});
  double diag_max = 0.0, ll_max = 0.0;
  for (int i = 1; i <= grid.n_bins(); ++i) {
    diag_max = std::max(diag_max, std::abs(ll_view.at(i, i)));
    for (int k = 1; k <= grid.n_bins(); ++k) ll_max = std::max(ll_max, std::abs(ll_view.at(i, k)));
  }
  out.checks.push_back(
      {"reflected_diagonal_empty", ll_max > 0.0 && diag_max < 0.05 * ll_max,
       ll_max > 0.0 ? diag_max / ll_max : 0.0});
  // the emitter reflects one photon at a time, so the double-reflection
  // channel stays clearly subdominant
  out.checks.push_back({"double_reflection_subdominant", n_ll < 0.5 * n_rr && n_ll < 0.2 * n_lr,
                        n_rr > 0.0 ? n_ll / n_rr : 0.0});

  if (cfg.want_csv) {
    io::write_two_photon_csv(cfg.out_dir / "xi2_rr.csv", rr_view);
    io::write_two_photon_csv(cfg.out_dir / "xi2_ll.csv", ll_view);
    io::write_two_photon_csv(cfg.out_dir / "xi2_lr.csv", lr_view);
    std::vector<std::vector<double>> cols(5);
    cols[0] = res.times;
    for (const auto& sample : res.series) {
      cols[1].push_back(sample[1].real());  // n_rr
      cols[2].push_back(sample[2].real());  // n_ll
      cols[3].push_back(sample[3].real());  // n_lr
      cols[4].push_back(sample[0].real());  // n_e
    }
    io::write_table_csv(cfg.out_dir / "populations.csv", {"t", "n_rr", "n_ll", "n_lr", "n_e"},
                        cols);
    out.outputs.insert(out.outputs.end(),
                       {"xi2_rr.csv", "xi2_ll.csv", "xi2_lr.csv", "populations.csv"});
  }
  if (cfg.want_svg) {
    const auto density = [&](const TwoPhotonWavefunction& v) {
      std::vector<double> d(v.values.size());
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(v.values[i]);
      return d;
    };
    const double t_end = grid.time_at(grid.n_bins());
    svg::heatmap(cfg.out_dir / "xi2_rr.svg", density(rr_view), rr_view.n(), grid.t0(), t_end,
                 "|xi2_RR|^2", "t'", "t", cfg.provenance());
    svg::heatmap(cfg.out_dir / "xi2_ll.svg", density(ll_view), ll_view.n(), grid.t0(), t_end,
                 "|xi2_LL|^2", "t'", "t", cfg.provenance());
    svg::heatmap(cfg.out_dir / "xi2_lr.svg", density(lr_view), lr_view.n(), grid.t0(), t_end,
                 "|xi2_LR|^2", "t'", "t", cfg.provenance());
    std::vector<svg::Series> pops;
    const char* labels[4] = {"n_e", "n_RR", "n_LL", "n_LR"};
    for (int c = 0; c < 4; ++c) {
      svg::Series s{labels[c], res.times, {}};
      for (const auto& sample : res.series)
        s.y.push_back(sample[static_cast<std::size_t>(c)].real());
      pops.push_back(std::move(s));
    }
    svg::line_plot(cfg.out_dir / "populations.svg", pops, "Mode populations", "t", "population",
                   cfg.provenance());
    out.outputs.insert(out.outputs.end(), {"xi2_rr.svg", "xi2_ll.svg", "xi2_lr.svg",
                                           "populations.svg"});
  }
  return out;
}

// ---------------------------------------------------------------------------
// feedback: initially excited emitter coupled to the waveguide at two points
// separated by the mirror round-trip delay; phase pi traps half of the
// excitation, phase 0 speeds the decay up relative to the tau = infinity
// (single-coupling) reference.
// ---------------------------------------------------------------------------
inline ScenarioOutput run_feedback(const EffectiveConfig& cfg) {
  const TimeGrid grid = TimeGrid::span(0.0, cfg.t_max, cfg.dt);
  const WaveguideBasis bw(1, 1, grid);
  const FockBasis be(1);
  const CompositeBasis comp = tensor_basis({be, bw});
  const int tau_bins = delay_bins_from_time(cfg.delay, cfg.dt);
  const int points = grid.n_bins() - tau_bins;  // evolve to t_max - delay
  const std::vector<double> all_times = grid.times();
  std::vector<double> ts(all_times.begin(), all_times.begin() + points);

  const StateVector psi_in = tensor_state(fock_state(be, 1), zerophoton(bw));
  std::vector<LazyOp> n_e{lazy_tensor(comp, {{0, fock_number(be)}})};

  const auto feedback_h = [&](double phi) {
    const double c = std::sqrt(cfg.gamma / (2.0 * cfg.dt));
    const complex eip = std::polar(1.0, phi);
    return lazy_sum(
        {scale(c * eip, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw)}})),
         scale(c * std::conj(eip),
               lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw)}})),
         scale(complex(c, 0.0),
               lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, 1, tau_bins)}})),
         scale(complex(c, 0.0),
               lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw, 1, tau_bins)}}))});
  };

  const SolverConfig solver{cfg.substeps};
  LazyOp h0 = feedback_h(0.0);
  LazyOp hpi = feedback_h(std::numbers::pi);
  LazyOp href = scatter_hamiltonian(comp, be, bw, cfg.gamma, 1);  // tau = infinity reference
  const ExpectationSeries s0 = expectation_series(ts, psi_in, h0, n_e, solver);
  const ExpectationSeries spi = expectation_series(ts, psi_in, hpi, n_e, solver);
  const ExpectationSeries sref = expectation_series(ts, psi_in, href, n_e, solver);
  const bool custom = std::abs(cfg.phi) > 1e-12 && std::abs(cfg.phi - std::numbers::pi) > 1e-12;
  std::optional<ExpectationSeries> scustom;
  if (custom) {
    LazyOp hc = feedback_h(cfg.phi);
    scustom = expectation_series(ts, psi_in, hc, n_e, solver);
  }

  ScenarioOutput out;
  // phase pi traps the excitation: the population is flat over the last time
  // unit and sits at 1/(1 + gamma*tau/2)^2, up to O(dt) discretization
  double plateau_lo = 1.0, plateau_hi = 0.0;
  const double t_end = ts.back();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < t_end - 1.0) continue;
    const double v = spi.values[0][i].real();
    plateau_lo = std::min(plateau_lo, v);
    plateau_hi = std::max(plateau_hi, v);
  }
  const double bound = 1.0 / std::pow(1.0 + 0.5 * cfg.gamma * cfg.delay, 2.0);
  out.checks.push_back({"phi_pi_population_is_flat", plateau_hi - plateau_lo < 5e-3,
                        plateau_hi - plateau_lo});
  out.checks.push_back({"phi_pi_plateau_matches_bound_state",
                        std::abs(plateau_hi - bound) < 0.01, plateau_hi});
  // phase 0: decay at least as fast as the gamma reference after the delay
  double worst = -1.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] <= cfg.delay) continue;
    worst = std::max(worst, s0.values[0][i].real() - std::exp(-cfg.gamma * ts[i]));
  }
  out.checks.push_back({"phi_0_decays_faster_than_reference", worst < 0.02, worst});

  if (cfg.want_csv) {
    std::vector<std::string> header{"t", "ne_phi0", "ne_phipi", "ne_reference"};
    std::vector<std::vector<double>> cols{ts, reals(s0.values[0]), reals(spi.values[0]),
                                          reals(sref.values[0])};
    if (custom) {
      header.push_back("ne_custom_phi");
      cols.push_back(reals(scustom->values[0]));
    }
    io::write_table_csv(cfg.out_dir / "feedback_populations.csv", header, cols);
    out.outputs.push_back("feedback_populations.csv");
  }
  if (cfg.want_svg) {
    std::vector<svg::Series> series{{"phi = 0", ts, reals(s0.values[0])},
                                    {"phi = pi", ts, reals(spi.values[0])},
                                    {"tau = inf", ts, reals(sref.values[0])}};
    if (custom) series.push_back({"phi = custom", ts, reals(scustom->values[0])});
    svg::line_plot(cfg.out_dir / "feedback.svg", series, "Emitter population with feedback", "t",
                   "<n_e>", cfg.provenance());
    out.outputs.push_back("feedback.svg");
  }
  return out;
}

// ---------------------------------------------------------------------------
// benchmark: matrix-free vs preallocated sparse operators, two-photon pulse.
// ---------------------------------------------------------------------------
inline ScenarioOutput run_benchmark_scenario(const EffectiveConfig& cfg) {
  const std::vector<int> n_list{50, 100, 200, 400};
  const std::vector<BenchmarkReport> reports = run_benchmark("two-scatter", n_list, 5);
  ScenarioOutput out;
  if (cfg.want_csv || cfg.want_svg) {
    io::write_benchmark_csv(cfg.out_dir / "benchmark.csv", reports);
    out.outputs.push_back("benchmark.csv");
  }
  std::map<int, double> mf_total, sp_total;
  std::map<int, std::size_t> mf_bytes;
  for (const BenchmarkReport& r : reports) {
    if (r.method == "matrix_free") {
      mf_total[r.n_bins] = r.alloc_seconds + r.solve_seconds;
      mf_bytes[r.n_bins] = r.operator_bytes;
    } else {
      sp_total[r.n_bins] = r.alloc_seconds + r.solve_seconds;
    }
  }
  for (int n : n_list) {
    if (n < 200) continue;
    const double ratio = sp_total[n] / mf_total[n];
    out.checks.push_back({"speedup_at_n_" + std::to_string(n) + "_at_least_10x", ratio >= 10.0,
                          ratio});
  }
  const bool constant = mf_bytes[n_list.front()] == mf_bytes[n_list.back()];
  out.checks.push_back({"matrix_free_operator_bytes_constant", constant,
                        static_cast<double>(mf_bytes[n_list.back()])});
  return out;
}

// ---------------------------------------------------------------------------
// convergence: error of the scattered one-photon pulse against the analytic
// solution as the grid is refined.
// ---------------------------------------------------------------------------
inline ScenarioOutput run_convergence(const EffectiveConfig& cfg) {
  const std::vector<int> n_list{100, 200, 400, 800};
  const oracle::GaussianPulseParams pulse{cfg.tau_g, cfg.t0, cfg.gamma};
  std::vector<double> rels, abss, dts;
  for (int n : n_list) {
    const double dt = cfg.t_max / n;
    const TimeGrid grid(0.0, dt, n + 1);
    const WaveguideBasis bw(1, 1, grid);
    const FockBasis be(1);
    const CompositeBasis comp = tensor_basis({be, bw});
    LazyOp h = scatter_hamiltonian(comp, be, bw, cfg.gamma, 1);
    const StateVector psi_in = tensor_state(
        fock_state(be, 0),
        onephoton(bw, 1, [&](double t) { return complex(oracle::gaussian_xi(t, pulse), 0.0); }));
    const EvolutionResult res = waveguide_evolution(grid.times(), psi_in, h);
    const OnePhotonWavefunction out_view = one_photon_view(res.final_state);
    std::vector<complex> oracle_out(static_cast<std::size_t>(grid.n_bins()));
    for (int k = 1; k <= grid.n_bins(); ++k)
      oracle_out[static_cast<std::size_t>(k - 1)] =
          oracle::analytic_xi_out(grid.time_at(k), pulse);
    const L2Error err = l2_error(out_view.values, oracle_out, dt);
    rels.push_back(err.relative);
    abss.push_back(err.absolute);
    dts.push_back(dt);
  }
  ScenarioOutput out;
  bool monotone = true;
  for (std::size_t i = 1; i < rels.size(); ++i) monotone = monotone && rels[i] < rels[i - 1];
  out.checks.push_back({"relative_error_decreases_monotonically", monotone, rels.back()});

  std::vector<double> n_col(n_list.begin(), n_list.end());
  if (cfg.want_csv || cfg.want_svg) {
    io::write_table_csv(cfg.out_dir / "convergence.csv", {"n_bins", "dt", "abs_l2", "rel_l2"},
                        {n_col, dts, abss, rels});
    out.outputs.push_back("convergence.csv");
  }
  if (cfg.want_svg) {
    std::vector<double> log_n(n_col.size()), log_e(rels.size());
    for (std::size_t i = 0; i < n_col.size(); ++i) {
      log_n[i] = std::log10(n_col[i]);
      log_e[i] = std::log10(rels[i]);
    }
    svg::line_plot(cfg.out_dir / "convergence.svg", {{"relative L2 error", log_n, log_e}},
                   "Convergence to the analytic solution", "log10 N", "log10 rel. error",
                   cfg.provenance());
    out.outputs.push_back("convergence.svg");
  }
  return out;
}

}  // namespace detail

/// Runs one scenario end to end and writes its manifest (atomically) into the
/// output directory. Throws ConfigError for bad configuration.
inline RunManifest run_scenario(const ScenarioConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const detail::EffectiveConfig cfg = detail::resolve_config(config);
  std::filesystem::create_directories(cfg.out_dir);

  detail::ScenarioOutput so;
  if (cfg.scenario == "single-scatter")
    so = detail::run_single_scatter(cfg);
  else if (cfg.scenario == "two-scatter")
    so = detail::run_two_scatter(cfg);
  else if (cfg.scenario == "two-waveguide")
    so = detail::run_two_waveguide(cfg);
  else if (cfg.scenario == "feedback")
    so = detail::run_feedback(cfg);
  else if (cfg.scenario == "benchmark")
    so = detail::run_benchmark_scenario(cfg);
  else
    so = detail::run_convergence(cfg);

  RunManifest manifest;
  manifest.scenario = cfg.scenario;
  manifest.version = kVersion;
  manifest.config = cfg.echo();
  manifest.out_dir = cfg.out_dir.string();
  manifest.format = config.format;
  manifest.outputs = so.outputs;
  manifest.checks = so.checks;
  manifest.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.path = cfg.out_dir / "manifest.json";

  nlohmann::json j;
  j["scenario"] = manifest.scenario;
  j["version"] = manifest.version;
  j["config"] = manifest.config;
  j["format"] = manifest.format;
  j["outputs"] = manifest.outputs;
  j["wall_seconds"] = manifest.wall_seconds;
  j["checks"] = nlohmann::json::array();
  for (const CheckResult& c : manifest.checks)
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"value", c.value}});
  j["all_passed"] = manifest.all_passed();
  io::write_file_atomic(manifest.path, j.dump(2) + "\n");
  return manifest;
}

}  // namespace wqed
