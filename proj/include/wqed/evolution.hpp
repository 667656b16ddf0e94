#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wqed/lazy.hpp"
#include "wqed/state.hpp"

namespace wqed {

/// Fixed-step classical 4th-order Runge-Kutta is the only integrator: the
/// Hamiltonian is exactly constant within a bin, so adaptive control buys
/// nothing. substeps_per_bin refines the step without changing bin semantics.
struct SolverConfig {
  int substeps_per_bin = 1;
};

/// Per-bin callback; evaluated at t0 and after every step.
using Observer = std::function<std::vector<complex>(double t, const StateVector& psi)>;

struct EvolutionResult {
  StateVector final_state;
  std::vector<double> times;                  // sample times, length = steps + 1
  std::vector<std::vector<complex>> series;   // observer outputs per sample (empty without fout)
};

namespace detail {

inline double uniform_dt(const std::vector<double>& times) {
  if (times.size() < 2) throw std::invalid_argument("evolution: need at least two time points");
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw std::invalid_argument("evolution: times must be increasing");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - times[i - 1] - dt) > 1e-9 * dt)
      throw std::invalid_argument("evolution: times are not uniformly spaced");
  return dt;
}

inline void check_grid_prefix(const CompositeBasis& basis, const std::vector<double>& times,
                              double dt) {
  for (std::size_t i = 0; i < basis.n_factors(); ++i) {
    if (!basis.factor_is_waveguide(i)) continue;
    const TimeGrid& g = basis.waveguide_at(i).grid();
    if (std::abs(g.dt() - dt) > 1e-9 * g.dt())
      throw std::invalid_argument("evolution: step size differs from the basis grid dt");
    if (!g.is_prefix(times))
      throw std::invalid_argument("evolution: times are not a prefix of the basis grid");
  }
}

/// Shared bin-stepping core. The Applier provides operator application and,
/// optionally, the set of amplitudes the current bin can touch; when it does,
/// each Runge-Kutta stage runs on that subset only, which is exact because
/// every amplitude outside it has zero derivative for the whole bin.
template <class Applier>
EvolutionResult evolve_core(const std::vector<double>& times, const StateVector& psi0, Applier& ap,
                            const Observer& fout, const SolverConfig& cfg) {
  if (cfg.substeps_per_bin < 1)
    throw std::invalid_argument("evolution: substeps_per_bin must be >= 1");
  const double dt = uniform_dt(times);
  check_grid_prefix(psi0.basis(), times, dt);
  const int steps = static_cast<int>(times.size()) - 1;
  if (steps > ap.max_active_bin())
    throw std::invalid_argument(
        "evolution: horizon violates the delayed-bin bound; need steps + delay_bins <= n_bins "
        "(steps = " +
        std::to_string(steps) + ", admissible = " + std::to_string(ap.max_active_bin()) + ")");

  const std::size_t dim = psi0.dimension();
  EvolutionResult result{psi0, {}, {}};
  StateVector& psi = result.final_state;
  result.times.reserve(static_cast<std::size_t>(steps) + 1);
  // Classical RK4 in accumulator form: acc collects h/6*k1 + h/3*k2 + ...
  // so a single stage buffer k suffices. k stays zero outside the current
  // support between stages.
  std::vector<complex> k(dim), acc(dim), tmp(dim);
  std::vector<std::uint32_t> idx;
  std::vector<std::uint8_t> seen(dim, 0);

  const auto record = [&](double t) {
    result.times.push_back(t);
    if (fout) result.series.push_back(fout(t, psi));
  };
  record(times[0]);

  const complex minus_i(0.0, -1.0);
  const double h = dt / cfg.substeps_per_bin;
  auto p = psi.amplitudes();

  for (int n = 1; n <= steps; ++n) {
    ap.set_bin(n);
    idx.clear();
    const bool restricted = ap.collect_support(idx, seen);
    if (restricted) {
      std::sort(idx.begin(), idx.end());  // sequential passes are cache-friendly
      for (int s = 0; s < cfg.substeps_per_bin; ++s) {
        ap.apply_add(minus_i, p, std::span<complex>(k));
        for (std::uint32_t j : idx) {
          acc[j] = p[j] + (h / 6.0) * k[j];
          tmp[j] = p[j] + (0.5 * h) * k[j];
          k[j] = complex(0.0, 0.0);
        }
        ap.apply_add(minus_i, std::span<const complex>(tmp), std::span<complex>(k));
        for (std::uint32_t j : idx) {
          acc[j] += (h / 3.0) * k[j];
          tmp[j] = p[j] + (0.5 * h) * k[j];
          k[j] = complex(0.0, 0.0);
        }
        ap.apply_add(minus_i, std::span<const complex>(tmp), std::span<complex>(k));
        for (std::uint32_t j : idx) {
          acc[j] += (h / 3.0) * k[j];
          tmp[j] = p[j] + h * k[j];
          k[j] = complex(0.0, 0.0);
        }
        ap.apply_add(minus_i, std::span<const complex>(tmp), std::span<complex>(k));
        double touched = 0.0;
        for (std::uint32_t j : idx) {
          p[j] = acc[j] + (h / 6.0) * k[j];
          k[j] = complex(0.0, 0.0);
          touched += std::norm(p[j]);
        }
        if (!std::isfinite(touched))
          throw std::runtime_error("evolution: non-finite amplitudes at bin " +
                                   std::to_string(n));
      }
    } else {
      for (int s = 0; s < cfg.substeps_per_bin; ++s) {
        std::fill(k.begin(), k.end(), complex(0.0, 0.0));
        ap.apply_add(minus_i, p, std::span<complex>(k));
        for (std::size_t j = 0; j < dim; ++j) {
          acc[j] = p[j] + (h / 6.0) * k[j];
          tmp[j] = p[j] + (0.5 * h) * k[j];
        }
        std::fill(k.begin(), k.end(), complex(0.0, 0.0));
        ap.apply_add(minus_i, std::span<const complex>(tmp), std::span<complex>(k));
        for (std::size_t j = 0; j < dim; ++j) {
          acc[j] += (h / 3.0) * k[j];
          tmp[j] = p[j] + (0.5 * h) * k[j];
        }
        std::fill(k.begin(), k.end(), complex(0.0, 0.0));
        ap.apply_add(minus_i, std::span<const complex>(tmp), std::span<complex>(k));
        for (std::size_t j = 0; j < dim; ++j) {
          acc[j] += (h / 3.0) * k[j];
          tmp[j] = p[j] + h * k[j];
        }
        std::fill(k.begin(), k.end(), complex(0.0, 0.0));
        ap.apply_add(minus_i, std::span<const complex>(tmp), std::span<complex>(k));
        double total = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          p[j] = acc[j] + (h / 6.0) * k[j];
          total += std::norm(p[j]);
        }
        if (!std::isfinite(total))
          throw std::runtime_error("evolution: non-finite amplitudes at bin " +
                                   std::to_string(n));
      }
    }
    for (std::uint32_t j : idx) seen[j] = 0;
    record(times[static_cast<std::size_t>(n)]);
  }
  return result;
}

class LazyApplier {
public:
  explicit LazyApplier(LazyOp& op) : op_(&op) {}
  void set_bin(int k) { op_->set_active_bin(k); }
  int max_active_bin() const { return op_->max_active_bin(); }
  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) {
    op_->node().apply_add(alpha, in, out);
  }
  bool collect_support(std::vector<std::uint32_t>& idx, std::vector<std::uint8_t>& seen) {
    SupportSink sink{idx, seen};
    op_->node().collect_support(sink);
    return !sink.full;
  }

private:
  LazyOp* op_;
};

}  // namespace detail

/// Advances i d/dt psi = H(t) psi bin by bin: for step n the active bin of H
/// is n and H is constant over [t_{n-1}, t_n]. Returns the final state and,
/// when fout is given, its per-bin samples (including t0).
inline EvolutionResult waveguide_evolution(const std::vector<double>& times,
                                           const StateVector& psi0, LazyOp& hamiltonian,
                                           const Observer& fout = {},
                                           const SolverConfig& cfg = {}) {
  if (hamiltonian.basis() != psi0.basis())
    throw std::invalid_argument("waveguide_evolution: Hamiltonian/state basis mismatch");
  detail::LazyApplier ap(hamiltonian);
  return detail::evolve_core(times, psi0, ap, fout, cfg);
}

struct ExpectationSeries {
  std::vector<double> times;
  std::vector<std::vector<complex>> values;  // values[observable][sample]
  StateVector final_state;
};

/// Convenience wrapper recording <psi|O_i|psi> once per bin.
inline ExpectationSeries expectation_series(const std::vector<double>& times,
                                            const StateVector& psi0, LazyOp& hamiltonian,
                                            std::vector<LazyOp> observables,
                                            const SolverConfig& cfg = {}) {
  StateVector scratch(psi0.basis());
  const Observer fout = [&](double, const StateVector& psi) {
    std::vector<complex> out;
    out.reserve(observables.size());
    for (LazyOp& o : observables) {
      apply_accumulate(scratch, o, psi, complex(1.0, 0.0), complex(0.0, 0.0));
      out.push_back(inner(psi, scratch));
    }
    return out;
  };
  EvolutionResult res = waveguide_evolution(times, psi0, hamiltonian, fout, cfg);
  ExpectationSeries out{std::move(res.times),
                        std::vector<std::vector<complex>>(observables.size()),
                        std::move(res.final_state)};
  for (auto& v : out.values) v.reserve(res.series.size());
  for (const auto& sample : res.series)
    for (std::size_t i = 0; i < observables.size(); ++i) out.values[i].push_back(sample[i]);
  return out;
}

}  // namespace wqed
