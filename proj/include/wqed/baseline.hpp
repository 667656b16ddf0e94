#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wqed/evolution.hpp"
#include "wqed/lazy.hpp"
#include "wqed/oracle.hpp"
#include "wqed/state.hpp"

namespace wqed {

/// Explicit sparse operator in coordinate format: sorted row-major triplets,
/// deduplicated, with no stored zeros. This is the generic representation a
/// user gets when the matrix-free structure is thrown away; its application
/// walks the triplets with no knowledge of which amplitudes a time-bin can
/// actually touch.
class SparseOp {
public:
  SparseOp(std::size_t dimension, std::vector<Triplet> entries)
      : dim_(dimension), entries_(std::move(entries)) {
    for (const Triplet& t : entries_)
      if (t.row >= dim_ || t.col >= dim_)
        throw std::out_of_range("SparseOp: entry outside the matrix");
  }

  std::size_t dimension() const { return dim_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Triplet>& entries() const { return entries_; }

  std::size_t storage_bytes() const { return entries_.size() * sizeof(Triplet); }

  /// out += alpha * A * in.
  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) const {
    for (const Triplet& t : entries_) out[t.row] += alpha * t.value * in[t.col];
  }

private:
  std::size_t dim_;
  std::vector<Triplet> entries_;
};

/// Preallocates one sparse Hamiltonian per time-bin by realizing the lazy
/// tree at every active bin. `max_bytes` caps the total triplet storage;
/// exceeding it is reported cleanly instead of thrashing the machine.
inline std::vector<SparseOp> build_sparse_operators(LazyOp hamiltonian, int n_bins,
                                                    std::size_t max_bytes = std::size_t(1) << 32) {
  std::vector<SparseOp> out;
  out.reserve(static_cast<std::size_t>(n_bins));
  std::size_t bytes = 0;
  for (int k = 1; k <= n_bins; ++k) {
    hamiltonian.set_active_bin(k);
    std::vector<Triplet> entries = hamiltonian.entries();
    bytes += entries.size() * sizeof(Triplet);
    if (bytes > max_bytes)
      throw std::runtime_error("build_sparse_operators: memory budget exceeded at bin " +
                               std::to_string(k) + " (" + std::to_string(bytes) + " bytes)");
    out.emplace_back(hamiltonian.dimension(), std::move(entries));
  }
  return out;
}

namespace detail {

class SparseApplier {
public:
  explicit SparseApplier(const std::vector<SparseOp>& ops) : ops_(&ops) {}
  void set_bin(int k) { cur_ = k; }
  int max_active_bin() const { return static_cast<int>(ops_->size()); }
  void apply_add(complex alpha, std::span<const complex> in, std::span<complex> out) {
    (*ops_)[static_cast<std::size_t>(cur_ - 1)].apply_add(alpha, in, out);
  }
  /// A generic sparse matrix carries no per-bin structure the stepper could
  /// exploit, so every stage runs over the full state vector.
  bool collect_support(std::vector<std::uint32_t>&, std::vector<std::uint8_t>&) { return false; }

private:
  const std::vector<SparseOp>* ops_;
  int cur_ = 1;
};

}  // namespace detail

/// Same integrator as waveguide_evolution with H_n selected per step; only
/// the operator application differs.
inline EvolutionResult sparse_evolution(const std::vector<double>& times, const StateVector& psi0,
                                        const std::vector<SparseOp>& hamiltonians,
                                        const Observer& fout = {}, const SolverConfig& cfg = {}) {
  for (const SparseOp& h : hamiltonians)
    if (h.dimension() != psi0.dimension())
      throw std::invalid_argument("sparse_evolution: dimension mismatch");
  detail::SparseApplier ap(hamiltonians);
  return detail::evolve_core(times, psi0, ap, fout, cfg);
}

struct BenchmarkReport {
  std::string method;    // "matrix_free" | "sparse"
  std::string scenario;  // "single-scatter" | "two-scatter"
  int n_bins = 0;
  double alloc_seconds = 0.0;
  double solve_seconds = 0.0;
  std::size_t operator_bytes = 0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

/// Wall-clock median of `reps` runs after one warm-up, monotonic clock.
template <class F>
double time_median(int reps, F&& body) {
  using clock = std::chrono::steady_clock;
  body();  // warm-up
  std::vector<double> samples;
  samples.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto start = clock::now();
    body();
    const auto stop = clock::now();
    samples.push_back(std::chrono::duration<double>(stop - start).count());
  }
  return median_of(std::move(samples));
}

}  // namespace detail

/// Matrix-free vs preallocated-sparse comparison on a scattering scenario
/// ("single-scatter" or "two-scatter", Gaussian pulse, gamma = 1, tau_g = 1,
/// t0 = 5, T = 10, dt = 10/N). Runs single-threaded; timings are medians of
/// `reps` repetitions after one warm-up each.
inline std::vector<BenchmarkReport> run_benchmark(const std::string& scenario,
                                                  const std::vector<int>& n_list, int reps = 5) {
  if (scenario != "single-scatter" && scenario != "two-scatter")
    throw std::invalid_argument("run_benchmark: unknown scenario " + scenario);
  const int max_photons = scenario == "two-scatter" ? 2 : 1;
  std::vector<BenchmarkReport> out;
  for (int n : n_list) {
    if (n < 2) throw std::invalid_argument("run_benchmark: need at least 2 bins");
    const double t_max = 10.0;
    const double dt = t_max / n;
    const TimeGrid grid(0.0, dt, n + 1);
    const WaveguideBasis bw(max_photons, 1, grid);
    const FockBasis be(1);
    const CompositeBasis comp = tensor_basis({be, bw});
    const double gamma = 1.0;
    const auto xi = [](double t) { return complex(oracle::gaussian_xi(t, 1.0, 5.0), 0.0); };

    const auto build_h = [&] {
      const complex c = complex(0.0, 1.0) * std::sqrt(gamma / dt);
      return lazy_sum({scale(c, lazy_tensor(comp, fock_create(be), waveguide_destroy(bw))),
                       scale(-c, lazy_tensor(comp, fock_destroy(be), waveguide_create(bw)))});
    };
    const StateVector psi_w =
        max_photons == 2
            ? twophoton(bw, 1, [&](double t, double tp) { return xi(t) * xi(tp); })
            : onephoton(bw, 1, xi);
    const StateVector psi0 = tensor_state(fock_state(be, 0), psi_w);
    const std::vector<double> times = grid.times();

    BenchmarkReport mf{"matrix_free", scenario, n, 0.0, 0.0, 0};
    mf.alloc_seconds = detail::time_median(reps, [&] {
      LazyOp h = build_h();
      (void)h;
    });
    LazyOp h = build_h();
    mf.operator_bytes = h.operator_bytes();
    mf.solve_seconds = detail::time_median(reps, [&] {
      EvolutionResult r = waveguide_evolution(times, psi0, h);
      (void)r;
    });
    out.push_back(mf);

    BenchmarkReport sp{"sparse", scenario, n, 0.0, 0.0, 0};
    sp.alloc_seconds = detail::time_median(reps, [&] {
      std::vector<SparseOp> hs = build_sparse_operators(build_h(), n);
      (void)hs;
    });
    std::vector<SparseOp> hs = build_sparse_operators(build_h(), n);
    for (const SparseOp& hk : hs) sp.operator_bytes += hk.storage_bytes();
    sp.solve_seconds = detail::time_median(reps, [&] {
      EvolutionResult r = sparse_evolution(times, psi0, hs);
      (void)r;
    });
    out.push_back(sp);
  }
  return out;
}

}  // namespace wqed
