#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "wqed/baseline.hpp"
#include "wqed/oracle.hpp"
#include "wqed/state.hpp"

using namespace wqed;

namespace {

complex gauss(double t) { return complex(oracle::gaussian_xi(t, 1.0, 5.0), 0.0); }

LazyOp scatter_h(const CompositeBasis& comp, const FockBasis& be, const WaveguideBasis& bw,
                 double gamma) {
  const complex c = complex(0.0, 1.0) * std::sqrt(gamma / bw.grid().dt());
  return lazy_sum(
      {scale(c, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw)}})),
       scale(-c, lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw)}}))});
}

double max_amp_diff(const StateVector& a, const StateVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("sparse realization of a creator has exactly one entry") {
  WaveguideBasis bw(1, 1, TimeGrid(0.0, 0.1, 5));
  LazyOp wd = waveguide_create(bw);
  wd.set_active_bin(3);
  std::vector<Triplet> t = wd.entries();
  REQUIRE(t.size() == 1);
  CHECK(t[0].row == bw.single_index(1, 3));
  CHECK(t[0].col == bw.vacuum_index());
  CHECK(t[0].value == complex(1.0, 0.0));
}

TEST_CASE("per-bin sparse Hamiltonians are Hermitian and bin-local") {
  FockBasis be(1);
  WaveguideBasis bw(2, 1, TimeGrid(0.0, 0.1, 4));
  CompositeBasis comp = tensor_basis({be, bw});
  std::vector<SparseOp> hs = build_sparse_operators(scatter_h(comp, be, bw, 1.0), 4);
  REQUIRE(hs.size() == 4);
  const std::size_t d = comp.dimension();
  for (int k = 0; k < 4; ++k) {
    std::vector<complex> dense(d * d, complex(0.0, 0.0));
    for (const Triplet& t : hs[static_cast<std::size_t>(k)].entries())
      dense[t.row * d + t.col] += t.value;
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        REQUIRE(std::abs(dense[r * d + c] - std::conj(dense[c * d + r])) < 1e-13);
  }
  // distinct bins touch distinct waveguide sectors: entry sets must differ
  CHECK(hs[0].entries().size() == hs[1].entries().size());
  bool all_same = true;
  for (std::size_t i = 0; i < hs[0].entries().size(); ++i)
    all_same = all_same && hs[0].entries()[i].row == hs[1].entries()[i].row &&
               hs[0].entries()[i].col == hs[1].entries()[i].col;
  CHECK_FALSE(all_same);
}

TEST_CASE("sparse realizations are bin-local") {
  // every nonzero of H_k couples a bin-k waveguide sector to the emitter
  FockBasis be(1);
  WaveguideBasis bw(1, 1, TimeGrid(0.0, 0.1, 5));
  CompositeBasis comp = tensor_basis({be, bw});
  std::vector<SparseOp> hs = build_sparse_operators(scatter_h(comp, be, bw, 1.0), 5);
  const std::size_t wdim = bw.dimension();
  for (int k = 1; k <= 5; ++k) {
    const std::size_t single_k = bw.single_index(1, k);
    for (const Triplet& t : hs[static_cast<std::size_t>(k - 1)].entries()) {
      const std::size_t pair[2] = {t.row % wdim, t.col % wdim};
      for (std::size_t w : pair) REQUIRE((w == bw.vacuum_index() || w == single_k));
    }
  }
}

TEST_CASE("sparse matvec agrees with the lazy tree at every bin") {
  FockBasis be(1);
  WaveguideBasis bw(2, 1, TimeGrid(0.0, 0.1, 4));
  CompositeBasis comp = tensor_basis({be, bw});
  LazyOp h = scatter_h(comp, be, bw, 1.0);
  std::vector<SparseOp> hs = build_sparse_operators(h, 4);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  StateVector v{comp};
  for (std::size_t i = 0; i < v.dimension(); ++i) v[i] = complex(dist(rng), dist(rng));
  for (int bin = 1; bin <= 4; ++bin) {
    h.set_active_bin(bin);
    StateVector lazy_out{comp}, sparse_out{comp};
    apply_accumulate(lazy_out, h, v, complex(1.0, 0.0), complex(0.0, 0.0));
    hs[static_cast<std::size_t>(bin - 1)].apply_add(complex(1.0, 0.0), v.amplitudes(),
                                                    sparse_out.amplitudes());
    REQUIRE(max_amp_diff(lazy_out, sparse_out) < 1e-13);
  }
}

TEST_CASE("memory budget is enforced cleanly") {
  FockBasis be(1);
  WaveguideBasis bw(2, 1, TimeGrid(0.0, 0.05, 100));
  CompositeBasis comp = tensor_basis({be, bw});
  CHECK_THROWS_AS(build_sparse_operators(scatter_h(comp, be, bw, 1.0), 100, 1024),
                  std::runtime_error);
}

TEST_CASE("zero Hamiltonian list evolves as the identity") {
  FockBasis be(1);
  WaveguideBasis bw(1, 1, TimeGrid(0.0, 0.1, 6));
  CompositeBasis comp = tensor_basis({be, bw});
  std::vector<SparseOp> hs;
  for (int k = 0; k < 5; ++k) hs.emplace_back(comp.dimension(), std::vector<Triplet>{});
  StateVector psi0 = tensor_state(fock_state(be, 0), onephoton(bw, 1, gauss));
  EvolutionResult res = sparse_evolution(bw.grid().times(), psi0, hs);
  for (std::size_t i = 0; i < psi0.dimension(); ++i) REQUIRE(res.final_state[i] == psi0[i]);
}

TEST_CASE("sparse evolution matches matrix-free on the single-photon scenario") {
  const int n = 100;
  const double dt = 10.0 / n;
  FockBasis be(1);
  WaveguideBasis bw(1, 1, TimeGrid(0.0, dt, n + 1));
  CompositeBasis comp = tensor_basis({be, bw});
  LazyOp h = scatter_h(comp, be, bw, 1.0);
  StateVector psi0 = tensor_state(fock_state(be, 0), onephoton(bw, 1, gauss));
  EvolutionResult mf = waveguide_evolution(bw.grid().times(), psi0, h);
  std::vector<SparseOp> hs = build_sparse_operators(h, n);
  EvolutionResult sp = sparse_evolution(bw.grid().times(), psi0, hs);
  CHECK(max_amp_diff(mf.final_state, sp.final_state) < 1e-10);
}

TEST_CASE("sparse evolution matches matrix-free on the two-photon scenario") {
  const int n = 100;
  const double dt = 10.0 / n;
  FockBasis be(1);
  WaveguideBasis bw(2, 1, TimeGrid(0.0, dt, n + 1));
  CompositeBasis comp = tensor_basis({be, bw});
  LazyOp h = scatter_h(comp, be, bw, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  StateVector psi0 = tensor_state(fock_state(be, 0), twophoton(bw, 1, [&](double t, double tp) {
                                    return inv_sqrt2 * gauss(t) * gauss(tp);
                                  }));
  EvolutionResult mf = waveguide_evolution(bw.grid().times(), psi0, h);
  std::vector<SparseOp> hs = build_sparse_operators(h, n);
  EvolutionResult sp = sparse_evolution(bw.grid().times(), psi0, hs);
  CHECK(max_amp_diff(mf.final_state, sp.final_state) < 1e-10);

  SECTION("observables agree along the way") {
    LazyOp n_e = lazy_tensor(comp, {{0, fock_number(be)}});
    StateVector scratch{comp};
    const Observer fout = [&](double, const StateVector& psi) {
      apply_accumulate(scratch, n_e, psi, complex(1.0, 0.0), complex(0.0, 0.0));
      return std::vector<complex>{inner(psi, scratch)};
    };
    LazyOp h2 = scatter_h(comp, be, bw, 1.0);
    EvolutionResult mf2 = waveguide_evolution(bw.grid().times(), psi0, h2, fout);
    EvolutionResult sp2 = sparse_evolution(bw.grid().times(), psi0, hs, fout);
    for (std::size_t i = 0; i < mf2.series.size(); ++i)
      REQUIRE(std::abs(mf2.series[i][0] - sp2.series[i][0]) < 1e-8);
  }
}

TEST_CASE("sparse evolution matches matrix-free on the two-waveguide scenario") {
  const int n = 60;
  const double dt = 15.0 / n;
  FockBasis be(1);
  WaveguideBasis bw(2, 2, TimeGrid(0.0, dt, n + 1));
  CompositeBasis comp = tensor_basis({be, bw});
  const complex c = complex(0.0, 1.0) * std::sqrt(0.5 / dt);
  LazyOp h = lazy_sum(
      {scale(c, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, 1)}})),
       scale(-c, lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw, 1)}})),
       scale(c, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, 2)}})),
       scale(-c, lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw, 2)}}))});
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  StateVector psi0 = tensor_state(fock_state(be, 0), twophoton(bw, 1, [&](double t, double tp) {
                                    return complex(inv_sqrt2 * oracle::gaussian_xi(t, 2.0, 7.5) *
                                                       oracle::gaussian_xi(tp, 2.0, 7.5),
                                                   0.0);
                                  }));
  EvolutionResult mf = waveguide_evolution(bw.grid().times(), psi0, h);
  std::vector<SparseOp> hs = build_sparse_operators(h, n);
  EvolutionResult sp = sparse_evolution(bw.grid().times(), psi0, hs);
  CHECK(max_amp_diff(mf.final_state, sp.final_state) < 1e-10);
}

TEST_CASE("sparse evolution matches matrix-free on the feedback scenario") {
  const double dt = 0.1;
  const int n_bins = 101;  // grid to t = 10
  const int tau_bins = 10;
  FockBasis be(1);
  WaveguideBasis bw(1, 1, TimeGrid(0.0, dt, n_bins));
  CompositeBasis comp = tensor_basis({be, bw});
  const double c = std::sqrt(1.0 / (2.0 * dt));
  const complex eip = std::polar(1.0, std::numbers::pi);
  LazyOp h = lazy_sum(
      {scale(c * eip, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw)}})),
       scale(c * std::conj(eip),
             lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw)}})),
       scale(complex(c, 0.0),
             lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, 1, tau_bins)}})),
       scale(complex(c, 0.0),
             lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw, 1, tau_bins)}}))});
  StateVector psi0 = tensor_state(fock_state(be, 1), zerophoton(bw));
  const std::vector<double> all = bw.grid().times();
  const std::vector<double> ts(all.begin(), all.begin() + (n_bins - tau_bins));
  EvolutionResult mf = waveguide_evolution(ts, psi0, h);
  std::vector<SparseOp> hs = build_sparse_operators(h, n_bins - 1 - tau_bins);
  EvolutionResult sp = sparse_evolution(ts, psi0, hs);
  CHECK(max_amp_diff(mf.final_state, sp.final_state) < 1e-10);
}

TEST_CASE("benchmark report structure and trends") {
  // small grid sizes keep this test quick; the acceptance suite runs the
  // criterion-level sizes
  const std::vector<BenchmarkReport> reports = run_benchmark("two-scatter", {20, 40}, 2);
  REQUIRE(reports.size() == 4);
  std::size_t mf_bytes_small = 0, mf_bytes_large = 0, sp_bytes_small = 0, sp_bytes_large = 0;
  for (const BenchmarkReport& r : reports) {
    CHECK(r.alloc_seconds >= 0.0);
    CHECK(r.solve_seconds >= 0.0);
    if (r.method == "matrix_free" && r.n_bins == 20) mf_bytes_small = r.operator_bytes;
    if (r.method == "matrix_free" && r.n_bins == 40) mf_bytes_large = r.operator_bytes;
    if (r.method == "sparse" && r.n_bins == 20) sp_bytes_small = r.operator_bytes;
    if (r.method == "sparse" && r.n_bins == 40) sp_bytes_large = r.operator_bytes;
  }
  // matrix-free operator storage is constant in N; sparse storage grows
  CHECK(mf_bytes_small == mf_bytes_large);
  CHECK(sp_bytes_large > sp_bytes_small);
  CHECK_THROWS_AS(run_benchmark("bogus", {10}, 1), std::invalid_argument);
}
