// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <vector>

#include "dense_oracle.hpp"
#include "wqed/wqed.hpp"

using namespace wqed;
using wqed_test::Dense;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool passed, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", passed ? "PASS" : "FAIL", criterion, name,
              detail.c_str());
  if (!passed) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

complex gauss(double t) { return complex(oracle::gaussian_xi(t, 1.0, 5.0), 0.0); }

LazyOp scatter_h(const CompositeBasis& comp, const FockBasis& be, const WaveguideBasis& bw,
                 double gamma, int guide = 1) {
  const complex c = complex(0.0, 1.0) * std::sqrt(gamma / bw.grid().dt());
  return lazy_sum(
      {scale(c, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, guide)}})),
       scale(-c, lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw, guide)}}))});
}

struct SingleScatterRun {
  double rel_l2;
  double seconds;
};

SingleScatterRun single_scatter_error(int n_steps) {
  const double dt = 10.0 / n_steps;
  const TimeGrid grid(0.0, dt, n_steps + 1);
  const FockBasis be(1);
  const WaveguideBasis bw(1, 1, grid);
  const CompositeBasis comp = tensor_basis({be, bw});
  LazyOp h = scatter_h(comp, be, bw, 1.0);
  const StateVector psi0 = tensor_state(fock_state(be, 0), onephoton(bw, 1, gauss));
  const auto start = std::chrono::steady_clock::now();
  const EvolutionResult res = waveguide_evolution(grid.times(), psi0, h);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const OnePhotonWavefunction out = one_photon_view(res.final_state);
  const oracle::GaussianPulseParams pulse{1.0, 5.0, 1.0};
  std::vector<complex> want(out.values.size());
  for (int k = 1; k <= grid.n_bins(); ++k)
    want[static_cast<std::size_t>(k - 1)] = oracle::analytic_xi_out(grid.time_at(k), pulse);
  return {l2_error(out.values, want, dt).relative, seconds};
}

// ---------------------------------------------------------------------------

void criterion_1() {
  bool pass = true;
  std::string detail;
  double prev = 1e300;
  for (int n : {100, 200, 400, 800}) {
    const SingleScatterRun run = single_scatter_error(n);
    if (n == 200) {
      pass = pass && run.rel_l2 < 1e-2;
      detail += "relL2(dt=0.05)=" + fmt(run.rel_l2) + " ";
    }
    pass = pass && run.rel_l2 < prev && run.seconds < 5.0;
    prev = run.rel_l2;
    detail += "N" + std::to_string(n) + "=" + fmt(run.rel_l2) + "/" + fmt(run.seconds) + "s ";
  }
  report(1, "single-photon scattering error vs analytic oracle", pass, detail);
}

void criterion_2() {
  bool pass = true;
  std::string detail;
  // single-photon scenario: norm and excitation conservation; the per-bin
  // integrator refines to 10 substeps to sit inside the tight tolerances
  {
    const double dt = 0.05;
    const TimeGrid grid(0.0, dt, 201);
    const FockBasis be(1);
    const WaveguideBasis bw(1, 1, grid);
    const CompositeBasis comp = tensor_basis({be, bw});
    LazyOp h = scatter_h(comp, be, bw, 1.0);
    const StateVector psi0 = tensor_state(fock_state(be, 0), onephoton(bw, 1, gauss));
    const double norm0 = psi0.norm();
    const double excitation0 = psi0.norm_sq();
    LazyOp n_e = lazy_tensor(comp, {{0, fock_number(be)}});
    StateVector scratch{comp};
    double worst_norm = 0.0, worst_exc = 0.0;
    const Observer fout = [&](double, const StateVector& psi) {
      worst_norm = std::max(worst_norm, std::abs(psi.norm() - norm0));
      apply_accumulate(scratch, n_e, psi, complex(1.0, 0.0), complex(0.0, 0.0));
      const double total = inner(psi, scratch).real() + sector_norms(psi).photon_number();
      worst_exc = std::max(worst_exc, std::abs(total - excitation0));
      return std::vector<complex>{};
    };
    waveguide_evolution(grid.times(), psi0, h, fout, SolverConfig{10});
    pass = pass && worst_norm < 1e-8 && worst_exc < 1e-6;
    detail += "norm_drift=" + fmt(worst_norm) + " excitation_drift=" + fmt(worst_exc) + " ";
  }
  // two-photon scenario at dt = 0.05: total photon number drift
  {
    const double dt = 0.05;
    const TimeGrid grid(0.0, dt, 201);
    const FockBasis be(1);
    const WaveguideBasis bw(2, 1, grid);
    const CompositeBasis comp = tensor_basis({be, bw});
    LazyOp h = scatter_h(comp, be, bw, 1.0);
    StateVector psi0 = tensor_state(fock_state(be, 0), twophoton(bw, 1, [](double t, double tp) {
                                      return gauss(t) * gauss(tp) / std::sqrt(2.0);
                                    }));
    psi0.normalize();
    LazyOp n_e = lazy_tensor(comp, {{0, fock_number(be)}});
    StateVector scratch{comp};
    double worst = 0.0;
    const Observer fout = [&](double, const StateVector& psi) {
      apply_accumulate(scratch, n_e, psi, complex(1.0, 0.0), complex(0.0, 0.0));
      const double total = inner(psi, scratch).real() + sector_norms(psi).photon_number();
      worst = std::max(worst, std::abs(total - 2.0));
      return std::vector<complex>{};
    };
    waveguide_evolution(grid.times(), psi0, h, fout);
    pass = pass && worst < 1e-3;
    detail += "two_photon_drift=" + fmt(worst) + " ";
  }
  // two-waveguide scenario at dt = 0.05
  {
    const double dt = 0.05;
    const TimeGrid grid(0.0, dt, 301);
    const FockBasis be(1);
    const WaveguideBasis bw(2, 2, grid);
    const CompositeBasis comp = tensor_basis({be, bw});
    LazyOp h = lazy_sum(
        {scatter_h(comp, be, bw, 0.5, 1), scatter_h(comp, be, bw, 0.5, 2)});
    StateVector psi0 =
        tensor_state(fock_state(be, 0), twophoton(bw, 1, [](double t, double tp) {
                       return complex(oracle::gaussian_xi(t, 2.0, 7.5) *
                                          oracle::gaussian_xi(tp, 2.0, 7.5) / std::sqrt(2.0),
                                      0.0);
                     }));
    psi0.normalize();
    LazyOp n_e = lazy_tensor(comp, {{0, fock_number(be)}});
    StateVector scratch{comp};
    double worst = 0.0;
    const Observer fout = [&](double, const StateVector& psi) {
      apply_accumulate(scratch, n_e, psi, complex(1.0, 0.0), complex(0.0, 0.0));
      const double total = inner(psi, scratch).real() + sector_norms(psi).photon_number();
      worst = std::max(worst, std::abs(total - 2.0));
      return std::vector<complex>{};
    };
    waveguide_evolution(grid.times(), psi0, h, fout);
    pass = pass && worst < 1e-3;
    detail += "two_waveguide_drift=" + fmt(worst);
  }
  report(2, "conservation suite", pass, detail);
}

void criterion_3() {
  const double dt = 0.05;  // N = 200
  const TimeGrid grid(0.0, dt, 201);
  const FockBasis be(1);
  const WaveguideBasis bw(2, 1, grid);
  const CompositeBasis comp = tensor_basis({be, bw});
  LazyOp h = scatter_h(comp, be, bw, 1.0);
  StateVector psi0 = tensor_state(fock_state(be, 0), twophoton(bw, 1, [](double t, double tp) {
                                    return gauss(t) * gauss(tp) / std::sqrt(2.0);
                                  }));
  psi0.normalize();
  const auto start = std::chrono::steady_clock::now();
  const EvolutionResult res = waveguide_evolution(grid.times(), psi0, h);
  const SchmidtDecomposition dec_in = schmidt_decompose(two_photon_view(psi0));
  const SchmidtDecomposition dec_out = schmidt_decompose(two_photon_view(res.final_state));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const double l1_in = dec_in.lambdas[0] * dec_in.lambdas[0];
  const double l1_out = dec_out.lambdas[0] * dec_out.lambdas[0];
  int above = 0;
  for (double l : dec_out.lambdas)
    if (l * l > 1e-3) ++above;
  const bool pass =
      std::abs(l1_in - 1.0) < 1e-8 && l1_out < 0.999 && above >= 3 && seconds < 30.0;
  report(3, "two-photon entanglement after scattering", pass,
         "input_l1sq=" + fmt(l1_in) + " out_l1sq=" + fmt(l1_out) + " modes_above_1e-3=" +
             std::to_string(above) + " time=" + fmt(seconds) + "s");
}

void criterion_4() {
  const double dt = 0.05;
  const TimeGrid grid(0.0, dt, 301);  // T = 15
  const FockBasis be(1);
  const WaveguideBasis bw(2, 2, grid);
  const CompositeBasis comp = tensor_basis({be, bw});
  LazyOp h = lazy_sum({scatter_h(comp, be, bw, 0.5, 1), scatter_h(comp, be, bw, 0.5, 2)});
  StateVector psi0 = tensor_state(fock_state(be, 0), twophoton(bw, 1, [](double t, double tp) {
                                    return complex(oracle::gaussian_xi(t, 2.0, 7.5) *
                                                       oracle::gaussian_xi(tp, 2.0, 7.5) /
                                                       std::sqrt(2.0),
                                                   0.0);
                                  }));
  psi0.normalize();
  const EvolutionResult res = waveguide_evolution(grid.times(), psi0, h);

  LazyOp n_e = lazy_tensor(comp, {{0, fock_number(be)}});
  const double ne_end = expect(n_e, res.final_state).real();
  const TwoPhotonWavefunction rr = two_photon_view(res.final_state, 1);
  const TwoPhotonWavefunction ll = two_photon_view(res.final_state, 2);
  const TwoPhotonWavefunction lr = two_photon_view(res.final_state, 2, 1);
  const double n_rr = mode_population(rr);
  const double n_ll = mode_population(ll);
  const double n_lr = mode_population(lr);
  const double total = n_rr + n_ll + n_lr + 2.0 * ne_end;

  double diag = 0.0, peak = 0.0;
  for (int i = 1; i <= grid.n_bins(); ++i) {
    diag = std::max(diag, std::abs(ll.at(i, i)));
    for (int k = 1; k <= grid.n_bins(); ++k) peak = std::max(peak, std::abs(ll.at(i, k)));
  }
  const bool pass = std::abs(total - 2.0) < 1e-2 && diag < 0.05 * peak && n_ll < 0.2 * n_rr;
  report(4, "two-waveguide scattering populations", pass,
         "total=" + fmt(total) + " diag/peak=" + fmt(peak > 0 ? diag / peak : 0.0) +
             " n_ll/n_rr=" + fmt(n_rr > 0 ? n_ll / n_rr : 0.0) +
             " [n_rr=" + fmt(n_rr) + " n_ll=" + fmt(n_ll) + " n_lr=" + fmt(n_lr) + "]");
}

void criterion_5() {
  const double dt = 0.05, gamma = 1.0, tau = 1.0;
  const TimeGrid grid(0.0, dt, 201);  // grid to t = 10, evolve to t = 9
  const FockBasis be(1);
  const WaveguideBasis bw(1, 1, grid);
  const CompositeBasis comp = tensor_basis({be, bw});
  const int tau_bins = delay_bins_from_time(tau, dt);
  const std::vector<double> all_times = grid.times();
  std::vector<double> ts(all_times.begin(), all_times.begin() + (grid.n_bins() - tau_bins));
  const StateVector psi0 = tensor_state(fock_state(be, 1), zerophoton(bw));
  std::vector<LazyOp> n_e{lazy_tensor(comp, {{0, fock_number(be)}})};

  const auto feedback_h = [&](double phi) {
    const double c = std::sqrt(gamma / (2.0 * dt));
    const complex eip = std::polar(1.0, phi);
    return lazy_sum(
        {scale(c * eip, lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw)}})),
         scale(c * std::conj(eip),
               lazy_tensor(comp, {{0, fock_destroy(be)}, {1, waveguide_create(bw)}})),
         scale(complex(c, 0.0),
               lazy_tensor(comp, {{0, fock_create(be)}, {1, waveguide_destroy(bw, 1, tau_bins)}})),
         scale(complex(c, 0.0), lazy_tensor(comp, {{0, fock_destroy(be)},
                                                   {1, waveguide_create(bw, 1, tau_bins)}}))});
  };
  LazyOp hpi = feedback_h(std::numbers::pi);
  LazyOp h0 = feedback_h(0.0);
  const ExpectationSeries spi = expectation_series(ts, psi0, hpi, n_e);
  const ExpectationSeries s0 = expectation_series(ts, psi0, h0, n_e);

  double lo = 1.0, hi = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] < 8.0 - 1e-9) continue;
    const double v = spi.values[0][i].real();
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double worst = -1.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] <= tau) continue;
    worst = std::max(worst, s0.values[0][i].real() - std::exp(-gamma * ts[i]));
  }
  const bool pass = lo >= 0.45 && hi <= 0.55 && worst < 0.02;
  report(5, "feedback trapping and accelerated decay", pass,
         "plateau=[" + fmt(lo) + "," + fmt(hi) + "] (bound-state value 1/(1+gamma*tau/2)^2=" +
             fmt(1.0 / std::pow(1.0 + 0.5 * gamma * tau, 2.0)) + ") excess_over_exp=" +
             fmt(worst));
}

void criterion_6() {
  bool pass = true;
  std::string detail;
  // final-amplitude equivalence at N = 100
  for (int np : {1, 2}) {
    const int n = 100;
    const double dt = 10.0 / n;
    const TimeGrid grid(0.0, dt, n + 1);
    const FockBasis be(1);
    const WaveguideBasis bw(np, 1, grid);
    const CompositeBasis comp = tensor_basis({be, bw});
    LazyOp h = scatter_h(comp, be, bw, 1.0);
    StateVector psi0 =
        np == 2 ? tensor_state(fock_state(be, 0), twophoton(bw, 1, [](double t, double tp) {
                                 return gauss(t) * gauss(tp) / std::sqrt(2.0);
                               }))
                : tensor_state(fock_state(be, 0), onephoton(bw, 1, gauss));
    const EvolutionResult mf = waveguide_evolution(grid.times(), psi0, h);
    const std::vector<SparseOp> hs = build_sparse_operators(h, n);
    const EvolutionResult sp = sparse_evolution(grid.times(), psi0, hs);
    double diff = 0.0;
    for (std::size_t i = 0; i < psi0.dimension(); ++i)
      diff = std::max(diff, std::abs(mf.final_state[i] - sp.final_state[i]));
    pass = pass && diff < 1e-10;
    detail += std::string(np == 1 ? "single" : "two") + "_photon_maxdiff=" + fmt(diff) + " ";
  }
  // timing at N = 200, two-photon scenario (medians of 5 repetitions)
  const std::vector<BenchmarkReport> reports = run_benchmark("two-scatter", {200}, 5);
  double mf_total = 0.0, sp_total = 0.0;
  for (const BenchmarkReport& r : reports) {
    if (r.method == "matrix_free") mf_total = r.alloc_seconds + r.solve_seconds;
    if (r.method == "sparse") sp_total = r.alloc_seconds + r.solve_seconds;
  }
  const double ratio = mf_total > 0.0 ? sp_total / mf_total : 0.0;
  pass = pass && ratio >= 10.0;
  detail += "speedup_at_N200=" + fmt(ratio) + "x";
  report(6, "sparse baseline equivalence and matrix-free speedup", pass, detail);
}

void criterion_7() {
  bool pass = true;
  std::string detail;
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const auto rand_vec = [&](std::size_t d) {
    std::vector<complex> v(d);
    for (complex& x : v) x = complex(dist(rng), dist(rng));
    return v;
  };
  const auto dot = [](std::span<const complex> a, std::span<const complex> b) {
    complex s(0.0, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
  };

  // commutator identity on the admissible subspace, N = 8
  {
    WaveguideBasis bw(2, 1, TimeGrid(0.0, 0.1, 8));
    const std::size_t singles_end = 9;
    double worst = 0.0;
    for (int rep = 0; rep < 4; ++rep) {
      auto v = rand_vec(bw.dimension());
      for (std::size_t i = singles_end; i < bw.dimension(); ++i) v[i] = complex(0.0, 0.0);
      for (int j : {1, 3, 8})
        for (int k : {1, 3, 8}) {
          LazyOp wj = waveguide_destroy(bw);
          LazyOp wkd = waveguide_create(bw);
          wj.set_active_bin(j);
          wkd.set_active_bin(k);
          LazyOp comm = lazy_product({wj, wkd}) - lazy_product({wkd, wj});
          const auto got = wqed_test::lazy_apply(comm, v);
          for (std::size_t i = 0; i < got.size(); ++i) {
            const complex want = (j == k) ? v[i] : complex(0.0, 0.0);
            worst = std::max(worst, std::abs(got[i] - want));
          }
        }
    }
    pass = pass && worst < 1e-12;
    detail += "commutator=" + fmt(worst) + " ";
  }
  // adjoint pairing
  {
    WaveguideBasis bw(2, 2, TimeGrid(0.0, 0.1, 5));
    LazyOp w = waveguide_destroy(bw, 2);
    LazyOp wd = waveguide_create(bw, 2);
    w.set_active_bin(4);
    wd.set_active_bin(4);
    double worst = 0.0;
    for (int rep = 0; rep < 8; ++rep) {
      const auto phi = rand_vec(bw.dimension());
      const auto psi = rand_vec(bw.dimension());
      worst = std::max(worst, std::abs(dot(phi, wqed_test::lazy_apply(w, psi)) -
                                       dot(wqed_test::lazy_apply(wd, phi), psi)));
    }
    pass = pass && worst < 1e-12;
    detail += "adjoint=" + fmt(worst) + " ";
  }
  // lazy-vs-dense equivalence, dimension 64, tolerance 1e-13
  {
    const FockBasis be(1);
    const WaveguideBasis bw(2, 2, TimeGrid(0.0, 0.1, 4));  // dim 31
    const CompositeBasis comp = tensor_basis({be, bw});
    const std::size_t dw = bw.dimension();
    const std::size_t dc = comp.dimension();  // 62 <= 64
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const int bin = 1 + rep % 4;
      std::vector<complex> l1(4);
      for (complex& x : l1) x = complex(dist(rng), dist(rng));
      const complex c1(dist(rng), dist(rng));
      const complex c2(dist(rng), dist(rng));
      LazyOp w_op = lazy_sum({scale(c2, waveguide_destroy(bw, 1)), waveguide_create(bw, 2)});
      LazyOp tree =
          scale(c1, lazy_tensor(comp, {{0, local_operator(LocalOp(be, l1))}, {1, w_op}}));
      tree.set_active_bin(bin);
      const Dense w_dense = wqed_test::dense_sum(
          wqed_test::dense_scale(c2, wqed_test::dense_annihilate(bw, 1, bin)),
          wqed_test::dense_adjoint(wqed_test::dense_annihilate(bw, 2, bin), dw));
      const Dense dense_tree =
          wqed_test::dense_scale(c1, wqed_test::dense_kron(l1, 2, w_dense, dw));
      const auto v = rand_vec(dc);
      const auto got = wqed_test::lazy_apply(tree, v);
      const auto want = wqed_test::dense_apply(dense_tree, v, dc);
      for (std::size_t i = 0; i < dc; ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
    pass = pass && worst < 1e-13;
    detail += "lazy_vs_dense=" + fmt(worst) + " ";
  }
  // flat-index bijectivity over all small bases
  {
    bool bijective = true;
    for (int np = 1; np <= 2 && bijective; ++np)
      for (int nw = 1; nw <= 3 && bijective; ++nw)
        for (int n = 1; n <= 6 && bijective; ++n) {
          WaveguideBasis b(np, nw, TimeGrid(0.0, 0.1, n));
          std::set<std::size_t> seen;
          for (std::size_t flat = 0; flat < b.dimension(); ++flat) {
            const BasisIndex label = b.label_of(flat);
            bijective = bijective && b.flat_index(label) == flat && seen.insert(flat).second;
          }
          bijective = bijective && seen.size() == b.dimension();
        }
    pass = pass && bijective;
    detail += std::string("flat_index_bijection=") + (bijective ? "ok" : "broken") + " ";
  }
  // RK4 order-4 self-convergence of the EOM oracle
  {
    const auto xi = [](double t) { return complex(oracle::gaussian_xi(t, 1.0, 5.0), 0.0); };
    const complex fine = oracle::eom_integrate(xi, 1.0, 1e-4, 10.0).psi_e.back();
    const double err_h = std::abs(oracle::eom_integrate(xi, 1.0, 4e-2, 10.0).psi_e.back() - fine);
    const double err_h2 = std::abs(oracle::eom_integrate(xi, 1.0, 2e-2, 10.0).psi_e.back() - fine);
    const double order = std::log2(err_h / err_h2);
    pass = pass && order > 3.7 && order < 4.3;
    detail += "rk4_order=" + fmt(order);
  }
  report(7, "algebra and oracle property suite", pass, detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite (version %s)\n", kVersion);
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  if (g_failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criterion(s) FAILED\n", g_failures);
  return g_failures;
}
