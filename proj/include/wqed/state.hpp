#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wqed/basis.hpp"

namespace wqed {

using complex = std::complex<double>;

/// Flat complex amplitude vector over a composite basis.
class StateVector {
public:
  explicit StateVector(CompositeBasis basis)
      : basis_(std::move(basis)), amps_(basis_.dimension(), complex(0.0, 0.0)) {}

  const CompositeBasis& basis() const { return basis_; }
  std::size_t dimension() const { return amps_.size(); }

  std::span<complex> amplitudes() { return amps_; }
  std::span<const complex> amplitudes() const { return amps_; }
  complex& operator[](std::size_t i) { return amps_[i]; }
  const complex& operator[](std::size_t i) const { return amps_[i]; }

  double norm_sq() const {
    double s = 0.0;
    for (const complex& a : amps_) s += std::norm(a);
    return s;
  }
  double norm() const { return std::sqrt(norm_sq()); }

  bool is_finite() const {
    for (const complex& a : amps_)
      if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) return false;
    return true;
  }

  StateVector& operator*=(complex c) {
    for (complex& a : amps_) a *= c;
    return *this;
  }

  /// Scales to unit norm. There is no automatic renormalization anywhere in
  /// the library; the O(dt^2) deficit of discretized pulses is a convergence
  /// signal that callers may want to observe before normalizing.
  void normalize() {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("StateVector::normalize: zero norm");
    *this *= complex(1.0 / n, 0.0);
  }

private:
  CompositeBasis basis_;
  std::vector<complex> amps_;
};

inline complex inner(const StateVector& a, const StateVector& b) {
  if (a.basis() != b.basis())
    throw std::invalid_argument("inner: incompatible bases");
  complex s(0.0, 0.0);
  const auto av = a.amplitudes();
  const auto bv = b.amplitudes();
  for (std::size_t i = 0; i < av.size(); ++i) s += std::conj(av[i]) * bv[i];
  return s;
}

inline StateVector zerophoton(const WaveguideBasis& basis) {
  StateVector psi{CompositeBasis(basis)};
  psi[basis.vacuum_index()] = complex(1.0, 0.0);
  return psi;
}

/// One-photon wavepacket: the amplitude of |1_{guide,k}> is sqrt(dt)*xi(t_k).
inline StateVector onephoton(const WaveguideBasis& basis, int guide,
                             const std::function<complex(double)>& xi) {
  StateVector psi{CompositeBasis(basis)};
  const TimeGrid& g = basis.grid();
  const double root_dt = std::sqrt(g.dt());
  for (int k = 1; k <= g.n_bins(); ++k)
    psi[basis.single_index(guide, k)] = root_dt * xi(g.time_at(k));
  return psi;
}

inline StateVector onephoton(const WaveguideBasis& basis, int guide,
                             std::span<const complex> samples) {
  if (samples.size() != static_cast<std::size_t>(basis.n_bins()))
    throw std::invalid_argument("onephoton: sample count differs from bin count");
  StateVector psi{CompositeBasis(basis)};
  const double root_dt = std::sqrt(basis.grid().dt());
  for (int k = 1; k <= basis.n_bins(); ++k)
    psi[basis.single_index(guide, k)] = root_dt * samples[static_cast<std::size_t>(k - 1)];
  return psi;
}

inline StateVector onephoton(const WaveguideBasis& basis,
                             const std::function<complex(double)>& xi) {
  return onephoton(basis, 1, xi);
}

/// Same-guide two-photon wavepacket with the symmetrized convention
///   amp(|2_i>)      = dt * xi2(t_i, t_i)
///   amp(|1_i 1_k>)  = dt * (xi2(t_i, t_k) + xi2(t_k, t_i)) / sqrt(2),  i < k
/// so a symmetric xi2 with unit two-time L2 norm yields a unit-norm state.
inline StateVector twophoton(const WaveguideBasis& basis, int guide,
                             const std::function<complex(double, double)>& xi2) {
  if (basis.max_photons() != 2)
    throw std::invalid_argument("twophoton: basis must allow two photons");
  StateVector psi{CompositeBasis(basis)};
  const TimeGrid& g = basis.grid();
  const double dt = g.dt();
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 1; i <= g.n_bins(); ++i) {
    const double ti = g.time_at(i);
    psi[basis.pair_same_index(guide, i, i)] = dt * xi2(ti, ti);
    for (int k = i + 1; k <= g.n_bins(); ++k) {
      const double tk = g.time_at(k);
      psi[basis.pair_same_index(guide, i, k)] = dt * (xi2(ti, tk) + xi2(tk, ti)) * inv_sqrt2;
    }
  }
  return psi;
}

inline StateVector twophoton(const WaveguideBasis& basis,
                             const std::function<complex(double, double)>& xi2) {
  return twophoton(basis, 1, xi2);
}

/// Cross-guide two-photon wavepacket: amp(|1_i>_{g1} |1_k>_{g2}) =
/// dt * xi2(t_i, t_k). No symmetrization; the guides are distinguishable.
inline StateVector twophoton(const WaveguideBasis& basis, int guide1, int guide2,
                             const std::function<complex(double, double)>& xi2) {
  if (basis.max_photons() != 2)
    throw std::invalid_argument("twophoton: basis must allow two photons");
  if (guide1 == guide2)
    throw std::invalid_argument("twophoton: cross form needs two distinct guides");
  StateVector psi{CompositeBasis(basis)};
  const TimeGrid& g = basis.grid();
  const double dt = g.dt();
  for (int i = 1; i <= g.n_bins(); ++i)
    for (int k = 1; k <= g.n_bins(); ++k) {
      const BasisIndex idx = BasisIndex::pair_cross(guide1, i, guide2, k);
      psi[basis.flat_index(idx)] = dt * xi2(g.time_at(i), g.time_at(k));
    }
  return psi;
}

/// Sampled-matrix overload; values are row-major with t_i as the row index.
inline StateVector twophoton(const WaveguideBasis& basis, int guide,
                             std::span<const complex> xi2_matrix) {
  const std::size_t n = static_cast<std::size_t>(basis.n_bins());
  if (xi2_matrix.size() != n * n)
    throw std::invalid_argument("twophoton: matrix size differs from n_bins^2");
  const TimeGrid& g = basis.grid();
  return twophoton(basis, guide, [&](double t, double tp) {
    const auto i = static_cast<std::size_t>(std::lround((t - g.t0()) / g.dt()));
    const auto k = static_cast<std::size_t>(std::lround((tp - g.t0()) / g.dt()));
    return xi2_matrix[i * n + k];
  });
}

inline StateVector fock_state(const FockBasis& basis, int n) {
  if (n < 0 || n > basis.cutoff()) throw std::out_of_range("fock_state: occupation out of range");
  StateVector psi{CompositeBasis(basis)};
  psi[static_cast<std::size_t>(n)] = complex(1.0, 0.0);
  return psi;
}

/// Kronecker product of states; the amplitude layout follows the composite
/// convention (last factor fastest).
inline StateVector tensor_state(std::span<const StateVector> states) {
  if (states.empty()) throw std::invalid_argument("tensor_state: empty state list");
  std::vector<CompositeBasis::Factor> factors;
  for (const StateVector& s : states)
    for (std::size_t i = 0; i < s.basis().n_factors(); ++i)
      factors.push_back(s.basis().factor(i));
  StateVector out{CompositeBasis(std::move(factors))};
  std::vector<std::size_t> block(states.size(), 1);
  for (std::size_t i = states.size() - 1; i-- > 0;)
    block[i] = block[i + 1] * states[i + 1].dimension();
  const auto fill = [&](auto&& self, std::size_t which, std::size_t offset, complex acc) -> void {
    if (which == states.size()) {
      out[offset] = acc;
      return;
    }
    const auto amps = states[which].amplitudes();
    for (std::size_t i = 0; i < amps.size(); ++i)
      self(self, which + 1, offset + i * block[which], acc * amps[i]);
  };
  fill(fill, 0, 0, complex(1.0, 0.0));
  return out;
}

inline StateVector tensor_state(const StateVector& a, const StateVector& b) {
  const StateVector arr[2] = {a, b};
  return tensor_state(std::span<const StateVector>(arr, 2));
}

/// Occupation bookkeeping for conservation checks: probability-weighted
/// photon number of the waveguide sectors plus per-sector norms.
struct SectorNorms {
  double vacuum = 0.0;
  double singles = 0.0;
  double pairs = 0.0;
  double photon_number() const { return singles + 2.0 * pairs; }
};

/// Sums |amplitude|^2 per waveguide sector over all local-factor components.
inline SectorNorms sector_norms(const StateVector& psi) {
  const CompositeBasis& cb = psi.basis();
  const std::size_t wpos = cb.waveguide_position();
  const WaveguideBasis& wb = cb.waveguide_at(wpos);
  const std::size_t wdim = wb.dimension();
  const std::size_t stride = cb.stride(wpos);
  const std::size_t outer = cb.dimension() / (wdim * stride);
  const std::size_t singles_end = 1 + static_cast<std::size_t>(wb.n_waveguides()) *
                                          static_cast<std::size_t>(wb.n_bins());
  SectorNorms out;
  const auto amps = psi.amplitudes();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t inner = 0; inner < stride; ++inner) {
      const std::size_t base = o * wdim * stride + inner;
      for (std::size_t w = 0; w < wdim; ++w) {
        const double p = std::norm(amps[base + w * stride]);
        if (w == 0)
          out.vacuum += p;
        else if (w < singles_end)
          out.singles += p;
        else
          out.pairs += p;
      }
    }
  return out;
}

}  // namespace wqed
