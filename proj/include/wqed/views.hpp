#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "wqed/state.hpp"

namespace wqed {

namespace detail {

/// Slice descriptor of the waveguide factor with every local factor pinned to
/// its ground/vacuum component, plus the squared norm of what the projection
/// discards (amplitude left in excited local components).
struct WaveguideSlice {
  const WaveguideBasis* basis;
  std::size_t base;      // flat offset of (locals = ground, waveguide index 0)
  std::size_t stride;    // flat stride of the waveguide index
  double residual_sq;
};

inline WaveguideSlice ground_slice(const StateVector& psi) {
  const CompositeBasis& cb = psi.basis();
  const std::size_t wpos = cb.waveguide_position();
  const WaveguideBasis& wb = cb.waveguide_at(wpos);
  const std::size_t wdim = wb.dimension();
  const std::size_t stride = cb.stride(wpos);
  const std::size_t outer = cb.dimension() / (wdim * stride);
  double residual = 0.0;
  const auto amps = psi.amplitudes();
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t inner = 0; inner < stride; ++inner) {
      if (o == 0 && inner == 0) continue;
      const std::size_t base = o * wdim * stride + inner;
      for (std::size_t w = 0; w < wdim; ++w) residual += std::norm(amps[base + w * stride]);
    }
  return {&wb, 0, stride, residual};
}

}  // namespace detail

/// Sampled one-photon wavefunction xi(t_k) with units 1/sqrt(time).
/// residual_norm reports the amplitude discarded by projecting all local
/// factors onto their ground component.
struct OnePhotonWavefunction {
  TimeGrid grid;
  int guide;
  std::vector<complex> values;
  double residual_norm;

  complex at(int bin) const { return values.at(static_cast<std::size_t>(bin - 1)); }
};

inline OnePhotonWavefunction one_photon_view(const StateVector& psi, int guide = 1) {
  const detail::WaveguideSlice slice = detail::ground_slice(psi);
  const WaveguideBasis& wb = *slice.basis;
  if (guide < 1 || guide > wb.n_waveguides())
    throw std::out_of_range("one_photon_view: waveguide label out of range");
  const double root_dt = std::sqrt(wb.grid().dt());
  std::vector<complex> values(static_cast<std::size_t>(wb.n_bins()));
  const auto amps = psi.amplitudes();
  for (int k = 1; k <= wb.n_bins(); ++k)
    values[static_cast<std::size_t>(k - 1)] =
        amps[slice.base + wb.single_index(guide, k) * slice.stride] / root_dt;
  return {wb.grid(), guide, std::move(values), std::sqrt(slice.residual_sq)};
}

/// Sampled two-photon wavefunction xi2(t_i, t_k), row-major with t_i as the
/// row index, units 1/time. Same-guide views are symmetric by construction;
/// cross-guide views carry the (guide1, guide2) axis order requested.
struct TwoPhotonWavefunction {
  TimeGrid grid;
  int guide1;
  int guide2;                    // == guide1 for same-guide views
  std::vector<complex> values;   // n_bins x n_bins row-major
  double residual_norm;

  std::size_t n() const { return static_cast<std::size_t>(grid.n_bins()); }
  complex at(int bin_i, int bin_k) const {
    return values.at(static_cast<std::size_t>(bin_i - 1) * n() +
                     static_cast<std::size_t>(bin_k - 1));
  }
  bool same_guide() const { return guide1 == guide2; }
};

/// Inverts the same-guide twophoton construction:
///   xi2(t_i, t_i) = amp(|2_i>) / dt
///   xi2(t_i, t_k) = xi2(t_k, t_i) = amp(|1_i 1_k>) / (sqrt(2) dt)
inline TwoPhotonWavefunction two_photon_view(const StateVector& psi, int guide = 1) {
  const detail::WaveguideSlice slice = detail::ground_slice(psi);
  const WaveguideBasis& wb = *slice.basis;
  if (wb.max_photons() != 2)
    throw std::invalid_argument("two_photon_view: basis must allow two photons");
  if (guide < 1 || guide > wb.n_waveguides())
    throw std::out_of_range("two_photon_view: waveguide label out of range");
  const std::size_t n = static_cast<std::size_t>(wb.n_bins());
  const double dt = wb.grid().dt();
  const double inv_sqrt2_dt = 1.0 / (std::sqrt(2.0) * dt);
  std::vector<complex> values(n * n);
  const auto amps = psi.amplitudes();
  for (int i = 1; i <= wb.n_bins(); ++i) {
    values[static_cast<std::size_t>(i - 1) * (n + 1)] =
        amps[slice.base + wb.pair_same_index(guide, i, i) * slice.stride] / dt;
    for (int k = i + 1; k <= wb.n_bins(); ++k) {
      const complex v =
          amps[slice.base + wb.pair_same_index(guide, i, k) * slice.stride] * inv_sqrt2_dt;
      values[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(k - 1)] = v;
      values[static_cast<std::size_t>(k - 1) * n + static_cast<std::size_t>(i - 1)] = v;
    }
  }
  return {wb.grid(), guide, guide, std::move(values), std::sqrt(slice.residual_sq)};
}

/// Cross-guide view: xi2(t_i, t_k) = amp(|1_i>_{guide1} |1_k>_{guide2}) / dt.
inline TwoPhotonWavefunction two_photon_view(const StateVector& psi, int guide1, int guide2) {
  if (guide1 == guide2) return two_photon_view(psi, guide1);
  const detail::WaveguideSlice slice = detail::ground_slice(psi);
  const WaveguideBasis& wb = *slice.basis;
  if (wb.max_photons() != 2)
    throw std::invalid_argument("two_photon_view: basis must allow two photons");
  if (guide1 < 1 || guide1 > wb.n_waveguides() || guide2 < 1 || guide2 > wb.n_waveguides())
    throw std::out_of_range("two_photon_view: waveguide label out of range");
  const std::size_t n = static_cast<std::size_t>(wb.n_bins());
  const double inv_dt = 1.0 / wb.grid().dt();
  std::vector<complex> values(n * n);
  const auto amps = psi.amplitudes();
  for (int i = 1; i <= wb.n_bins(); ++i)
    for (int k = 1; k <= wb.n_bins(); ++k) {
      const BasisIndex idx = BasisIndex::pair_cross(guide1, i, guide2, k);
      values[static_cast<std::size_t>(i - 1) * n + static_cast<std::size_t>(k - 1)] =
          amps[slice.base + wb.flat_index(idx) * slice.stride] * inv_dt;
    }
  return {wb.grid(), guide1, guide2, std::move(values), std::sqrt(slice.residual_sq)};
}

}  // namespace wqed
