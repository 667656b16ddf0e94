#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wqed/basis.hpp"
#include "wqed/state.hpp"

namespace wqed {

/// One explicit matrix entry: value at (row, col).
struct Triplet {
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  complex value{0.0, 0.0};
};

/// Converts a physical delay to a whole number of bins; a non-integer ratio
/// tau/dt is rejected.
inline int delay_bins_from_time(double tau, double dt) {
  if (tau < 0.0) throw std::invalid_argument("delay must be non-negative");
  const double ratio = tau / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * (1.0 + std::abs(ratio)))
    throw std::invalid_argument("delay is not an integer multiple of dt");
  return static_cast<int>(rounded);
}

enum class KernelKind { annihilate, create };

/// Matrix-free annihilation/creation operator of one waveguide mode. The
/// operator addresses the effective bin active_bin + delay_bins and is
/// unitless; coupling prefactors such as sqrt(gamma/dt) belong to the
/// coefficients of the surrounding operator tree.
///
/// Action of the annihilator at effective bin e on guide m:
///   |1_{m,e}>            -> |vac>
///   |2_{m,e}>            -> sqrt(2) |1_{m,e}>
///   |1_{m,e} 1_{m,j}>    -> |1_{m,j}>          (j != e)
///   |1_{m,e}> |1_j>_{m'} -> |1_j>_{m'}         (m' != m)
/// The creator is the structural adjoint (same entries, transposed).
class WaveguideKernelOp {
public:
  WaveguideKernelOp(WaveguideBasis basis, int guide, KernelKind kind, int delay_bins = 0)
      : basis_(std::move(basis)), guide_(guide), kind_(kind), delay_bins_(delay_bins) {
    if (guide < 1 || guide > basis_.n_waveguides())
      throw std::out_of_range("WaveguideKernelOp: waveguide label out of range");
    if (delay_bins < 0) throw std::invalid_argument("WaveguideKernelOp: negative delay");
  }

  const WaveguideBasis& basis() const { return basis_; }
  int guide() const { return guide_; }
  KernelKind kind() const { return kind_; }
  int delay_bins() const { return delay_bins_; }
  int active_bin() const { return active_bin_; }
  int effective_bin() const { return active_bin_ + delay_bins_; }
  int max_active_bin() const { return basis_.n_bins() - delay_bins_; }

  /// Moves the conveyor belt. Delayed kernels running past the end of the
  /// grid are a hard error; silent truncation would corrupt feedback physics.
  void set_active_bin(int k) {
    if (k < 1 || k + delay_bins_ > basis_.n_bins())
      throw std::out_of_range("WaveguideKernelOp: effective bin outside the grid");
    active_bin_ = k;
  }

  /// Visits every nonzero entry (row, col, value) of the operator at the
  /// current effective bin. The loops walk the canonical sector layout with
  /// running offsets; no per-element index lookups.
  template <class F>
  void for_each_entry(F&& f) const {
    const int e = effective_bin();
    const int n = basis_.n_bins();
    if (e < 1 || e > n)
      throw std::logic_error("WaveguideKernelOp: effective bin outside the grid");
    const std::size_t nsz = static_cast<std::size_t>(n);
    const std::size_t singles0 = 1 + static_cast<std::size_t>(guide_ - 1) * nsz;
    const std::size_t single_me = singles0 + static_cast<std::size_t>(e - 1);
    emit(f, 0, single_me, 1.0);
    if (basis_.max_photons() != 2) return;

    // same-guide pairs: column e of the upper triangle, then the diagonal
    // element |2_e>, then row e, with the triangle walked by running offset
    std::size_t pair_je = basis_.pair_same_offset(guide_) + static_cast<std::size_t>(e - 1);
    std::size_t single_mj = singles0;
    for (int j = 1; j < e; ++j) {
      emit(f, single_mj, pair_je, 1.0);
      pair_je += nsz - static_cast<std::size_t>(j);
      ++single_mj;
    }
    emit(f, single_me, pair_je, std::sqrt(2.0));  // pair_je is now |2_e>
    std::size_t pair_ej = pair_je + 1;
    single_mj = singles0 + static_cast<std::size_t>(e);
    for (int j = e + 1; j <= n; ++j) {
      emit(f, single_mj, pair_ej, 1.0);
      ++single_mj;
      ++pair_ej;
    }
    // cross-guide pairs: one contiguous (or n-strided) run per partner guide
    for (int mp = 1; mp <= basis_.n_waveguides(); ++mp) {
      if (mp == guide_) continue;
      const bool lower = guide_ < mp;
      std::size_t cross = lower
                              ? basis_.pair_cross_offset(guide_, mp) +
                                    static_cast<std::size_t>(e - 1) * nsz
                              : basis_.pair_cross_offset(mp, guide_) +
                                    static_cast<std::size_t>(e - 1);
      const std::size_t step = lower ? 1 : nsz;
      std::size_t single_mpj = 1 + static_cast<std::size_t>(mp - 1) * nsz;
      for (int j = 1; j <= n; ++j) {
        emit(f, single_mpj, cross, 1.0);
        ++single_mpj;
        cross += step;
      }
    }
  }

  /// out[r*out_stride] += alpha * value * in[c*in_stride] over all entries.
  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) const {
    for_each_entry([&](std::size_t r, std::size_t c, double v) {
      out[r * out_stride] += alpha * v * in[c * in_stride];
    });
  }

  /// Indices (within the waveguide basis) the operator writes / reads,
  /// appended separately; duplicates allowed.
  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const {
    for_each_entry([&](std::size_t r, std::size_t c, double) {
      rows.push_back(static_cast<std::uint32_t>(r));
      cols.push_back(static_cast<std::uint32_t>(c));
    });
  }

  void enumerate_entries(std::vector<Triplet>& out) const {
    for_each_entry([&](std::size_t r, std::size_t c, double v) {
      out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), complex(v, 0.0)});
    });
  }

private:
  template <class F>
  void emit(F&& f, std::size_t lowered, std::size_t raised, double v) const {
    if (kind_ == KernelKind::annihilate)
      f(lowered, raised, v);
    else
      f(raised, lowered, v);
  }

  WaveguideBasis basis_;
  int guide_;
  KernelKind kind_;
  int delay_bins_;
  int active_bin_ = 1;
};

/// Small dense operator on a local Fock factor.
class LocalOp {
public:
  LocalOp(FockBasis basis, std::vector<complex> row_major)
      : basis_(basis), m_(std::move(row_major)) {
    const std::size_t d = basis_.dimension();
    if (m_.size() != d * d) throw std::invalid_argument("LocalOp: matrix shape mismatch");
  }

  static LocalOp destroy(const FockBasis& b) {
    const std::size_t d = b.dimension();
    std::vector<complex> m(d * d, complex(0.0, 0.0));
    for (std::size_t n = 1; n < d; ++n) m[(n - 1) * d + n] = std::sqrt(static_cast<double>(n));
    return LocalOp(b, std::move(m));
  }
  static LocalOp create(const FockBasis& b) { return destroy(b).adjoint(); }
  static LocalOp number(const FockBasis& b) {
    const std::size_t d = b.dimension();
    std::vector<complex> m(d * d, complex(0.0, 0.0));
    for (std::size_t n = 0; n < d; ++n) m[n * d + n] = static_cast<double>(n);
    return LocalOp(b, std::move(m));
  }
  static LocalOp identity(const FockBasis& b) {
    const std::size_t d = b.dimension();
    std::vector<complex> m(d * d, complex(0.0, 0.0));
    for (std::size_t n = 0; n < d; ++n) m[n * d + n] = 1.0;
    return LocalOp(b, std::move(m));
  }

  const FockBasis& basis() const { return basis_; }
  std::size_t dim() const { return basis_.dimension(); }
  complex entry(std::size_t r, std::size_t c) const { return m_[r * dim() + c]; }

  LocalOp adjoint() const {
    const std::size_t d = dim();
    std::vector<complex> m(d * d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c) m[c * d + r] = std::conj(m_[r * d + c]);
    return LocalOp(basis_, std::move(m));
  }

  void apply_slice_add(complex alpha, const complex* in, std::size_t in_stride, complex* out,
                       std::size_t out_stride) const {
    const std::size_t d = dim();
    for (std::size_t r = 0; r < d; ++r) {
      complex acc(0.0, 0.0);
      for (std::size_t c = 0; c < d; ++c) acc += m_[r * d + c] * in[c * in_stride];
      out[r * out_stride] += alpha * acc;
    }
  }

  void collect_factor_rows_cols(std::vector<std::uint32_t>& rows,
                                std::vector<std::uint32_t>& cols) const {
    const std::size_t d = dim();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        if (m_[r * d + c] != complex(0.0, 0.0)) {
          rows.push_back(static_cast<std::uint32_t>(r));
          cols.push_back(static_cast<std::uint32_t>(c));
        }
  }

  void enumerate_entries(std::vector<Triplet>& out) const {
    const std::size_t d = dim();
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t c = 0; c < d; ++c)
        if (m_[r * d + c] != complex(0.0, 0.0))
          out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c), m_[r * d + c]});
  }

private:
  FockBasis basis_;
  std::vector<complex> m_;
};

}  // namespace wqed
