#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "wqed/time_grid.hpp"

namespace wqed {

/// Truncated bosonic mode with occupations 0..cutoff. A cutoff of one photon
/// is equivalent to a two-level system (|g> = |0>, |e> = |1>).
class FockBasis {
public:
  explicit FockBasis(int cutoff) : cutoff_(cutoff) {
    if (cutoff < 0) throw std::invalid_argument("FockBasis: cutoff must be >= 0");
  }
  int cutoff() const { return cutoff_; }
  std::size_t dimension() const { return static_cast<std::size_t>(cutoff_) + 1; }
  friend bool operator==(const FockBasis& a, const FockBasis& b) { return a.cutoff_ == b.cutoff_; }
  friend bool operator!=(const FockBasis& a, const FockBasis& b) { return !(a == b); }

private:
  int cutoff_;
};

enum class Sector { vacuum, single, pair_same, pair_cross };

/// Physical label of a waveguide basis state. Guides and bins are 1-based.
/// pair_same is stored canonically with bin1 <= bin2 (|1_i 1_k> = |1_k 1_i>);
/// pair_cross with guide1 < guide2 and (bin1, bin2) independent since
/// photons in distinct guides are distinguishable.
struct BasisIndex {
  Sector sector = Sector::vacuum;
  int guide1 = 0;
  int guide2 = 0;
  int bin1 = 0;
  int bin2 = 0;

  static BasisIndex vacuum() { return {}; }
  static BasisIndex single(int guide, int bin) {
    BasisIndex idx;
    idx.sector = Sector::single;
    idx.guide1 = guide;
    idx.bin1 = bin;
    return idx;
  }
  static BasisIndex pair_same(int guide, int bin_i, int bin_k) {
    BasisIndex idx;
    idx.sector = Sector::pair_same;
    idx.guide1 = guide;
    idx.bin1 = bin_i <= bin_k ? bin_i : bin_k;
    idx.bin2 = bin_i <= bin_k ? bin_k : bin_i;
    return idx;
  }
  static BasisIndex pair_cross(int guide_a, int bin_a, int guide_b, int bin_b) {
    if (guide_a == guide_b)
      throw std::invalid_argument("BasisIndex: pair_cross requires distinct guides");
    BasisIndex idx;
    idx.sector = Sector::pair_cross;
    if (guide_a < guide_b) {
      idx.guide1 = guide_a;
      idx.guide2 = guide_b;
      idx.bin1 = bin_a;
      idx.bin2 = bin_b;
    } else {
      idx.guide1 = guide_b;
      idx.guide2 = guide_a;
      idx.bin1 = bin_b;
      idx.bin2 = bin_a;
    }
    return idx;
  }

  friend bool operator==(const BasisIndex& a, const BasisIndex& b) {
    return a.sector == b.sector && a.guide1 == b.guide1 && a.guide2 == b.guide2 &&
           a.bin1 == b.bin1 && a.bin2 == b.bin2;
  }
};

/// Excitation-number-restricted basis of the traveling field: vacuum, all
/// single-bin excitations, and (for max_photons = 2) all bin pairs. The flat
/// layout is sector-contiguous: vacuum, then singles ordered by (guide, bin),
/// then same-guide pairs by (guide, upper-triangular row-major including the
/// diagonal), then cross-guide pairs by (guide pair, bin1, bin2).
class WaveguideBasis {
public:
  WaveguideBasis(int max_photons, int n_waveguides, TimeGrid grid)
      : max_photons_(max_photons), n_waveguides_(n_waveguides), grid_(grid) {
    if (max_photons != 1 && max_photons != 2)
      throw std::invalid_argument("WaveguideBasis: maximum number of photons is limited to 1 or 2");
    if (n_waveguides < 1)
      throw std::invalid_argument("WaveguideBasis: need at least one waveguide");
  }
  WaveguideBasis(int max_photons, TimeGrid grid) : WaveguideBasis(max_photons, 1, grid) {}

  int max_photons() const { return max_photons_; }
  int n_waveguides() const { return n_waveguides_; }
  const TimeGrid& grid() const { return grid_; }
  int n_bins() const { return grid_.n_bins(); }

  std::size_t dimension() const {
    const std::size_t n = static_cast<std::size_t>(n_bins());
    const std::size_t nw = static_cast<std::size_t>(n_waveguides_);
    std::size_t dim = 1 + nw * n;
    if (max_photons_ == 2) {
      dim += nw * n * (n + 1) / 2;
      dim += nw * (nw - 1) / 2 * n * n;
    }
    return dim;
  }

  std::size_t vacuum_index() const { return 0; }

  std::size_t single_index(int guide, int bin) const {
    check_guide(guide);
    check_bin(bin);
    const std::size_t n = static_cast<std::size_t>(n_bins());
    return 1 + static_cast<std::size_t>(guide - 1) * n + static_cast<std::size_t>(bin - 1);
  }

  /// Requires i <= k; (i, i) is the doubly-occupied bin |2_i>.
  std::size_t pair_same_index(int guide, int bin_i, int bin_k) const {
    require_two_photons();
    check_guide(guide);
    check_bin(bin_i);
    check_bin(bin_k);
    if (bin_i > bin_k) throw std::invalid_argument("pair_same_index: bins must satisfy i <= k");
    const std::size_t n = static_cast<std::size_t>(n_bins());
    const std::size_t i = static_cast<std::size_t>(bin_i);
    const std::size_t k = static_cast<std::size_t>(bin_k);
    const std::size_t tri = (i - 1) * n - (i - 1) * (i - 2) / 2 + (k - i);
    return pair_same_offset(guide) + tri;
  }

  /// Requires guide1 < guide2; bin1 lives in guide1, bin2 in guide2.
  std::size_t pair_cross_index(int guide1, int bin1, int guide2, int bin2) const {
    require_two_photons();
    check_guide(guide1);
    check_guide(guide2);
    check_bin(bin1);
    check_bin(bin2);
    if (guide1 >= guide2)
      throw std::invalid_argument("pair_cross_index: guides must satisfy guide1 < guide2");
    const std::size_t n = static_cast<std::size_t>(n_bins());
    return pair_cross_offset(guide1, guide2) + static_cast<std::size_t>(bin1 - 1) * n +
           static_cast<std::size_t>(bin2 - 1);
  }

  std::size_t singles_offset() const { return 1; }

  std::size_t pair_same_offset(int guide) const {
    const std::size_t n = static_cast<std::size_t>(n_bins());
    const std::size_t nw = static_cast<std::size_t>(n_waveguides_);
    return 1 + nw * n + static_cast<std::size_t>(guide - 1) * (n * (n + 1) / 2);
  }

  std::size_t pair_cross_offset(int guide1, int guide2) const {
    const std::size_t n = static_cast<std::size_t>(n_bins());
    const std::size_t nw = static_cast<std::size_t>(n_waveguides_);
    const std::size_t base = 1 + nw * n + nw * (n * (n + 1) / 2);
    const std::size_t g1 = static_cast<std::size_t>(guide1);
    const std::size_t g2 = static_cast<std::size_t>(guide2);
    const std::size_t pair = (g1 - 1) * (2 * nw - g1) / 2 + (g2 - g1 - 1);
    return base + pair * n * n;
  }

  std::size_t flat_index(const BasisIndex& idx) const {
    switch (idx.sector) {
      case Sector::vacuum:
        return 0;
      case Sector::single:
        return single_index(idx.guide1, idx.bin1);
      case Sector::pair_same:
        return pair_same_index(idx.guide1, idx.bin1, idx.bin2);
      case Sector::pair_cross:
        return pair_cross_index(idx.guide1, idx.bin1, idx.guide2, idx.bin2);
    }
    throw std::logic_error("flat_index: bad sector");
  }

  BasisIndex label_of(std::size_t flat) const {
    if (flat >= dimension()) throw std::out_of_range("label_of: index out of range");
    if (flat == 0) return BasisIndex::vacuum();
    const std::size_t n = static_cast<std::size_t>(n_bins());
    const std::size_t nw = static_cast<std::size_t>(n_waveguides_);
    std::size_t pos = flat - 1;
    if (pos < nw * n)
      return BasisIndex::single(static_cast<int>(pos / n) + 1, static_cast<int>(pos % n) + 1);
    pos -= nw * n;
    const std::size_t tri = n * (n + 1) / 2;
    if (max_photons_ == 2 && pos < nw * tri) {
      const int guide = static_cast<int>(pos / tri) + 1;
      std::size_t rem = pos % tri;
      std::size_t i = 1;
      while (rem >= n - i + 1) {
        rem -= n - i + 1;
        ++i;
      }
      return BasisIndex::pair_same(guide, static_cast<int>(i), static_cast<int>(i + rem));
    }
    pos -= nw * tri;
    const std::size_t block = n * n;
    const std::size_t pair = pos / block;
    std::size_t rem = pos % block;
    // Invert the lexicographic (g1 < g2) pair enumeration.
    std::size_t g1 = 1;
    std::size_t before = 0;
    while (before + (nw - g1) <= pair) {
      before += nw - g1;
      ++g1;
    }
    const std::size_t g2 = g1 + 1 + (pair - before);
    return BasisIndex::pair_cross(static_cast<int>(g1), static_cast<int>(rem / n) + 1,
                                  static_cast<int>(g2), static_cast<int>(rem % n) + 1);
  }

  friend bool operator==(const WaveguideBasis& a, const WaveguideBasis& b) {
    return a.max_photons_ == b.max_photons_ && a.n_waveguides_ == b.n_waveguides_ &&
           a.grid_ == b.grid_;
  }
  friend bool operator!=(const WaveguideBasis& a, const WaveguideBasis& b) { return !(a == b); }

private:
  void require_two_photons() const {
    if (max_photons_ != 2)
      throw std::invalid_argument("WaveguideBasis: pair sectors need max_photons = 2");
  }
  void check_guide(int guide) const {
    if (guide < 1 || guide > n_waveguides_)
      throw std::out_of_range("WaveguideBasis: waveguide label out of range");
  }
  void check_bin(int bin) const {
    if (bin < 1 || bin > n_bins())
      throw std::out_of_range("WaveguideBasis: bin label out of range");
  }

  int max_photons_;
  int n_waveguides_;
  TimeGrid grid_;
};

inline WaveguideBasis waveguide_basis(int max_photons, const std::vector<double>& times) {
  return WaveguideBasis(max_photons, 1, TimeGrid::from_times(times));
}
inline WaveguideBasis waveguide_basis(int max_photons, int n_waveguides,
                                      const std::vector<double>& times) {
  return WaveguideBasis(max_photons, n_waveguides, TimeGrid::from_times(times));
}

/// Ordered tensor product of factor bases. The LAST factor varies fastest in
/// the flat layout; all states, views, and operators agree on this.
class CompositeBasis {
public:
  using Factor = std::variant<FockBasis, WaveguideBasis>;

  explicit CompositeBasis(std::vector<Factor> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw std::invalid_argument("CompositeBasis: empty factor list");
    dims_.resize(factors_.size());
    strides_.resize(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) dims_[i] = factor_dim(factors_[i]);
    std::size_t stride = 1;
    for (std::size_t i = factors_.size(); i-- > 0;) {
      strides_[i] = stride;
      stride *= dims_[i];
    }
    dimension_ = stride;
  }
  CompositeBasis(const FockBasis& b) : CompositeBasis(std::vector<Factor>{Factor(b)}) {}
  CompositeBasis(const WaveguideBasis& b) : CompositeBasis(std::vector<Factor>{Factor(b)}) {}

  static std::size_t factor_dim(const Factor& f) {
    return std::visit([](const auto& b) { return b.dimension(); }, f);
  }

  std::size_t n_factors() const { return factors_.size(); }
  const Factor& factor(std::size_t i) const { return factors_.at(i); }
  std::size_t factor_dimension(std::size_t i) const { return dims_.at(i); }
  std::size_t stride(std::size_t i) const { return strides_.at(i); }
  std::size_t dimension() const { return dimension_; }

  std::size_t flat(std::span<const std::size_t> sub) const {
    if (sub.size() != factors_.size())
      throw std::invalid_argument("CompositeBasis::flat: wrong number of sub-indices");
    std::size_t out = 0;
    for (std::size_t i = 0; i < sub.size(); ++i) {
      if (sub[i] >= dims_[i]) throw std::out_of_range("CompositeBasis::flat: sub-index too large");
      out += sub[i] * strides_[i];
    }
    return out;
  }

  bool factor_is_waveguide(std::size_t i) const {
    return std::holds_alternative<WaveguideBasis>(factors_[i]);
  }
  const WaveguideBasis& waveguide_at(std::size_t i) const {
    return std::get<WaveguideBasis>(factors_.at(i));
  }
  const FockBasis& fock_at(std::size_t i) const { return std::get<FockBasis>(factors_.at(i)); }

  /// Position of the unique waveguide factor; throws if there is none or more
  /// than one (views and scenario builders rely on uniqueness).
  std::size_t waveguide_position() const {
    std::size_t found = factors_.size();
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (factor_is_waveguide(i)) {
        if (found != factors_.size())
          throw std::invalid_argument("CompositeBasis: more than one waveguide factor");
        found = i;
      }
    }
    if (found == factors_.size())
      throw std::invalid_argument("CompositeBasis: no waveguide factor");
    return found;
  }

  friend bool operator==(const CompositeBasis& a, const CompositeBasis& b) {
    if (a.factors_.size() != b.factors_.size()) return false;
    for (std::size_t i = 0; i < a.factors_.size(); ++i) {
      const bool eq = std::visit(
          [](const auto& x, const auto& y) -> bool {
            if constexpr (std::is_same_v<std::decay_t<decltype(x)>, std::decay_t<decltype(y)>>)
              return x == y;
            else
              return false;
          },
          a.factors_[i], b.factors_[i]);
      if (!eq) return false;
    }
    return true;
  }
  friend bool operator!=(const CompositeBasis& a, const CompositeBasis& b) { return !(a == b); }

private:
  std::vector<Factor> factors_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t dimension_ = 0;
};

inline CompositeBasis tensor_basis(std::vector<CompositeBasis::Factor> factors) {
  return CompositeBasis(std::move(factors));
}

}  // namespace wqed
