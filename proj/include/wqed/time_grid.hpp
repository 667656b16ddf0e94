#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace wqed {

/// Uniform grid of time bins. Bin k (1-based) covers [t_k, t_k + dt) and
/// carries its left-edge time t_k = t0 + (k-1)*dt. Pulse functions are
/// sampled at left edges.
class TimeGrid {
public:
  TimeGrid(double t0, double dt, int n_bins) : t0_(t0), dt_(dt), n_bins_(n_bins) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
    if (n_bins < 1) throw std::invalid_argument("TimeGrid: need at least one bin");
  }

  /// Builds the grid from an explicit array of bin times (must be uniform).
  static TimeGrid from_times(const std::vector<double>& times) {
    if (times.size() < 2) throw std::invalid_argument("TimeGrid: need at least two time points");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: times must be increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double step = times[i] - times[i - 1];
      if (std::abs(step - dt) > 1e-9 * dt)
        throw std::invalid_argument("TimeGrid: times are not uniformly spaced");
    }
    return TimeGrid(times.front(), dt, static_cast<int>(times.size()));
  }

  /// Grid covering [t0, t_max] inclusive with spacing dt.
  static TimeGrid span(double t0, double t_max, double dt) {
    if (!(dt > 0.0) || !(t_max > t0)) throw std::invalid_argument("TimeGrid: invalid span");
    const int n = static_cast<int>(std::lround((t_max - t0) / dt)) + 1;
    return TimeGrid(t0, dt, n);
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  int n_bins() const { return n_bins_; }

  /// Left-edge time of bin k, 1-based.
  double time_at(int k) const { return t0_ + (k - 1) * dt_; }

  std::vector<double> times() const {
    std::vector<double> out(static_cast<std::size_t>(n_bins_));
    for (int k = 1; k <= n_bins_; ++k) out[static_cast<std::size_t>(k - 1)] = time_at(k);
    return out;
  }

  /// True when `times` coincides with the first times.size() bin edges.
  bool is_prefix(const std::vector<double>& times) const {
    if (times.empty() || times.size() > static_cast<std::size_t>(n_bins_)) return false;
    for (std::size_t i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - time_at(static_cast<int>(i) + 1)) > 1e-9 * dt_) return false;
    return true;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.n_bins_ == b.n_bins_ && std::abs(a.t0_ - b.t0_) <= 1e-12 * (1.0 + std::abs(a.t0_)) &&
           std::abs(a.dt_ - b.dt_) <= 1e-12 * a.dt_;
  }
  friend bool operator!=(const TimeGrid& a, const TimeGrid& b) { return !(a == b); }

private:
  double t0_;
  double dt_;
  int n_bins_;
};

}  // namespace wqed
