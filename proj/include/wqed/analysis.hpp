#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "wqed/views.hpp"

namespace wqed {

/// Product-mode expansion xi2(t, t') = sum_i lambda_i phi_i(t) phi_i(t') of a
/// same-guide two-photon wavefunction. Coefficients are normalized so that
/// sum_i lambda_i^2 = 1; modes satisfy sum_k phi_i*(t_k) phi_j(t_k) dt =
/// delta_ij.
struct SchmidtDecomposition {
  TimeGrid grid;
  std::vector<double> lambdas;              // descending, non-negative
  std::vector<std::vector<complex>> modes;  // modes[i][k] = phi_i(t_k)
  double total_weight;                      // sqrt(sum sigma^2) before normalization
};

/// Singular value decomposition of the dt-weighted wavefunction matrix. For
/// a complex symmetric matrix the left singular vectors carry a per-mode
/// phase freedom relative to the Takagi form; the phase is fixed here so that
/// sum_i sigma_i phi_i phi_i^T reproduces the matrix (up to degenerate
/// clusters, where only the lambda values are meaningful).
inline SchmidtDecomposition schmidt_decompose(const TwoPhotonWavefunction& xi2) {
  const std::size_t n = xi2.n();
  const double dt = xi2.grid.dt();
  Eigen::MatrixXcd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      const complex v = xi2.values[i * n + k];
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::invalid_argument("schmidt_decompose: non-finite wavefunction");
      a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v * dt;
    }
  if (a.norm() == 0.0)
    throw std::domain_error("schmidt_decompose: empty two-photon sector");

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const auto& u = svd.matrixU();

  double total_sq = 0.0;
  for (Eigen::Index j = 0; j < sigma.size(); ++j) total_sq += sigma(j) * sigma(j);
  const double total = std::sqrt(total_sq);

  SchmidtDecomposition out{xi2.grid, {}, {}, total};
  const double inv_root_dt = 1.0 / std::sqrt(dt);
  for (Eigen::Index j = 0; j < sigma.size(); ++j) {
    out.lambdas.push_back(sigma(j) / total);
    // Takagi phase: u_j^dag A conj(u_j) = sigma_j e^{i theta_j}; moving half
    // of theta_j into the mode makes phi_j phi_j^T sum back to A.
    complex phase(1.0, 0.0);
    if (sigma(j) > 1e-14 * sigma(0)) {
      const Eigen::VectorXcd au = a * u.col(j).conjugate();
      const complex c = u.col(j).dot(au);  // conjugates the left factor
      if (std::abs(c) > 0.0) phase = std::sqrt(c / std::abs(c));
    }
    std::vector<complex> mode(n);
    for (std::size_t k = 0; k < n; ++k)
      mode[k] = phase * u(static_cast<Eigen::Index>(k), j) * inv_root_dt;
    out.modes.push_back(std::move(mode));
  }
  return out;
}

/// Sector population per the two-time density formula
/// n_XY = 2 * sum_{i,k} |xi_XY(t_i, t_k)|^2 dt^2.
inline double mode_population(const TwoPhotonWavefunction& xi2) {
  const double dt = xi2.grid.dt();
  double s = 0.0;
  for (const complex& v : xi2.values) s += std::norm(v);
  return 2.0 * s * dt * dt;
}

struct L2Error {
  double absolute;  // sum |x - y|^2 dt
  double relative;  // absolute / (sum |y|^2 dt)
};

/// Squared-norm error between two sampled functions; `y` is the reference
/// whose norm fixes the relative form.
inline L2Error l2_error(std::span<const complex> x, std::span<const complex> y, double dt) {
  if (x.size() != y.size()) throw std::invalid_argument("l2_error: length mismatch");
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    diff += std::norm(x[i] - y[i]);
    ref += std::norm(y[i]);
  }
  diff *= dt;
  ref *= dt;
  if (ref == 0.0) throw std::domain_error("l2_error: reference has zero norm");
  return {diff, diff / ref};
}

}  // namespace wqed
