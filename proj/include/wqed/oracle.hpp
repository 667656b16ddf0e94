#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "wqed/evolution.hpp"
#include "wqed/lazy.hpp"
#include "wqed/state.hpp"

namespace wqed::oracle {

namespace detail {

// Power series 2/sqrt(pi) * x * exp(-x^2) * sum_n (2x^2)^n / (2n+1)!!.
// All terms are positive, so there is no cancellation; for |x| <= 3 the sum
// converges to full double precision in under 80 terms.
inline double erf_series(double x) {
  const double x2 = x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int n = 0; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 3.0);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return 2.0 / std::sqrt(std::numbers::pi) * x * std::exp(-x2) * sum;
}

// Continued fraction for erfc(x), x >= 3 (modified Lentz):
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
inline double erfc_cf(double x) {
  const double tiny = 1e-300;
  double f = x;  // leading denominator term b0
  double c = f;
  double d = 0.0;
  for (int n = 1; n < 300; ++n) {
    const double a = 0.5 * n;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return std::exp(-x * x) / std::sqrt(std::numbers::pi) / f;
}

}  // namespace detail

/// Error function, implemented in-repo for bit-reproducibility across
/// platforms. Max observed error against high-precision references is below
/// 1e-14 over the real line.
inline double erf(double x) {
  const double ax = std::abs(x);
  double v;
  if (ax <= 3.0)
    v = detail::erf_series(ax);
  else if (ax < 6.5)
    v = 1.0 - detail::erfc_cf(ax);
  else
    v = 1.0;
  return x < 0.0 ? -v : v;
}

struct GaussianPulseParams {
  double tau_g = 1.0;  // FWHM-like width of the Gaussian pulse
  double t0 = 5.0;     // pulse center
  double gamma = 1.0;  // emitter decay rate
};

/// Normalized Gaussian pulse xi(t) = sqrt(2/tau_g) (ln2/pi)^{1/4}
/// exp(-2 ln2 (t-t0)^2 / tau_g^2); its squared integral is 1.
inline double gaussian_xi(double t, double tau_g, double t0) {
  const double ln2 = std::numbers::ln2;
  return std::sqrt(2.0 / tau_g) * std::pow(ln2 / std::numbers::pi, 0.25) *
         std::exp(-2.0 * ln2 * (t - t0) * (t - t0) / (tau_g * tau_g));
}
inline double gaussian_xi(double t, const GaussianPulseParams& p) {
  return gaussian_xi(t, p.tau_g, p.t0);
}

/// Closed-form emitter amplitude for the Gaussian pulse:
///   a = 2 ln2 / tau_g^2,  b = gamma/2,  x = 2a(t-t0) - b,  y = 2a t0 + b,
///   psi_e(t) = sqrt(2 gamma / tau_g) (ln2/pi)^{1/4} e^{-gamma t / 2} I(t),
///   I(t) = sqrt(pi) e^{b^2/(4a) + b t0} / (2 sqrt(a)) *
///          (erf(x/(2 sqrt(a))) + erf(y/(2 sqrt(a)))).
/// The exponentials are folded together to avoid overflow at large t0.
inline complex analytic_psi_e(double t, const GaussianPulseParams& p) {
  const double ln2 = std::numbers::ln2;
  const double a = 2.0 * ln2 / (p.tau_g * p.tau_g);
  const double b = 0.5 * p.gamma;
  const double x = 2.0 * a * (t - p.t0) - b;
  const double y = 2.0 * a * p.t0 + b;
  const double erf_sum = erf(x / (2.0 * std::sqrt(a))) + erf(y / (2.0 * std::sqrt(a)));
  const double expo = b * b / (4.0 * a) + b * p.t0 - b * t;
  const double i_damped = std::sqrt(std::numbers::pi) / (2.0 * std::sqrt(a)) * std::exp(expo) * erf_sum;
  const double pref = std::sqrt(2.0 * p.gamma / p.tau_g) * std::pow(ln2 / std::numbers::pi, 0.25);
  return {pref * i_damped, 0.0};
}

/// Monotone part I(t) of the closed form (exposed for the monotonicity
/// property; erf arguments increase with t).
inline double analytic_integral_term(double t, const GaussianPulseParams& p) {
  const double ln2 = std::numbers::ln2;
  const double a = 2.0 * ln2 / (p.tau_g * p.tau_g);
  const double b = 0.5 * p.gamma;
  const double x = 2.0 * a * (t - p.t0) - b;
  const double y = 2.0 * a * p.t0 + b;
  return std::sqrt(std::numbers::pi) * std::exp(b * b / (4.0 * a) + b * p.t0) /
         (2.0 * std::sqrt(a)) * (erf(x / (2.0 * std::sqrt(a))) + erf(y / (2.0 * std::sqrt(a))));
}

/// Input-output relation xi_out(t) = xi_in(t) - sqrt(gamma) psi_e(t).
inline complex analytic_xi_out(double t, const GaussianPulseParams& p) {
  return complex(gaussian_xi(t, p), 0.0) - std::sqrt(p.gamma) * analytic_psi_e(t, p);
}

struct EomSolution {
  std::vector<double> times;
  std::vector<complex> psi_e;
  std::vector<complex> xi_out;
};

/// Integrates the scattering equations of motion outside the time-bin
/// framework: d psi_e/dt = -(gamma/2) psi_e + sqrt(gamma) xi(t) with RK4, and
/// the discrete input-output update xi_out(t_{n+1}) = xi(t_{n+1}) -
/// sqrt(gamma) psi_e(t_n).
inline EomSolution eom_integrate(const std::function<complex(double)>& xi, double gamma, double dt,
                                 double t_start, double t_end, complex psi_e0 = {0.0, 0.0}) {
  if (!(dt > 0.0) || !(t_end > t_start)) throw std::invalid_argument("eom_integrate: bad grid");
  const int steps = static_cast<int>(std::lround((t_end - t_start) / dt));
  const double root_gamma = std::sqrt(gamma);
  const auto f = [&](double t, complex y) { return -0.5 * gamma * y + root_gamma * xi(t); };
  EomSolution out;
  out.times.reserve(static_cast<std::size_t>(steps) + 1);
  out.psi_e.reserve(static_cast<std::size_t>(steps) + 1);
  out.xi_out.reserve(static_cast<std::size_t>(steps) + 1);
  complex y = psi_e0;
  out.times.push_back(t_start);
  out.psi_e.push_back(y);
  out.xi_out.push_back(xi(t_start) - root_gamma * psi_e0);
  for (int n = 0; n < steps; ++n) {
    const double t = t_start + n * dt;
    const complex prev = y;
    const complex k1 = f(t, y);
    const complex k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
    const complex k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
    const complex k4 = f(t + dt, y + dt * k3);
    y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double t_next = t_start + (n + 1) * dt;
    out.times.push_back(t_next);
    out.psi_e.push_back(y);
    out.xi_out.push_back(xi(t_next) - root_gamma * prev);
  }
  return out;
}

inline EomSolution eom_integrate(const std::function<complex(double)>& xi, double gamma, double dt,
                                 double t_end) {
  return eom_integrate(xi, gamma, dt, 0.0, t_end);
}

/// First-order collision unitary
///   U_n = 1 + sqrt(gamma dt) (s^dag w_n - s w_n^dag)
///           - (gamma/2) dt s^dag s w_n w_n^dag
/// applied to an emitter (x) waveguide state. A micro-check against single
/// Runge-Kutta steps only; the production solver never uses it.
inline StateVector collision_step(const StateVector& psi, int bin, double gamma, double dt) {
  const CompositeBasis& cb = psi.basis();
  if (cb.n_factors() != 2)
    throw std::invalid_argument("collision_step: expected emitter (x) waveguide composite");
  const std::size_t wpos = cb.waveguide_position();
  const std::size_t fpos = wpos == 0 ? 1 : 0;
  const FockBasis fb = cb.fock_at(fpos);
  const WaveguideBasis wb = cb.waveguide_at(wpos);
  const double root = std::sqrt(gamma * dt);

  std::vector<std::pair<std::size_t, LazyOp>> up, down;
  up.emplace_back(fpos, fock_create(fb));
  up.emplace_back(wpos, waveguide_destroy(wb));
  down.emplace_back(fpos, fock_destroy(fb));
  down.emplace_back(wpos, waveguide_create(wb));
  LazyOp exchange = lazy_sum({scale(complex(root, 0.0), lazy_tensor(cb, std::move(up))),
                              scale(complex(-root, 0.0), lazy_tensor(cb, std::move(down)))});
  LazyOp number_e = lazy_tensor(cb, {{fpos, fock_number(fb)}});
  LazyOp w = lazy_tensor(cb, {{wpos, waveguide_destroy(wb)}});
  LazyOp wd = lazy_tensor(cb, {{wpos, waveguide_create(wb)}});
  LazyOp damp = lazy_product({number_e, w, wd});
  LazyOp u = lazy_sum({lazy_identity(cb), std::move(exchange),
                       scale(complex(-0.5 * gamma * dt, 0.0), std::move(damp))});
  u.set_active_bin(bin);
  StateVector out(cb);
  apply_accumulate(out, u, psi, complex(1.0, 0.0), complex(0.0, 0.0));
  return out;
}

}  // namespace wqed::oracle
