#include "pns/constitutive.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pns {

namespace {

void require_nonneg(double t, const char* where) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::domain_error(std::string(where) + ": argument must be finite and nonnegative");
  }
}

// Closed-form antiderivative of (c + s)^{p-2} s on [0, t].
double phi_closed_form(double p, double c, double t) {
  if (t == 0.0) return 0.0;
  if (c == 0.0) return std::pow(t, p) / p;
  if (t < 1e-4 * c) {
    // Taylor expansion in t/c; the closed form cancels catastrophically here.
    const double q = t / c;
    const double cp2 = std::pow(c, p - 2.0);
    return cp2 * t * t * (0.5 + (p - 2.0) * q / 3.0 + (p - 2.0) * (p - 3.0) * q * q / 8.0);
  }
  const double ct = c + t;
  return std::pow(ct, p) / p - c * std::pow(ct, p - 1.0) / (p - 1.0) - std::pow(c, p) / p +
         std::pow(c, p) / (p - 1.0);
}

double phi_prime_at(double p, double c, double t) {
  if (t == 0.0) return 0.0;
  return std::pow(c + t, p - 2.0) * t;
}

// Monotone solve of (c + s)^{p-2} s = y, bisection bracket with Newton steps.
double phi_prime_inverse_at(double p, double c, double y) {
  if (y == 0.0) return 0.0;
  double hi = std::max({1.0, y, std::pow(y, 1.0 / (p - 1.0))});
  int guard = 0;
  while (phi_prime_at(p, c, hi) < y) {
    hi *= 2.0;
    if (++guard > 4000) throw std::runtime_error("phi_prime_inverse: failed to bracket root");
  }
  double lo = 0.0;
  double x = 0.5 * hi;
  for (int it = 0; it < 200; ++it) {
    const double f = phi_prime_at(p, c, x) - y;
    if (f > 0.0) {
      hi = x;
    } else if (f < 0.0) {
      lo = x;
    } else {
      return x;
    }
    const double dfdx = std::pow(c + x, p - 3.0) * ((p - 1.0) * x + c);
    double next = x - f / dfdx;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-12 * hi) return 0.5 * (lo + hi);
    x = next;
  }
  throw std::runtime_error("phi_prime_inverse: no convergence");
}

double conjugate_at(double p, double c, double t) {
  if (t == 0.0) return 0.0;
  const double s = phi_prime_inverse_at(p, c, t);
  return t * s - phi_closed_form(p, c, s);
}

}  // namespace

void StressParams::validate() const {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("StressParams: p must lie in (1, inf)");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw std::invalid_argument("StressParams: delta must be >= 0");
  if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("StressParams: nu must be > 0");
}

SymTensor2 SymTensor2::sym_part(const Eigen::Matrix2d& a) {
  return {a(0, 0), 0.5 * (a(0, 1) + a(1, 0)), a(1, 1)};
}

double SymTensor2::norm() const { return std::sqrt(a11 * a11 + 2.0 * a12 * a12 + a22 * a22); }

double SymTensor2::dot(const SymTensor2& b) const {
  return a11 * b.a11 + 2.0 * a12 * b.a12 + a22 * b.a22;
}

double SymTensor2::dot(const Eigen::Matrix2d& b) const {
  return a11 * b(0, 0) + a12 * (b(0, 1) + b(1, 0)) + a22 * b(1, 1);
}

Eigen::Matrix2d SymTensor2::full() const {
  Eigen::Matrix2d m;
  m << a11, a12, a12, a22;
  return m;
}

Eigen::Vector2d SymTensor2::apply(const Eigen::Vector2d& v) const {
  return {a11 * v[0] + a12 * v[1], a12 * v[0] + a22 * v[1]};
}

double phi_value(const StressParams& sp, double t) {
  require_nonneg(t, "phi_value");
  return phi_closed_form(sp.p, sp.delta, t);
}

double phi_prime(const StressParams& sp, double t) {
  require_nonneg(t, "phi_prime");
  return phi_prime_at(sp.p, sp.delta, t);
}

double phi_shifted(const StressParams& sp, double a, double t) {
  require_nonneg(a, "phi_shifted");
  require_nonneg(t, "phi_shifted");
  return phi_closed_form(sp.p, sp.delta + a, t);
}

double phi_conjugate(const StressParams& sp, double t) {
  require_nonneg(t, "phi_conjugate");
  return conjugate_at(sp.p, sp.delta, t);
}

double phi_shifted_conjugate(const StressParams& sp, double a, double t) {
  require_nonneg(a, "phi_shifted_conjugate");
  require_nonneg(t, "phi_shifted_conjugate");
  return conjugate_at(sp.p, sp.delta + a, t);
}

double phi_prime_inverse(const StressParams& sp, double y) {
  require_nonneg(y, "phi_prime_inverse");
  return phi_prime_inverse_at(sp.p, sp.delta, y);
}

SymTensor2 F_of(const StressParams& sp, const Eigen::Matrix2d& a) {
  const SymTensor2 as = SymTensor2::sym_part(a);
  const double n = as.norm();
  if (n == 0.0) return {};
  return as * std::pow(sp.delta + n, 0.5 * (sp.p - 2.0));
}

SymTensor2 S_of(const StressParams& sp, const Eigen::Matrix2d& a) {
  const SymTensor2 as = SymTensor2::sym_part(a);
  const double n = as.norm();
  if (n == 0.0) return {};
  return as * (sp.nu * std::pow(sp.delta + n, sp.p - 2.0));
}

SymTensor2 StressJacobian::apply(const SymTensor2& hs) const {
  SymTensor2 out = hs * alpha;
  if (beta != 0.0) {
    const double proj = direction.dot(hs);
    out = out + direction * (beta * proj);
  }
  return out;
}

SymTensor2 StressJacobian::apply(const Eigen::Matrix2d& h) const {
  return apply(SymTensor2::sym_part(h));
}

Eigen::Matrix3d StressJacobian::matrix() const {
  const double s2 = std::sqrt(2.0);
  const double n0 = direction.a11, n1 = s2 * direction.a12, n2 = direction.a22;
  const double d01 = beta * n0 * n1, d02 = beta * n0 * n2, d12 = beta * n1 * n2;
  Eigen::Matrix3d m;
  m << alpha + beta * n0 * n0, d01, d02,
       d01, alpha + beta * n1 * n1, d12,
       d02, d12, alpha + beta * n2 * n2;
  return m;
}

StressJacobian S_jacobian(const StressParams& sp, const Eigen::Matrix2d& a) {
  const SymTensor2 as = SymTensor2::sym_part(a);
  const double n = as.norm();
  if (n == 0.0) {
    if (sp.delta == 0.0 && sp.p < 3.0) {
      throw std::domain_error("S_jacobian: singular at A^sym = 0 for delta = 0, p < 3");
    }
    return {sp.nu * std::pow(sp.delta, sp.p - 2.0), 0.0, {}};
  }
  StressJacobian j;
  j.alpha = sp.nu * std::pow(sp.delta + n, sp.p - 2.0);
  j.beta = sp.nu * (sp.p - 2.0) * std::pow(sp.delta + n, sp.p - 3.0) * n;
  j.direction = as * (1.0 / n);
  return j;
}

}  // namespace pns
