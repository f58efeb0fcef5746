#pragma once

#include <Eigen/Dense>

namespace pns {

/// Parameters of the power-law extra stress S(A) = nu (delta + |A^sym|)^{p-2} A^sym.
struct StressParams {
  double p;      ///< growth exponent, in (1, inf)
  double delta;  ///< shift, >= 0
  double nu;     ///< viscosity scale, > 0

  void validate() const;  // throws std::invalid_argument on out-of-range values
};

/// Symmetric 2x2 tensor stored as (a11, a12, a22), a21 == a12 structurally.
struct SymTensor2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  static SymTensor2 sym_part(const Eigen::Matrix2d& a);

  double norm() const;                      // Frobenius norm sqrt(a11^2 + 2 a12^2 + a22^2)
  double dot(const SymTensor2& b) const;    // Frobenius product A : B
  double dot(const Eigen::Matrix2d& b) const;
  Eigen::Matrix2d full() const;
  Eigen::Vector2d apply(const Eigen::Vector2d& v) const;

  SymTensor2 operator+(const SymTensor2& b) const { return {a11 + b.a11, a12 + b.a12, a22 + b.a22}; }
  SymTensor2 operator-(const SymTensor2& b) const { return {a11 - b.a11, a12 - b.a12, a22 - b.a22}; }
  SymTensor2 operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }
};

// Scalar N-function machinery for phi = phi_{p,delta} with
// phi'(t) = (delta + t)^{p-2} t.  All of these are independent of nu.

/// phi(t), evaluated through the closed-form antiderivative of phi'.
double phi_value(const StressParams& sp, double t);

/// phi'(t) = (delta + t)^{p-2} t.
double phi_prime(const StressParams& sp, double t);

/// Shifted N-function phi_a(t) = int_0^t phi'(a+s) s/(a+s) ds.
/// For this family the integrand reduces to (delta + a + s)^{p-2} s, so the
/// shift acts as delta -> delta + a and the closed form applies unchanged.
double phi_shifted(const StressParams& sp, double a, double t);

/// Convex conjugate phi*(t) = sup_{s>=0} (st - phi(s)), via the Legendre
/// construction: s* solves phi'(s*) = t by a bisection/Newton hybrid.
double phi_conjugate(const StressParams& sp, double t);

/// Conjugate of the shifted N-function (phi_a)*.
double phi_shifted_conjugate(const StressParams& sp, double a, double t);

/// Inverse of phi' (monotone root-finding, relative tolerance 1e-12).
double phi_prime_inverse(const StressParams& sp, double y);

/// F(A) = (delta + |A^sym|)^{(p-2)/2} A^sym, extended by continuity at A^sym = 0.
SymTensor2 F_of(const StressParams& sp, const Eigen::Matrix2d& a);

/// S(A) = nu (delta + |A^sym|)^{p-2} A^sym, extended by continuity at A^sym = 0.
SymTensor2 S_of(const StressParams& sp, const Eigen::Matrix2d& a);

/// Derivative of S at A, acting on increments H as
///   H  |->  alpha H^sym + beta (N : H^sym) N,   N = A^sym/|A^sym|,
/// with alpha = nu (delta+|A^sym|)^{p-2} and
/// beta = nu (p-2) (delta+|A^sym|)^{p-3} |A^sym| (zero when |A^sym| = 0).
struct StressJacobian {
  double alpha = 0.0;
  double beta = 0.0;
  SymTensor2 direction;  // unit A^sym/|A^sym|, zero tensor when |A^sym| = 0

  SymTensor2 apply(const SymTensor2& hs) const;
  SymTensor2 apply(const Eigen::Matrix2d& h) const;

  /// Matrix of the map in the orthonormal coordinates (h11, sqrt(2) h12, h22)
  /// of symmetric tensors; exactly symmetric since the map is self-adjoint.
  Eigen::Matrix3d matrix() const;
};

StressJacobian S_jacobian(const StressParams& sp, const Eigen::Matrix2d& a);

}  // namespace pns
