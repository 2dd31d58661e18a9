#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace driftlab {

template <class T, int M = Eigen::Dynamic, int N = Eigen::Dynamic>
using matrix = Eigen::Matrix<T, M, N>;

template <class T, int M = Eigen::Dynamic>
using vector = matrix<T, M, 1>;

using real = double;
using vec = vector<real>;
using mat = matrix<real>;

/// Total variation distance between two probability vectors (half the L1 gap).
template <class DerivedP, class DerivedQ>
typename DerivedP::Scalar half_l1(const Eigen::MatrixBase<DerivedP>& p,
                                  const Eigen::MatrixBase<DerivedQ>& q) {
  return (p - q).cwiseAbs().sum() / typename DerivedP::Scalar(2);
}

template <class Derived>
bool is_probability_vector(const Eigen::MatrixBase<Derived>& p,
                           typename Derived::Scalar tol = 1e-12) {
  if (p.size() == 0) return false;
  if ((p.array() < 0).any()) return false;
  return std::abs(p.sum() - typename Derived::Scalar(1)) <= tol;
}

template <class Derived>
bool is_row_stochastic(const Eigen::MatrixBase<Derived>& P,
                       typename Derived::Scalar tol = 1e-12) {
  if (P.rows() != P.cols() || P.rows() == 0) return false;
  if ((P.array() < 0).any()) return false;
  return ((P.rowwise().sum().array() - typename Derived::Scalar(1)).abs() <= tol).all();
}

/// P^k by repeated squaring.
template <class Derived>
matrix<typename Derived::Scalar> matrix_power(const Eigen::MatrixBase<Derived>& P, long k) {
  using Scalar = typename Derived::Scalar;
  if (k < 0) throw std::invalid_argument("matrix_power: negative exponent");
  matrix<Scalar> result = matrix<Scalar>::Identity(P.rows(), P.cols());
  matrix<Scalar> base = P;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

/// Irreducible and aperiodic, via Wielandt's bound: P^((S-1)^2+1) strictly positive.
template <class Derived>
bool is_primitive(const Eigen::MatrixBase<Derived>& P) {
  const long s = P.rows();
  matrix<typename Derived::Scalar> pattern = (P.array() > 0).template cast<typename Derived::Scalar>();
  matrix<typename Derived::Scalar> reach = matrix_power(pattern, (s - 1) * (s - 1) + 1);
  return (reach.array() > 0).all();
}

/// Stationary row vector pi with pi P = pi, returned as a column.
template <class Derived>
vector<typename Derived::Scalar> stationary_distribution(const Eigen::MatrixBase<Derived>& P) {
  using Scalar = typename Derived::Scalar;
  const long s = P.rows();
  matrix<Scalar> A = P.transpose() - matrix<Scalar>::Identity(s, s);
  A.row(s - 1).setOnes();
  vector<Scalar> b = vector<Scalar>::Zero(s);
  b(s - 1) = Scalar(1);
  vector<Scalar> pi = A.fullPivLu().solve(b);
  pi = pi.cwiseMax(Scalar(0));
  return pi / pi.sum();
}

}  // namespace driftlab
