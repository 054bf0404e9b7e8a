#include "idesign/matrix.hpp"

#include <Eigen/Dense>

namespace idesign {

namespace {

Eigen::MatrixXd to_eigen(const Matrix<double>& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  return m;
}

Matrix<double> from_eigen(const Eigen::MatrixXd& m) {
  Matrix<double> a(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) a(i, j) = m(i, j);
  return a;
}

}  // namespace

Matrix<Rational> psd_ginverse(const Matrix<Rational>& a) {
  if (!a.square()) throw std::invalid_argument("psd_ginverse: matrix not square");
  const std::size_t n = a.rows();
  // Pass 1: find pivot set by symmetric elimination on a working copy.
  Matrix<Rational> w = a;
  std::vector<std::size_t> pivots;
  std::vector<bool> used(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i] || w(i, i).sign() == 0) continue;
      if (best == n || abs(w(i, i)) > abs(w(best, best))) best = i;
    }
    if (best == n) break;
    used[best] = true;
    pivots.push_back(best);
    const Rational d = w(best, best);
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i] || w(i, best).sign() == 0) continue;
      const Rational f = w(i, best) / d;
      for (std::size_t j = 0; j < n; ++j) {
        if (w(best, j).sign() != 0) w(i, j) -= f * w(best, j);
      }
    }
  }
  // Pass 2: invert the principal submatrix on the pivot set.
  const std::size_t r = pivots.size();
  Matrix<Rational> sub(r, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) sub(i, j) = a(pivots[i], pivots[j]);
  Matrix<Rational> g(n, n);
  if (r == 0) return g;
  const Matrix<Rational> sub_inv = inverse(sub);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) g(pivots[i], pivots[j]) = sub_inv(i, j);
  return g;
}

Matrix<Rational> inverse(const Matrix<Rational>& a) {
  if (!a.square()) throw std::invalid_argument("inverse: matrix not square");
  const std::size_t n = a.rows();
  Matrix<Rational> w = a;
  Matrix<Rational> inv = Matrix<Rational>::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = n;
    for (std::size_t i = col; i < n; ++i) {
      if (w(i, col).sign() != 0) {
        piv = i;
        break;
      }
    }
    if (piv == n) throw std::domain_error("inverse: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(w(piv, j), w(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    }
    const Rational d = w(col, col);
    for (std::size_t j = 0; j < n; ++j) {
      w(col, j) /= d;
      inv(col, j) /= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col || w(i, col).sign() == 0) continue;
      const Rational f = w(i, col);
      for (std::size_t j = 0; j < n; ++j) {
        if (w(col, j).sign() != 0) w(i, j) -= f * w(col, j);
        if (inv(col, j).sign() != 0) inv(i, j) -= f * inv(col, j);
      }
    }
  }
  return inv;
}

Matrix<double> symmetric_pinv(const Matrix<double>& a, double rel_cutoff) {
  if (!a.square()) throw std::invalid_argument("symmetric_pinv: matrix not square");
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  const double cutoff = rel_cutoff * largest;
  Eigen::VectorXd inv_ev(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) inv_ev(i) = std::fabs(ev(i)) > cutoff ? 1.0 / ev(i) : 0.0;
  const Eigen::MatrixXd& v = es.eigenvectors();
  return from_eigen(v * inv_ev.asDiagonal() * v.transpose());
}

std::vector<double> symmetric_eigenvalues(const Matrix<double>& a) {
  if (!a.square()) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(a), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

Matrix<double> spd_inverse(const Matrix<double>& a) {
  if (!a.square()) throw std::invalid_argument("spd_inverse: matrix not square");
  Eigen::LLT<Eigen::MatrixXd> llt(to_eigen(a));
  if (llt.info() != Eigen::Success) throw std::domain_error("matrix is not positive definite");
  return from_eigen(llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

}  // namespace idesign
