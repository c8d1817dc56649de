#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "krr/errors.hpp"
#include "krr/matrix.hpp"

namespace krr {

// Lower Cholesky factor stored by rows: lower[i] holds entries 0..i of
// row i, so the factor grows a row at a time. Diagonal entries are
// strictly positive. regularizer_a records the ridge that was added to
// the factorized matrix, 0 when the caller factorized something else.
struct CholFactor {
  std::vector<std::vector<double>> lower;
  double regularizer_a = 0.0;

  std::size_t dim() const noexcept { return lower.size(); }

  double min_diagonal() const {
    double m = lower.empty() ? 1.0 : lower.front().front();
    for (const auto& row : lower) m = std::min(m, row.back());
    return m;
  }
  double max_diagonal() const {
    double m = lower.empty() ? 1.0 : lower.front().front();
    for (const auto& row : lower) m = std::max(m, row.back());
    return m;
  }
};

struct ExtensionResult {
  CholFactor new_factor;
  double pivot;  // Schur complement of the appended diagonal entry
};

// Factorizes symmetric positive definite M = L L'. Only the lower
// triangle of M is read. Throws NotPositiveDefinite with the failing
// index when a pivot is not strictly positive.
inline CholFactor cholesky(const Matrix& m, double regularizer_a = 0.0) {
  if (m.rows() != m.cols()) throw InputError("cholesky: matrix not square");
  const std::size_t n = m.rows();
  CholFactor f;
  f.regularizer_a = regularizer_a;
  f.lower.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(i + 1, 0.0);
    for (std::size_t j = 0; j <= i; ++j) {
      double s = m(i, j);
      const std::vector<double>& lj = j == i ? row : f.lower[j];
      for (std::size_t k = 0; k < j; ++k) s -= row[k] * lj[k];
      if (j == i) {
        if (!(s > 0.0)) throw NotPositiveDefinite(i);
        row[i] = std::sqrt(s);
      } else {
        row[j] = s / f.lower[j][j];
      }
    }
    f.lower.push_back(std::move(row));
  }
  return f;
}

// Factorizes K + a I without materializing the shifted matrix elsewhere.
inline CholFactor cholesky_shifted(const Matrix& k, double a) {
  if (k.rows() != k.cols())
    throw InputError("cholesky_shifted: matrix not square");
  if (!(a > 0.0)) throw InputError("cholesky_shifted: ridge must be positive");
  Matrix shifted = k;
  shifted.add_to_diagonal(a);
  return cholesky(shifted, a);
}

// Solves L v = b in place of a fresh vector.
inline Vector forward_solve(const CholFactor& f, const Vector& b) {
  if (b.size() != f.dim()) throw InputError("forward_solve: length mismatch");
  Vector v(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= f.lower[i][k] * v[k];
    v[i] = s / f.lower[i][i];
  }
  return v;
}

// Solves (L L') x = b by forward then back substitution.
inline Vector solve(const CholFactor& f, const Vector& b) {
  Vector v = forward_solve(f, b);
  const std::size_t n = v.size();
  for (std::size_t ii = n; ii-- > 0;) {
    double s = v[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= f.lower[k][ii] * v[k];
    v[ii] = s / f.lower[ii][ii];
  }
  return v;
}

inline double logdet(const CholFactor& f) {
  double s = 0.0;
  for (const auto& row : f.lower) s += std::log(row.back());
  return 2.0 * s;
}

// Appends one row/column to a factorized matrix. With M the factorized
// matrix, new column u and new diagonal entry c, the appended pivot is
// the Schur complement c - u' M^{-1} u, computed from one triangular
// solve. The determinant of the extended matrix is det(M) * pivot.
inline ExtensionResult extend(const CholFactor& f, const Vector& new_col,
                              double new_diag) {
  if (new_col.size() != f.dim()) throw InputError("extend: length mismatch");
  Vector v = forward_solve(f, new_col);
  const double pivot = new_diag - dot(v, v);
  if (!(pivot > 0.0)) throw NotPositiveDefinite(f.dim());
  ExtensionResult r;
  r.new_factor = f;
  v.push_back(std::sqrt(pivot));
  r.new_factor.lower.push_back(std::move(v));
  r.pivot = pivot;
  return r;
}

// Squared-condition estimate from the factor diagonal. Cheap and rough;
// used only to decide when a verification tolerance must be loosened.
inline double condition_estimate(const CholFactor& f) {
  if (f.dim() == 0) return 1.0;
  const double ratio = f.max_diagonal() / f.min_diagonal();
  return ratio * ratio;
}

namespace detail {

// Column-pivoted LU for the few places that need a general (not
// necessarily symmetric) solve. Throws InputError on singular input.
struct LuFactor {
  Matrix lu;
  std::vector<std::size_t> perm;
};

inline LuFactor lu_factor(Matrix m) {
  if (m.rows() != m.cols()) throw InputError("lu_factor: matrix not square");
  const std::size_t n = m.rows();
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t best = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(best, col))) best = r;
    if (m(best, col) == 0.0) throw InputError("lu_factor: singular matrix");
    if (best != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(best, j));
      std::swap(perm[col], perm[best]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = m(r, col) / m(col, col);
      m(r, col) = factor;
      for (std::size_t j = col + 1; j < n; ++j) m(r, j) -= factor * m(col, j);
    }
  }
  return LuFactor{std::move(m), std::move(perm)};
}

inline Vector lu_solve(const LuFactor& f, const Vector& b) {
  const std::size_t n = f.perm.size();
  Vector x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[f.perm[i]];
    for (std::size_t k = 0; k < i; ++k) s -= f.lu(i, k) * x[k];
    x[i] = s;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= f.lu(ii, k) * x[k];
    x[ii] = s / f.lu(ii, ii);
  }
  return x;
}

inline Matrix lu_inverse(const LuFactor& f) {
  const std::size_t n = f.perm.size();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vector col = lu_solve(f, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

}  // namespace detail

// Max abs entry of A (B A + a I)^{-1} - (A B + a I)^{-1} A. The two
// sides are equal as matrices for every a where the shifts are
// invertible, so the residual measures only rounding.
inline double check_push_through(const Matrix& a_mat, const Matrix& b_mat,
                                 double a) {
  if (a_mat.rows() != b_mat.cols() || a_mat.cols() != b_mat.rows())
    throw InputError("check_push_through: incompatible shapes");
  Matrix ba = multiply(b_mat, a_mat);
  ba.add_to_diagonal(a);
  Matrix ab = multiply(a_mat, b_mat);
  ab.add_to_diagonal(a);
  const Matrix left = multiply(a_mat, detail::lu_inverse(detail::lu_factor(ba)));
  const Matrix right = multiply(detail::lu_inverse(detail::lu_factor(ab)), a_mat);
  return max_abs_diff(left, right);
}

struct PartitionCheck {
  double full_form;   // x' M^{-1} x
  double block_form;  // u' A^{-1} u over the leading block
};

// For SPD M and x split after `split` entries, x' M^{-1} x dominates the
// same form over the leading block. Returns both quadratic forms.
inline PartitionCheck check_partition_lemma(const Matrix& m, std::size_t split,
                                            const Vector& x) {
  if (m.rows() != m.cols()) throw InputError("partition: matrix not square");
  if (x.size() != m.rows()) throw InputError("partition: length mismatch");
  if (split > x.size()) throw InputError("partition: bad split");
  const CholFactor full = cholesky(m);
  const double full_form = dot(x, solve(full, x));
  Matrix lead(split, split);
  for (std::size_t i = 0; i < split; ++i)
    for (std::size_t j = 0; j < split; ++j) lead(i, j) = m(i, j);
  Vector u(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(split));
  const CholFactor lead_f = cholesky(lead);
  const double block_form = split == 0 ? 0.0 : dot(u, solve(lead_f, u));
  return PartitionCheck{full_form, block_form};
}

struct EigenDecomposition {
  Vector values;       // ascending
  Matrix vectors;      // columns match values
};

// Cyclic Jacobi rotations. Slow but very accurate, which is what the
// rank decisions downstream need; intended for dimensions up to a few
// dozen.
inline EigenDecomposition jacobi_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) throw InputError("jacobi: matrix not square");
  const std::size_t n = m.rows();
  Matrix a = m;
  Matrix v = Matrix::identity(n);
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (off <= 1e-300) break;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
    if (std::sqrt(off) <= 1e-15 * std::max(scale, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  EigenDecomposition d;
  d.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.values[i] = a(i, i);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return d.values[x] < d.values[y]; });
  Vector sorted(n);
  Matrix vectors(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted[j] = d.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) vectors(i, j) = v(i, order[j]);
  }
  d.values = std::move(sorted);
  d.vectors = std::move(vectors);
  return d;
}

struct NullProjection {
  double projection_sq_norm;  // squared norm of Y projected onto the null space
  std::size_t rank;           // eigenvalues above the cut
};

// Null space of PSD K taken as all eigendirections with eigenvalue at or
// below rank_tol * lambda_max. rank_tol should scale with the dimension;
// dim * 1e-12 is the conventional choice here.
inline NullProjection null_space_projection(const Matrix& k, const Vector& y,
                                            double rank_tol) {
  if (k.rows() != k.cols()) throw InputError("null_space: matrix not square");
  if (y.size() != k.rows()) throw InputError("null_space: length mismatch");
  if (!(rank_tol >= 0.0)) throw InputError("null_space: rank_tol negative");
  const std::size_t n = k.rows();
  if (n == 0) return NullProjection{0.0, 0};
  const EigenDecomposition d = jacobi_eigen(k);
  const double lambda_max = std::max(d.values.back(), 0.0);
  const double cut = rank_tol * lambda_max;
  NullProjection out{0.0, 0};
  for (std::size_t j = 0; j < n; ++j) {
    if (d.values[j] <= cut) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += d.vectors(i, j) * y[i];
      out.projection_sq_norm += proj * proj;
    } else {
      ++out.rank;
    }
  }
  return out;
}

}  // namespace krr
