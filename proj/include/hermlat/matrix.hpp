#pragma once

// Exact dense linear algebra over E on top of Eigen storage. Pivoting is by
// E-valuation (any nonzero pivot is exact; low valuation keeps numbers small),
// so determinants, solves and kernels are custom free functions.

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "hermlat/field.hpp"

namespace hermlat {

using EMat = Eigen::Matrix<FieldElement, Eigen::Dynamic, Eigen::Dynamic>;
using EVec = Eigen::Matrix<FieldElement, Eigen::Dynamic, 1>;

// Pivot ranking for exact elimination: any nonzero pivot is exact, so a
// config-less rational literal simply ranks as valuation 0.
inline int pivot_val(const FieldElement& x) {
  if (x.is_zero()) return kValInf;
  if (!x.config().set()) return 0;
  return val_E(x);
}

inline EMat conj_transpose(const EMat& m) {
  EMat r(m.cols(), m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(j, i) = conj(m(i, j));
  return r;
}

inline bool mat_equal(const EMat& x, const EMat& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      if (x(i, j) != y(i, j)) return false;
  return true;
}

inline bool hermitian_check(const EMat& t) {
  if (t.rows() != t.cols()) throw std::invalid_argument("hermitian_check: matrix not square");
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = i; j < t.cols(); ++j)
      if (t(j, i) != conj(t(i, j))) return false;
  return true;
}

// Exact determinant by fraction-full Gaussian elimination, min-val pivoting.
inline FieldElement det(const EMat& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("det: matrix not square");
  Eigen::Index n = m.rows();
  if (n == 0) return FieldElement(1);
  EMat a = m;
  FieldElement result(1);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index piv = -1;
    int best = kValInf;
    for (Eigen::Index r = col; r < n; ++r) {
      int v = pivot_val(a(r, col));
      if (v < best) {
        best = v;
        piv = r;
      }
    }
    if (piv < 0) return FieldElement(0);
    if (piv != col) {
      a.row(piv).swap(a.row(col));
      result = -result;
    }
    result *= a(col, col);
    FieldElement pinv = inv(a(col, col));
    for (Eigen::Index r = col + 1; r < n; ++r) {
      if (a(r, col).is_zero()) continue;
      FieldElement f = a(r, col) * pinv;
      for (Eigen::Index c = col; c < n; ++c) a(r, c) -= f * a(col, c);
    }
  }
  return result;
}

// All i-by-i minor determinants of a square matrix.
inline std::vector<FieldElement> minors(const EMat& m, int size) {
  if (m.rows() != m.cols()) throw std::invalid_argument("minors: matrix not square");
  int n = static_cast<int>(m.rows());
  if (size < 1 || size > n) throw std::invalid_argument("minors: size out of range");
  std::vector<int> rows(size), cols(size);
  std::vector<FieldElement> out;
  auto next_comb = [n, size](std::vector<int>& c) {
    int i = size - 1;
    while (i >= 0 && c[i] == n - size + i) --i;
    if (i < 0) return false;
    ++c[i];
    for (int j = i + 1; j < size; ++j) c[j] = c[j - 1] + 1;
    return true;
  };
  for (int i = 0; i < size; ++i) rows[i] = i;
  do {
    for (int i = 0; i < size; ++i) cols[i] = i;
    do {
      EMat sub(size, size);
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) sub(i, j) = m(rows[i], cols[j]);
      out.push_back(det(sub));
    } while (next_comb(cols));
  } while (next_comb(rows));
  return out;
}

inline int min_val_of_minors(const EMat& m, int size) {
  int best = kValInf;
  for (const auto& d : minors(m, size)) best = std::min(best, val_E(d));
  return best;
}

// Exact solve A x = b for square invertible A.
inline EVec solve_square(const EMat& a_in, const EVec& b_in) {
  Eigen::Index n = a_in.rows();
  if (a_in.cols() != n || b_in.size() != n) throw std::invalid_argument("solve_square: shape");
  EMat a = a_in;
  EVec b = b_in;
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index piv = -1;
    int best = kValInf;
    for (Eigen::Index r = col; r < n; ++r) {
      int v = pivot_val(a(r, col));
      if (v < best) {
        best = v;
        piv = r;
      }
    }
    if (piv < 0) throw std::domain_error("solve_square: singular matrix");
    if (piv != col) {
      a.row(piv).swap(a.row(col));
      std::swap(b(piv), b(col));
    }
    FieldElement pinv = inv(a(col, col));
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col || a(r, col).is_zero()) continue;
      FieldElement f = a(r, col) * pinv;
      for (Eigen::Index c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b(r) -= f * b(col);
    }
  }
  EVec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x(i) = b(i) * inv(a(i, i));
  return x;
}

inline EMat inverse(const EMat& a) {
  Eigen::Index n = a.rows();
  EMat r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    EVec e = EVec::Zero(n);
    e(j) = FieldElement(1);
    r.col(j) = solve_square(a, e);
  }
  return r;
}

// Coordinates of v in the column span of full-column-rank B, if any.
inline std::optional<EVec> solve_in_span(const EMat& b, const EVec& v) {
  Eigen::Index n = b.rows(), m = b.cols();
  if (v.size() != n) throw std::invalid_argument("solve_in_span: shape");
  EMat a(n, m + 1);
  a.leftCols(m) = b;
  a.col(m) = v;
  // Row-reduce; pivot per column.
  Eigen::Index row = 0;
  std::vector<Eigen::Index> pivot_row(m, -1);
  for (Eigen::Index col = 0; col < m && row < n; ++col) {
    Eigen::Index piv = -1;
    int best = kValInf;
    for (Eigen::Index r = row; r < n; ++r) {
      int val = pivot_val(a(r, col));
      if (val < best) {
        best = val;
        piv = r;
      }
    }
    if (piv < 0) continue;
    if (piv != row) a.row(piv).swap(a.row(row));
    FieldElement pinv = inv(a(row, col));
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == row || a(r, col).is_zero()) continue;
      FieldElement f = a(r, col) * pinv;
      for (Eigen::Index c = col; c <= m; ++c) a(r, c) -= f * a(row, c);
    }
    pivot_row[col] = row;
    ++row;
  }
  // Full column rank expected.
  for (Eigen::Index col = 0; col < m; ++col)
    if (pivot_row[col] < 0) throw std::invalid_argument("solve_in_span: basis not full column rank");
  // Inconsistent rows => v outside the span.
  for (Eigen::Index r = row; r < n; ++r)
    if (!a(r, m).is_zero()) return std::nullopt;
  EVec x(m);
  for (Eigen::Index col = 0; col < m; ++col)
    x(col) = a(pivot_row[col], m) * inv(a(pivot_row[col], col));
  return x;
}

// Basis of the nullspace {x : A x = 0} as matrix columns (may be 0 columns).
inline EMat nullspace(const EMat& a_in) {
  EMat a = a_in;
  Eigen::Index n = a.rows(), m = a.cols();
  std::vector<Eigen::Index> pivot_of_col(m, -1);
  Eigen::Index row = 0;
  for (Eigen::Index col = 0; col < m && row < n; ++col) {
    Eigen::Index piv = -1;
    int best = kValInf;
    for (Eigen::Index r = row; r < n; ++r) {
      int v = pivot_val(a(r, col));
      if (v < best) {
        best = v;
        piv = r;
      }
    }
    if (piv < 0) continue;
    if (piv != row) a.row(piv).swap(a.row(row));
    FieldElement pinv = inv(a(row, col));
    for (Eigen::Index c = col; c < m; ++c) a(row, c) *= pinv;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == row || a(r, col).is_zero()) continue;
      FieldElement f = a(r, col);
      for (Eigen::Index c = col; c < m; ++c) a(r, c) -= f * a(row, c);
    }
    pivot_of_col[col] = row;
    ++row;
  }
  // Stamp unit entries with the field config found in the input, so that
  // downstream valuation arithmetic works on the kernel basis.
  FieldConfig cfg;
  for (Eigen::Index i = 0; i < n && !cfg.set(); ++i)
    for (Eigen::Index j = 0; j < m && !cfg.set(); ++j) cfg = a_in(i, j).config();
  std::vector<Eigen::Index> free_cols;
  for (Eigen::Index c = 0; c < m; ++c)
    if (pivot_of_col[c] < 0) free_cols.push_back(c);
  EMat k(m, static_cast<Eigen::Index>(free_cols.size()));
  for (size_t j = 0; j < free_cols.size(); ++j) {
    Eigen::Index fc = free_cols[j];
    for (Eigen::Index c = 0; c < m; ++c) k(c, j) = FieldElement(Rat(0), Rat(0), cfg);
    k(fc, j) = FieldElement(Rat(1), Rat(0), cfg);
    for (Eigen::Index c = 0; c < m; ++c)
      if (pivot_of_col[c] >= 0) k(c, j) = -a(pivot_of_col[c], fc);
  }
  return k;
}

}  // namespace hermlat
