#pragma once

// Hermitian O_E-lattices inside a fixed hermitian E-space, with exact module
// arithmetic: canonical Hermite form over the DVR O_E (pivoting by valuation),
// duals, sums/intersections, fundamental invariants via minor valuations, and
// exact normal bases (1x1 blocks beta*u^{2b} and hyperbolic 2x2 blocks).

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "hermlat/matrix.hpp"

namespace hermlat {

struct HermSpace {
  FieldConfig cfg;
  EMat gram;  // n x n hermitian, nonzero determinant (ambient form)

  int dim() const { return static_cast<int>(gram.rows()); }

  void validate() const {
    cfg.validate();
    if (gram.rows() != gram.cols() || gram.rows() == 0)
      throw std::invalid_argument("HermSpace: gram must be square and nonempty");
    if (!hermitian_check(gram)) throw std::invalid_argument("HermSpace: gram not hermitian");
    if (det(gram).is_zero()) throw std::invalid_argument("HermSpace: gram degenerate");
  }
};

using SpacePtr = std::shared_ptr<const HermSpace>;

inline EMat with_config(const EMat& m, const FieldConfig& cfg) {
  EMat r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const FieldElement& x = m(i, j);
      (void)detail::merge(x.config(), cfg);
      r(i, j) = FieldElement(x.a(), x.b(), cfg);
    }
  return r;
}

inline SpacePtr make_space(long p, long eps0, const EMat& gram) {
  FieldConfig cfg{p, eps0};
  auto sp = std::make_shared<HermSpace>(HermSpace{cfg, with_config(gram, cfg)});
  sp->validate();
  return sp;
}

// Pairing (x, y): linear in x, conjugate-linear in y; (y, x) = conj((x, y)).
inline FieldElement pair_vec(const HermSpace& sp, const EVec& x, const EVec& y) {
  FieldElement s(0);
  for (Eigen::Index i = 0; i < sp.gram.rows(); ++i) {
    if (x(i).is_zero()) continue;
    for (Eigen::Index j = 0; j < sp.gram.cols(); ++j) {
      if (y(j).is_zero()) continue;
      s += x(i) * sp.gram(i, j) * conj(y(j));
    }
  }
  return s;
}

// Moment matrix T(b_1..b_m) of the columns of B: T_ij = (b_i, b_j).
inline EMat moment_matrix(const HermSpace& sp, const EMat& b) {
  Eigen::Index m = b.cols();
  EMat t(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      t(i, j) = pair_vec(sp, b.col(i), b.col(j));
      if (j != i) t(j, i) = conj(t(i, j));
    }
  }
  return t;
}

// Canonical column Hermite form over O_E. Columns generate the module; the
// result has one pivot u^{v} per used row, later columns zeroed in pivot rows,
// earlier columns reduced mod u^{v}. Zero columns are dropped.
inline EMat hnf_canonical(EMat b) {
  Eigen::Index n = b.rows(), m = b.cols();
  Eigen::Index col = 0;
  for (Eigen::Index r = 0; r < n && col < m; ++r) {
    Eigen::Index piv = -1;
    int best = kValInf;
    for (Eigen::Index j = col; j < m; ++j) {
      int v = val_E(b(r, j));
      if (v < best) {
        best = v;
        piv = j;
      }
    }
    if (piv < 0) continue;
    if (piv != col) b.col(piv).swap(b.col(col));
    const FieldConfig& cfg = b(r, col).config();
    FieldElement unit_inv = inv(b(r, col) * inv(u_pow(cfg, best)));
    b.col(col) *= unit_inv;  // pivot becomes exactly u^best
    for (Eigen::Index j = col + 1; j < m; ++j) {
      if (b(r, j).is_zero()) continue;
      FieldElement f = b(r, j) * inv(b(r, col));
      b.col(j) -= f * b.col(col);
    }
    for (Eigen::Index j = 0; j < col; ++j) {
      if (b(r, j).is_zero()) continue;
      FieldElement rep = reduce_mod_upow(b(r, j), best);
      FieldElement f = (b(r, j) - rep) * inv(b(r, col));
      if (!f.is_zero()) b.col(j) -= f * b.col(col);
    }
    ++col;
  }
  return b.leftCols(col);
}

// Basis of span(K) intersected with O_E^M, for K with independent columns:
// {c : K c in O^M} is the plain-bilinear dual of the module generated by the
// rows of K, computed from a Hermite basis of that row module.
inline EMat saturate_columns(const EMat& k) {
  if (k.cols() == 0) return k;
  EMat kt = k.transpose();
  EMat g = hnf_canonical(kt);  // columns = Hermite basis of the row module of K
  if (g.cols() != k.cols()) throw std::logic_error("saturate_columns: row space rank defect");
  EMat gt = g.transpose();
  return k * inverse(gt);
}

class HermLattice {
 public:
  HermLattice(SpacePtr space, const EMat& basis)
      : space_(std::move(space)), basis_(with_config(basis, space_->cfg)) {
    if (basis_.rows() != space_->gram.rows())
      throw std::invalid_argument("HermLattice: basis/ambient dimension mismatch");
    canon_ = hnf_canonical(basis_);
    if (canon_.cols() != basis_.cols())
      throw std::invalid_argument("HermLattice: basis columns not E-linearly independent");
  }

  static HermLattice standard(SpacePtr space) {
    Eigen::Index n = space->gram.rows();
    EMat id(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) id(i, j) = FieldElement(i == j ? 1 : 0);
    return HermLattice(std::move(space), id);
  }

  const SpacePtr& space() const { return space_; }
  const HermSpace& ambient() const { return *space_; }
  const EMat& basis() const { return basis_; }
  const EMat& canonical() const { return canon_; }
  int rank() const { return static_cast<int>(canon_.cols()); }
  int dim() const { return static_cast<int>(canon_.rows()); }

  friend bool operator==(const HermLattice& x, const HermLattice& y) {
    if (x.space_ != y.space_ &&
        !(x.space_->cfg == y.space_->cfg && mat_equal(x.space_->gram, y.space_->gram)))
      return false;
    return mat_equal(x.canon_, y.canon_);
  }
  friend bool operator!=(const HermLattice& x, const HermLattice& y) { return !(x == y); }

 private:
  SpacePtr space_;
  EMat basis_;
  EMat canon_;
};

inline std::string mat_key(const EMat& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols() << ":";
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) os << m(i, j) << ";";
  return os.str();
}

inline std::string lattice_key(const HermLattice& l) { return mat_key(l.canonical()); }

// Moment matrix of the stored basis.
inline EMat gram_of(const HermLattice& l) { return moment_matrix(l.ambient(), l.basis()); }
inline EMat gram_canonical(const HermLattice& l) {
  return moment_matrix(l.ambient(), l.canonical());
}

// L integral iff every pairing of lattice vectors lies in u^{-1} O_E.
inline bool is_integral(const HermLattice& l) {
  EMat t = gram_canonical(l);
  for (Eigen::Index i = 0; i < t.rows(); ++i)
    for (Eigen::Index j = i; j < t.cols(); ++j)
      if (val_E(t(i, j)) < -1) return false;
  return true;
}

// Dual within the span: x with (x, y) in u^{-1} O_E for all y in L.
inline HermLattice dual(const HermLattice& l) {
  if (l.rank() == 0) throw std::domain_error("dual: rank-0 lattice");
  EMat t = moment_matrix(l.ambient(), l.canonical());
  if (det(t).is_zero()) throw std::domain_error("dual: degenerate restricted form");
  EMat d = l.canonical() * inverse(t.transpose());
  d *= u_pow(l.ambient().cfg, -1);
  return HermLattice(l.space(), d);
}

inline bool contains_vector(const HermLattice& l, const EVec& x) {
  auto c = solve_in_span(l.canonical(), with_config(x, l.ambient().cfg));
  if (!c) return false;
  for (Eigen::Index i = 0; i < c->size(); ++i)
    if (val_E((*c)(i)) < 0) return false;
  return true;
}

inline bool in_span(const HermLattice& l, const EVec& x) {
  return solve_in_span(l.canonical(), with_config(x, l.ambient().cfg)).has_value();
}

inline bool contains(const HermLattice& outer, const HermLattice& inner) {
  if (outer.space() != inner.space() && !mat_equal(outer.ambient().gram, inner.ambient().gram))
    throw std::invalid_argument("contains: ambient mismatch");
  for (Eigen::Index j = 0; j < inner.canonical().cols(); ++j)
    if (!contains_vector(outer, inner.canonical().col(j))) return false;
  return true;
}

inline HermLattice sum(const HermLattice& a, const HermLattice& b) {
  if (a.space() != b.space() && !mat_equal(a.ambient().gram, b.ambient().gram))
    throw std::invalid_argument("sum: ambient mismatch");
  EMat j(a.dim(), a.rank() + b.rank());
  j.leftCols(a.rank()) = a.canonical();
  j.rightCols(b.rank()) = b.canonical();
  return HermLattice(a.space(), hnf_canonical(j));
}

inline HermLattice add_vector(const HermLattice& l, const EVec& x) {
  EMat j(l.dim(), l.rank() + 1);
  j.leftCols(l.rank()) = l.canonical();
  j.col(l.rank()) = with_config(x, l.ambient().cfg);
  return HermLattice(l.space(), hnf_canonical(j));
}

inline HermLattice intersect(const HermLattice& a, const HermLattice& b) {
  if (a.space() != b.space() && !mat_equal(a.ambient().gram, b.ambient().gram))
    throw std::invalid_argument("intersect: ambient mismatch");
  EMat m(a.dim(), a.rank() + b.rank());
  m.leftCols(a.rank()) = a.canonical();
  for (Eigen::Index j = 0; j < b.rank(); ++j) m.col(a.rank() + j) = -b.canonical().col(j);
  EMat k = nullspace(m);
  if (k.cols() == 0) return HermLattice(a.space(), EMat(a.dim(), 0));
  EMat ks = saturate_columns(k);
  EMat w = a.canonical() * ks.topRows(a.rank());
  return HermLattice(a.space(), hnf_canonical(w));
}

// L intersected with the subspace spanned by the columns of S.
inline HermLattice intersect_span(const HermLattice& l, const EMat& s) {
  EMat sc = with_config(s, l.ambient().cfg);
  EMat m(l.dim(), l.rank() + sc.cols());
  m.leftCols(l.rank()) = l.canonical();
  for (Eigen::Index j = 0; j < sc.cols(); ++j) m.col(l.rank() + j) = -sc.col(j);
  EMat k = nullspace(m);
  EMat x = k.topRows(l.rank());
  if (x.cols() == 0) return HermLattice(l.space(), EMat(l.dim(), 0));
  EMat xs = saturate_columns(x);
  return HermLattice(l.space(), hnf_canonical(l.canonical() * xs));
}

inline HermLattice rescale(const HermLattice& l, const FieldElement& s) {
  if (s.is_zero()) throw std::invalid_argument("rescale: zero scalar");
  EMat b = l.basis();
  for (Eigen::Index j = 0; j < b.cols(); ++j) b.col(j) *= s;
  return HermLattice(l.space(), b);
}

struct Invariants {
  std::vector<int> a;  // nondecreasing
  int t = 0;           // number of nonzero entries
  int val = 0;         // sum
};

// Elementary-divisor exponents read off minor valuations of the moment matrix:
// a_1 + ... + a_i - i = min val_E over i-by-i minors. Valid verbatim for any
// full-rank-in-span hermitian module (negative entries for non-integral ones).
inline Invariants invariants_any(const HermLattice& l) {
  EMat t = gram_canonical(l);
  int m = l.rank();
  Invariants inv;
  int d_prev = 0;
  for (int i = 1; i <= m; ++i) {
    int mv = min_val_of_minors(t, i);
    if (mv >= kValInf) throw std::domain_error("invariants: degenerate form");
    int d_i = mv + i;
    inv.a.push_back(d_i - d_prev);
    d_prev = d_i;
  }
  if (!std::is_sorted(inv.a.begin(), inv.a.end()))
    throw std::logic_error("invariants: minor valuations not convex");
  for (int ai : inv.a) {
    if (ai != 0) ++inv.t;
    inv.val += ai;
  }
  return inv;
}

inline Invariants fundamental_invariants(const HermLattice& l) {
  if (!is_integral(l)) throw std::domain_error("fundamental_invariants: lattice not integral");
  Invariants inv = invariants_any(l);
  if (!inv.a.empty() && inv.a.front() < 0) throw std::logic_error("fundamental_invariants: negative");
  if ((inv.t - l.rank()) % 2 != 0 || (inv.val - l.rank()) % 2 != 0)
    throw std::logic_error("fundamental_invariants: parity violation");
  return inv;
}

inline int type_of(const HermLattice& l) { return fundamental_invariants(l).t; }

// val(L) extended to possibly non-integral full-rank modules: val_E(det T) + rank.
inline int val_extended(const HermLattice& l) {
  int v = val_E(det(gram_canonical(l)));
  if (v >= kValInf) throw std::domain_error("val_extended: degenerate form");
  return v + l.rank();
}

inline bool is_vertex(const HermLattice& l) {
  if (!is_integral(l)) return false;
  Invariants inv = fundamental_invariants(l);
  return inv.a.empty() || inv.a.back() <= 1;
}

inline bool is_selfdual(const HermLattice& l) {
  if (!is_integral(l)) return false;
  Invariants inv = fundamental_invariants(l);
  return inv.a.empty() || inv.a.back() == 0;
}

// Nonsplit ambient: (-1)^{n/2} det(gram) outside Nm(E^x). Even dimension only.
inline bool is_nonsplit(const HermSpace& sp) {
  if (sp.dim() % 2 != 0) throw std::invalid_argument("is_nonsplit: odd dimension");
  FieldElement d = det(sp.gram);
  if (!d.is_rational()) throw std::logic_error("is_nonsplit: non-F determinant");
  Rat t = d.a();
  if ((sp.dim() / 2) % 2 != 0) t = -t;
  return !is_norm(t, sp.cfg);
}

// val(x) := val(<x>) = val_E((x,x)) + 1 for anisotropic x.
inline int val_of_vector(const HermSpace& sp, const EVec& x) {
  FieldElement n = pair_vec(sp, x, x);
  if (n.is_zero()) throw std::domain_error("val_of_vector: isotropic vector");
  return val_E(n) + 1;
}

inline bool v_int_test(const HermSpace& sp, const EVec& x) {
  return val_E(pair_vec(sp, x, x)) >= 0;
}

// Basis of {x : (x, v) = 0 for all given v} inside the ambient space.
inline EMat perp_subspace(const HermSpace& sp, const EMat& vectors) {
  Eigen::Index n = sp.gram.rows();
  EMat rows(vectors.cols(), n);
  for (Eigen::Index k = 0; k < vectors.cols(); ++k)
    for (Eigen::Index j = 0; j < n; ++j) {
      EVec ej = EVec::Zero(n);
      ej(j) = FieldElement(1);
      rows(k, j) = pair_vec(sp, with_config(ej, sp.cfg), vectors.col(k));
    }
  return nullspace(rows);
}

// Orthogonal direct sum: new ambient with block-diagonal gram.
inline HermLattice orthogonal_sum(const HermLattice& a, const HermLattice& b) {
  if (!(a.ambient().cfg == b.ambient().cfg))
    throw std::invalid_argument("orthogonal_sum: config mismatch");
  int na = a.dim(), nb = b.dim();
  EMat gram(na + nb, na + nb);
  for (Eigen::Index i = 0; i < na + nb; ++i)
    for (Eigen::Index j = 0; j < na + nb; ++j) gram(i, j) = FieldElement(0);
  gram.topLeftCorner(na, na) = a.ambient().gram;
  gram.bottomRightCorner(nb, nb) = b.ambient().gram;
  SpacePtr sp = make_space(a.ambient().cfg.p, a.ambient().cfg.eps0, gram);
  EMat basis(na + nb, a.rank() + b.rank());
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    for (Eigen::Index j = 0; j < basis.cols(); ++j) basis(i, j) = FieldElement(0);
  basis.topLeftCorner(na, a.rank()) = a.canonical();
  basis.bottomRightCorner(nb, b.rank()) = b.canonical();
  return HermLattice(sp, basis);
}

// ---------------------------------------------------------------------------
// Quotient structure outer/inner via Smith form over O_E.

struct QuotientData {
  EMat gens;              // adapted basis w_1..w_m of the outer lattice
  std::vector<int> exps;  // inner = <u^{e_1} w_1, ..., u^{e_m} w_m>, nondecreasing
};

// Smith normal form of the inclusion inner <= outer (same span, same rank):
// one pass of min-valuation pivoting over the DVR O_E.
inline QuotientData quotient_structure(const HermLattice& outer, const HermLattice& inner) {
  if (outer.rank() != inner.rank())
    throw std::invalid_argument("quotient_structure: rank mismatch");
  int m = outer.rank();
  EMat c(m, m);
  for (int j = 0; j < m; ++j) {
    auto coords = solve_in_span(outer.canonical(), inner.canonical().col(j));
    if (!coords) throw std::invalid_argument("quotient_structure: spans differ");
    c.col(j) = *coords;
  }
  EMat w = outer.canonical();
  const FieldConfig& cfg = outer.ambient().cfg;
  QuotientData q;
  for (int k = 0; k < m; ++k) {
    int best = kValInf;
    int bi = -1, bj = -1;
    for (int i = k; i < m; ++i)
      for (int j = k; j < m; ++j) {
        int v = val_E(c(i, j));
        if (v < best) {
          best = v;
          bi = i;
          bj = j;
        }
      }
    if (bi < 0) throw std::logic_error("quotient_structure: singular inclusion");
    if (best < 0) throw std::invalid_argument("quotient_structure: inner not contained in outer");
    if (bi != k) {
      c.row(bi).swap(c.row(k));
      w.col(bi).swap(w.col(k));
    }
    if (bj != k) c.col(bj).swap(c.col(k));
    FieldElement omega = u_pow(cfg, best) * inv(c(k, k));
    c.row(k) *= omega;
    w.col(k) *= inv(omega);
    for (int i = k + 1; i < m; ++i) {
      if (c(i, k).is_zero()) continue;
      FieldElement f = c(i, k) * inv(c(k, k));
      c.row(i) -= (f * c.row(k)).eval();
      w.col(k) += (f * w.col(i)).eval();
    }
    for (int j = k + 1; j < m; ++j) {
      if (c(k, j).is_zero()) continue;
      FieldElement g = c(k, j) * inv(c(k, k));
      c.col(j) -= (g * c.col(k)).eval();
    }
    q.exps.push_back(best);
  }
  q.gens = w;
  return q;
}

inline std::vector<FieldElement> residues_mod_upow(const FieldConfig& cfg, int e) {
  long pa = 1, pb = 1;
  for (int i = 0; i < (e + 1) / 2; ++i) pa *= cfg.p;
  for (int i = 0; i < e / 2; ++i) pb *= cfg.p;
  std::vector<FieldElement> out;
  out.reserve(pa * pb);
  for (long a = 0; a < pa; ++a)
    for (long b = 0; b < pb; ++b) out.emplace_back(Rat(a), Rat(b), cfg);
  return out;
}

// Same invariants through the elementary-divisor structure of dual(L)/L
// (one Smith-form pass; the fast path for ordering keys and the
// minors-vs-quotient cross-check). Integral lattices only.
inline Invariants invariants_via_quotient(const HermLattice& l) {
  auto q = quotient_structure(dual(l), l);
  Invariants inv;
  inv.a = q.exps;
  std::sort(inv.a.begin(), inv.a.end());
  for (int ai : inv.a) {
    if (ai != 0) ++inv.t;
    inv.val += ai;
  }
  return inv;
}

// All coset representatives of inner in outer (size q^{sum e_i}; caller guards).
inline std::vector<EVec> coset_reps(const HermSpace& sp, const QuotientData& q) {
  std::vector<EVec> reps;
  EVec zero = EVec::Zero(q.gens.rows());
  reps.push_back(with_config(zero, sp.cfg));
  for (size_t i = 0; i < q.exps.size(); ++i) {
    if (q.exps[i] == 0) continue;
    auto digits = residues_mod_upow(sp.cfg, q.exps[i]);
    std::vector<EVec> next;
    next.reserve(reps.size() * digits.size());
    for (const auto& r : reps)
      for (const auto& d : digits) next.push_back(r + (d * q.gens.col(i)).eval());
    reps = std::move(next);
  }
  return reps;
}

// ---------------------------------------------------------------------------
// Normal bases.

struct NormalBlock {
  int size = 1;       // 1 or 2
  long exponent = 0;  // b for 1x1 (pairing beta u^{2b}), c for 2x2 (pairing u^{2c-1})
  Rat beta;           // 1x1 only, an O_F-unit
};

struct NormalBasis {
  EMat basis;                      // generates the lattice; moment matrix block diagonal
  std::vector<NormalBlock> blocks; // in basis order
};

namespace detail {

// Fundamental solution of x^2 - D y^2 = 1 by brute scan (D small here).
inline std::pair<Int, Int> pell_fundamental(long d) {
  for (Int y = 1;; ++y) {
    Int t = d * y * y + 1;
    Int x = sqrt(t);
    if (x * x == t) return {x, y};
    if (y > 100000) throw std::logic_error("pell_fundamental: not found");
  }
}

// Any rational solution of Nm(xi) = c0 (xi = (x + y u)/m), or nullopt if the
// norm equation is rationally unsolvable. Bounded Pell-style search.
inline std::optional<FieldElement> solve_norm_equation(const Rat& c0, const FieldConfig& cfg) {
  if (c0 == 0) return FieldElement(0, 0, cfg);
  long d = cfg.p * cfg.eps0;
  if (d < 0) throw std::invalid_argument("solve_norm_equation: needs positive p*eps0");
  Int m = denominator(c0);
  Int n = numerator(c0) * m;  // solve x^2 - D y^2 = N over Z, xi = (x + y u)/m
  auto [x1, y1] = pell_fundamental(d);
  // Classical bound: a solvable class has a representative with
  // 0 <= y <= sqrt(|N| (x1 + 1) / (2 D)); scan with margin.
  Int nn = n < 0 ? Int(-n) : n;
  Int bound_arg = nn * (x1 + 1) / (2 * d);
  Int bound = sqrt(bound_arg) + 2;
  for (Int y = 0; y <= bound; ++y) {
    Int t = n + d * y * y;
    if (t < 0) continue;
    Int x = sqrt(t);
    if (x * x == t)
      return FieldElement(Rat(x, m), Rat(y, m), cfg);
  }
  return std::nullopt;
}

// Integral lambda with e_i + lambda e_j isotropic, given the plane data
// (alpha = (e_i, e_j) attains the odd minimum v, diagonals d_i, d_j).
inline std::optional<FieldElement> isotropic_coefficient(const FieldElement& alpha, const Rat& di,
                                                         const Rat& dj, const FieldConfig& cfg) {
  if (di == 0) return FieldElement(0, 0, cfg);
  if (dj == 0) return std::nullopt;  // caller should use e_j itself (swapped roles)
  FieldElement mu = FieldElement(Rat(1) / dj) * alpha;
  Rat c0 = norm(mu) - di / dj;
  auto xi0 = solve_norm_equation(c0, cfg);
  if (!xi0) return std::nullopt;
  // Walk the rational norm-one group (s + u)/(s - u) looking for an integral
  // lambda = xi - mu; the valid set is p-adically open when nonempty.
  FieldElement u = make_u(cfg);
  auto try_xi = [&](const FieldElement& xi) -> std::optional<FieldElement> {
    FieldElement lam = xi - mu;
    if (!lam.is_zero() && val_E(lam) < 0) return std::nullopt;
    return lam;
  };
  std::vector<FieldElement> units = {FieldElement(1), FieldElement(-1)};
  std::vector<Rat> svals;
  for (long a = 0; a <= 4 * cfg.p; ++a)
    for (long k = 0; k <= 2; ++k) {
      Rat s = Rat(a, pow_int(Int(cfg.p), k));
      svals.push_back(s);
      if (a) svals.push_back(-s);
    }
  for (const Rat& s : svals) {
    FieldElement num = FieldElement(s) + u, den = FieldElement(s) - u;
    if (den.is_zero() || num.is_zero()) continue;
    units.push_back(num * inv(den));
  }
  for (const auto& t : units) {
    if (auto lam = try_xi(*xi0 * t)) return lam;
    if (auto lam = try_xi(conj(*xi0) * t)) return lam;
  }
  return std::nullopt;
}

}  // namespace detail

// Exact normal basis: greedy block peeling by minimum gram valuation.
inline NormalBasis normal_basis(const HermLattice& l) {
  const HermSpace& sp = l.ambient();
  const FieldConfig& cfg = sp.cfg;
  if (l.rank() > 0 && det(gram_canonical(l)).is_zero())
    throw std::domain_error("normal_basis: degenerate restricted form");
  std::vector<EVec> vecs;
  for (Eigen::Index j = 0; j < l.canonical().cols(); ++j) vecs.push_back(l.canonical().col(j));

  struct Emitted {
    NormalBlock block;
    std::vector<EVec> basis_vecs;
  };
  std::vector<Emitted> emitted;

  auto peel_1x1 = [&](size_t k) {
    EVec f = vecs[k];
    FieldElement d = pair_vec(sp, f, f);
    int v = val_E(d);
    if (v % 2 != 0 || !d.is_rational()) throw std::logic_error("normal_basis: bad 1x1 pivot");
    long b = v / 2;
    Rat pe = Rat(cfg.p) * Rat(cfg.eps0);
    Rat upow = b >= 0 ? Rat(pow_int(numerator(pe), b)) : Rat(1, pow_int(numerator(pe), -b));
    NormalBlock blk{1, b, d.a() / upow};
    std::vector<EVec> rest;
    for (size_t i = 0; i < vecs.size(); ++i) {
      if (i == k) continue;
      FieldElement c = pair_vec(sp, vecs[i], f) * inv(d);
      rest.push_back(vecs[i] - (c * f).eval());
    }
    emitted.push_back({blk, {f}});
    vecs = std::move(rest);
  };

  auto peel_2x2 = [&](size_t i, size_t j, const FieldElement& lambda, int v) {
    EVec f1 = vecs[i] + (lambda * vecs[j]).eval();
    if (!pair_vec(sp, f1, f1).is_zero()) throw std::logic_error("normal_basis: pivot not isotropic");
    EVec g = vecs[j];
    FieldElement beta = pair_vec(sp, f1, g);
    if (val_E(beta) != v) throw std::logic_error("normal_basis: hyperbolic partner valuation");
    FieldElement dg = pair_vec(sp, g, g);
    // f2 = g + nu f1 with (f2, f2) = dg + Tr(nu beta) = 0; nu = (-dg/2)/beta.
    FieldElement nu = FieldElement(Rat(-1, 2)) * dg * inv(beta);
    EVec f2 = g + (nu * f1).eval();
    FieldElement omega = conj(u_pow(cfg, v) * inv(beta));
    f2 = (omega * f2).eval();
    if (!pair_vec(sp, f2, f2).is_zero() || pair_vec(sp, f1, f2) != u_pow(cfg, v))
      throw std::logic_error("normal_basis: hyperbolic block normalization failed");
    NormalBlock blk{2, (v + 1) / 2, Rat(0)};
    FieldElement upv_inv = inv(u_pow(cfg, v));
    std::vector<EVec> rest;
    for (size_t k = 0; k < vecs.size(); ++k) {
      if (k == i || k == j) continue;
      // (e - c1 f1 - c2 f2, f1) = (e,f1) + c2 u^v   [(f2,f1) = conj(u^v) = -u^v]
      // (e - c1 f1 - c2 f2, f2) = (e,f2) - c1 u^v
      FieldElement c2 = -(pair_vec(sp, vecs[k], f1) * upv_inv);
      FieldElement c1 = pair_vec(sp, vecs[k], f2) * upv_inv;
      EVec e = vecs[k] - (c1 * f1).eval() - (c2 * f2).eval();
      if (!pair_vec(sp, e, f1).is_zero() || !pair_vec(sp, e, f2).is_zero())
        throw std::logic_error("normal_basis: hyperbolic elimination failed");
      rest.push_back(e);
    }
    emitted.push_back({blk, {f1, f2}});
    vecs = std::move(rest);
  };

  while (!vecs.empty()) {
    size_t k = vecs.size();
    EMat b(l.dim(), k);
    for (size_t j = 0; j < k; ++j) b.col(j) = vecs[j];
    EMat t = moment_matrix(sp, b);
    int min_diag = kValInf, min_off = kValInf;
    size_t diag_at = 0;
    size_t oi = 0, oj = 0;
    for (size_t i = 0; i < k; ++i) {
      int v = val_E(t(i, i));
      if (v < min_diag) {
        min_diag = v;
        diag_at = i;
      }
      for (size_t j = i + 1; j < k; ++j) {
        int w = val_E(t(i, j));
        if (w < min_off) {
          min_off = w;
          oi = i;
          oj = j;
        }
      }
    }
    if (min_diag >= kValInf && min_off >= kValInf)
      throw std::logic_error("normal_basis: zero block in nondegenerate module");
    if (min_diag <= min_off) {
      peel_1x1(diag_at);
      continue;
    }
    int v = min_off;
    if (v % 2 == 0) {
      // Even minimum attained off-diagonal only: e_i +- e_j has diagonal
      // valuation v for one of the signs.
      bool done = false;
      for (int sgn : {1, -1}) {
        EVec cand = vecs[oi] + (FieldElement(sgn) * vecs[oj]).eval();
        if (val_E(pair_vec(sp, cand, cand)) == v) {
          vecs[oi] = cand;
          peel_1x1(oi);
          done = true;
          break;
        }
      }
      if (!done) throw std::logic_error("normal_basis: even off-diagonal repair failed");
      continue;
    }
    // Odd minimum: hyperbolic block. Try both orientations of each attaining
    // pair, then perturbed partners (rank >= 3 always admits a rational
    // isotropic vector; rank-2 planes can be globally obstructed).
    bool peeled = false;
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < k && !peeled; ++i)
      for (size_t j = i + 1; j < k; ++j)
        if (val_E(t(i, j)) == v) pairs.emplace_back(i, j);
    for (auto [i, j] : pairs) {
      if (peeled) break;
      FieldElement alpha = t(i, j);
      if (auto lam = detail::isotropic_coefficient(alpha, t(i, i).a(), t(j, j).a(), cfg)) {
        peel_2x2(i, j, *lam, v);
        peeled = true;
        break;
      }
      if (auto lam = detail::isotropic_coefficient(conj(alpha), t(j, j).a(), t(i, i).a(), cfg)) {
        peel_2x2(j, i, *lam, v);
        peeled = true;
        break;
      }
    }
    if (!peeled && k >= 3) {
      FieldElement u = make_u(cfg);
      for (auto [i, j] : pairs) {
        if (peeled) break;
        for (size_t m = 0; m < k && !peeled; ++m) {
          if (m == i || m == j) continue;
          for (long c0 = 1; c0 <= 2 * cfg.p && !peeled; ++c0) {
            FieldElement gamma = FieldElement(c0) * u;
            EVec cand = vecs[j] + (gamma * vecs[m]).eval();
            FieldElement alpha = pair_vec(sp, vecs[i], cand);
            if (val_E(alpha) != v) continue;
            FieldElement di = pair_vec(sp, vecs[i], vecs[i]);
            FieldElement dj = pair_vec(sp, cand, cand);
            if (auto lam = detail::isotropic_coefficient(alpha, di.a(), dj.a(), cfg)) {
              vecs[j] = cand;
              peel_2x2(i, j, *lam, v);
              peeled = true;
            }
          }
        }
      }
    }
    if (!peeled)
      throw std::domain_error(
          "normal_basis: hyperbolic plane has no rational isotropic vector in this model");
  }

  std::stable_sort(emitted.begin(), emitted.end(), [](const Emitted& x, const Emitted& y) {
    long ix = x.block.size == 1 ? 2 * x.block.exponent + 1 : 2 * x.block.exponent;
    long iy = y.block.size == 1 ? 2 * y.block.exponent + 1 : 2 * y.block.exponent;
    if (ix != iy) return ix < iy;
    return x.block.size < y.block.size;
  });

  NormalBasis nb;
  nb.basis = EMat(l.dim(), l.rank());
  Eigen::Index col = 0;
  for (const auto& e : emitted) {
    nb.blocks.push_back(e.block);
    for (const auto& v : e.basis_vecs) nb.basis.col(col++) = v;
  }
  // The returned basis must generate L and have an exactly block-diagonal
  // moment matrix; for integral L the block data must reproduce the
  // fundamental invariants.
  HermLattice check(l.space(), nb.basis);
  if (!(check == l)) throw std::logic_error("normal_basis: basis does not generate the lattice");
  EMat t = moment_matrix(sp, nb.basis);
  Eigen::Index at = 0;
  for (const auto& blk : nb.blocks) {
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = at; j < at + blk.size; ++j)
        if (i < at || i >= at + blk.size)
          if (!t(i, j).is_zero()) throw std::logic_error("normal_basis: not block diagonal");
    at += blk.size;
  }
  if (is_integral(l)) {
    std::vector<int> got;
    for (const auto& blk : nb.blocks) {
      if (blk.size == 1)
        got.push_back(static_cast<int>(2 * blk.exponent + 1));
      else {
        got.push_back(static_cast<int>(2 * blk.exponent));
        got.push_back(static_cast<int>(2 * blk.exponent));
      }
    }
    std::sort(got.begin(), got.end());
    if (got != fundamental_invariants(l).a)
      throw std::logic_error("normal_basis: block invariants mismatch");
  }
  return nb;
}

}  // namespace hermlat
