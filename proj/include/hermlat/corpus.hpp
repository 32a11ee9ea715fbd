#pragma once

// Seeded deterministic corpus generation: ambient spaces, random integral
// lattices (orthogonal profiles scrambled by random GL_n(O_E)), corank-one
// sublattices and test vectors. Everything is reproducible from the seed.

#include <cstdint>

#include "hermlat/lattice.hpp"

namespace hermlat {

// splitmix64: deterministic across platforms, unlike std:: distributions.
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  uint64_t below(uint64_t n) { return n ? next() % n : 0; }
  long range(long lo, long hi) { return lo + static_cast<long>(below(hi - lo + 1)); }
};

inline SpacePtr make_space_diag(long p, long eps0, const std::vector<Rat>& diag) {
  Eigen::Index n = static_cast<Eigen::Index>(diag.size());
  EMat g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = FieldElement(i == j ? diag[i] : Rat(0));
  return make_space(p, eps0, g);
}

// Nonsplit ambient of even dimension: diag(1, ..., 1, beta) with beta chosen
// so that (-1)^{n/2} det is not a norm.
inline SpacePtr make_space_nonsplit(long p, long eps0, int n) {
  if (n % 2 != 0) throw std::invalid_argument("make_space_nonsplit: odd dimension");
  for (long beta : {1L, nonresidue_mod_p(p)}) {
    std::vector<Rat> d(n, Rat(1));
    d.back() = Rat(beta);
    SpacePtr sp = make_space_diag(p, eps0, d);
    if (is_nonsplit(*sp)) return sp;
  }
  throw std::logic_error("make_space_nonsplit: unreachable");
}

// Ambient H^{+s}: the standard hyperbolic (split, self-dual) space.
inline SpacePtr make_space_hyperbolic(long p, long eps0, int s) {
  FieldConfig cfg{p, eps0};
  EMat g(2 * s, 2 * s);
  for (Eigen::Index i = 0; i < 2 * s; ++i)
    for (Eigen::Index j = 0; j < 2 * s; ++j) g(i, j) = FieldElement(0);
  FieldElement ui = inv(make_u(cfg));
  for (int k = 0; k < s; ++k) {
    g(2 * k, 2 * k + 1) = ui;
    g(2 * k + 1, 2 * k) = -ui;
  }
  return make_space(p, eps0, g);
}

inline FieldElement random_unit(const FieldConfig& cfg, Rng& rng) {
  long a = rng.range(1, cfg.p - 1);
  long b = rng.range(-2, 2);
  return FieldElement(Rat(a), Rat(b), cfg);
}

inline FieldElement random_small(const FieldConfig& cfg, Rng& rng) {
  return FieldElement(Rat(rng.range(-2, 2)), Rat(rng.range(-2, 2)), cfg);
}

// Random element of GL_n(O_E): permutations, unit scalings, shears.
inline EMat random_unimodular(const FieldConfig& cfg, int n, Rng& rng, int steps = 12) {
  EMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = FieldElement(Rat(i == j ? 1 : 0), Rat(0), cfg);
  for (int s = 0; s < steps; ++s) {
    int kind = static_cast<int>(rng.below(3));
    int i = static_cast<int>(rng.below(n));
    int j = static_cast<int>(rng.below(n));
    if (kind == 0 && i != j) {
      m.col(i).swap(m.col(j));
    } else if (kind == 1) {
      m.col(i) *= random_unit(cfg, rng);
    } else if (i != j) {
      m.col(i) += (random_small(cfg, rng) * m.col(j)).eval();
    }
  }
  return m;
}

// Random integral lattice: u^{b_i}-scaled standard basis, basis-scrambled.
// Fundamental invariants are the sorted (2 b_i + 1 + val of the diagonal).
inline HermLattice random_integral_lattice(const SpacePtr& sp, Rng& rng, int max_val) {
  int n = sp->dim();
  for (int attempt = 0; attempt < 200; ++attempt) {
    EMat b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = FieldElement(0);
    for (int i = 0; i < n; ++i) b(i, i) = u_pow(sp->cfg, rng.range(0, std::max(0, (max_val - n) / 2)));
    HermLattice l(sp, b * random_unimodular(sp->cfg, n, rng));
    if (!is_integral(l)) continue;
    if (fundamental_invariants(l).val <= max_val) return l;
  }
  throw std::logic_error("random_integral_lattice: no draw within bounds");
}

// Random integral corank-one sublattice: L cap w-perp for a random primitive
// anisotropic w in a random full-rank integral lattice.
inline HermLattice random_corank_one(const SpacePtr& sp, Rng& rng, int max_val) {
  int n = sp->dim();
  for (int attempt = 0; attempt < 500; ++attempt) {
    HermLattice l = random_integral_lattice(sp, rng, std::max(n, max_val - 2));
    EVec w = EVec::Zero(n);
    bool nonzero = false;
    for (int i = 0; i < n; ++i) {
      w(i) = random_small(sp->cfg, rng);
      nonzero = nonzero || !w(i).is_zero();
    }
    if (!nonzero) continue;
    EVec wl = l.canonical() * w;
    if (pair_vec(*sp, wl, wl).is_zero()) continue;
    EMat perp = perp_subspace(*sp, wl);
    HermLattice flat = intersect_span(l, perp);
    if (flat.rank() != n - 1) continue;
    if (!is_integral(flat)) continue;
    if (fundamental_invariants(flat).val > max_val) continue;
    return flat;
  }
  throw std::logic_error("random_corank_one: no draw within bounds");
}

}  // namespace hermlat
