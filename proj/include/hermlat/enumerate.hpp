#pragma once

// Finite enumerations the density formulas sum over: integral overlattices
// (minimal-extension BFS through the u-socle), vertex overlattices, the
// corank-one parametrization (slice, delta, dual coset), special lattices,
// the S region, and the valuation-decreasing rewrite of pairs.

#include <deque>
#include <optional>
#include <set>

#include "hermlat/lattice.hpp"

namespace hermlat {

namespace detail {

// Representatives of the lines of F_p^m (first nonzero coordinate = 1).
inline std::vector<std::vector<long>> line_reps(long p, int m) {
  std::vector<std::vector<long>> reps;
  std::vector<long> c(m, 0);
  while (true) {
    int i = m - 1;
    while (i >= 0 && c[i] == p - 1) c[i--] = 0;
    if (i < 0) break;
    ++c[i];
    int lead = 0;
    while (lead < m && c[lead] == 0) ++lead;
    if (lead < m && c[lead] == 1) reps.push_back(c);
  }
  return reps;
}

// Deterministic ordering key: (val, invariants, canonical basis).
inline std::tuple<int, std::vector<int>, std::string> order_key(const HermLattice& l) {
  if (is_integral(l)) {
    auto inv = invariants_via_quotient(l);
    return {inv.val, inv.a, lattice_key(l)};
  }
  return {val_extended(l), invariants_any(l).a, lattice_key(l)};
}

template <class T, class Proj>
void sort_by_order_key(std::vector<T>& items, Proj proj) {
  std::vector<std::pair<std::tuple<int, std::vector<int>, std::string>, size_t>> keys;
  keys.reserve(items.size());
  for (size_t i = 0; i < items.size(); ++i) keys.emplace_back(order_key(proj(items[i])), i);
  std::sort(keys.begin(), keys.end());
  std::vector<T> sorted;
  sorted.reserve(items.size());
  for (const auto& k : keys) sorted.push_back(std::move(items[k.second]));
  items = std::move(sorted);
}

}  // namespace detail

// All integral lattices L' with L <= L' <= L'^dual inside span(L). A bad
// pairing of L persists in every overlattice, so a non-integral L has none;
// every intermediate lattice below an integral overlattice is integral, so
// the u-socle BFS through integral nodes is exhaustive.
inline std::vector<HermLattice> integral_overlattices_any(const HermLattice& l) {
  if (!is_integral(l)) return {};
  const HermSpace& sp = l.ambient();
  long p = sp.cfg.p;
  int m = l.rank();
  FieldElement uinv = inv(make_u(sp.cfg));
  std::vector<HermLattice> out{l};
  std::set<std::string> seen{lattice_key(l)};
  std::deque<HermLattice> queue{l};
  auto lines = detail::line_reps(p, m);
  while (!queue.empty()) {
    HermLattice cur = queue.front();
    queue.pop_front();
    for (const auto& c : lines) {
      EVec g = EVec::Zero(l.dim());
      for (int i = 0; i < m; ++i)
        if (c[i]) g += (FieldElement(c[i]) * cur.canonical().col(i)).eval();
      g = (uinv * g).eval();
      // cur is integral: the extension is integral iff the new generator
      // pairs integrally with cur and itself
      bool ok = val_E(pair_vec(sp, g, g)) >= -1;
      for (int i = 0; ok && i < m; ++i)
        ok = val_E(pair_vec(sp, g, cur.canonical().col(i))) >= -1;
      if (!ok) continue;
      HermLattice ext = add_vector(cur, g);
      std::string key = lattice_key(ext);
      if (!seen.insert(key).second) continue;
      out.push_back(ext);
      queue.push_back(ext);
    }
  }
  detail::sort_by_order_key(out, [](const HermLattice& x) -> const HermLattice& { return x; });
  return out;
}

inline std::vector<HermLattice> integral_overlattices(const HermLattice& l) {
  if (!is_integral(l)) throw std::invalid_argument("integral_overlattices: lattice not integral");
  return integral_overlattices_any(l);
}

// Sublist of integral overlattices with a_m <= 1 (vertex lattices).
inline std::vector<HermLattice> vertex_overlattices(const HermLattice& l) {
  std::vector<HermLattice> out;
  for (const auto& m : integral_overlattices(l))
    if (is_vertex(m)) out.push_back(m);
  return out;
}

struct Corank1Extension {
  HermLattice lattice;  // full rank, integral, contains the flat lattice
  HermLattice slice;    // lattice cap V_{L-flat}
  int delta = 0;        // projection to the perp line is u^delta (perp)^int
};

// Generator f of (V_{L-flat}^perp)^int and the valuation of (f, f) (0 or 1).
inline std::pair<EVec, int> perp_int_generator(const HermLattice& flat) {
  EMat perp = perp_subspace(flat.ambient(), flat.canonical());
  if (perp.cols() != 1) throw std::invalid_argument("perp_int_generator: perp line not 1-dim");
  EVec e = perp.col(0);
  int ve = val_E(pair_vec(flat.ambient(), e, e));
  if (ve >= kValInf) throw std::invalid_argument("perp_int_generator: isotropic perp line");
  // smallest d with 2d + ve >= 0
  int d = (ve >= 0) ? -(ve / 2) : ((-ve) + 1) / 2;
  EVec f = (u_pow(flat.ambient().cfg, d) * e).eval();
  int vf = val_E(pair_vec(flat.ambient(), f, f));
  if (vf < 0 || vf > 1) throw std::logic_error("perp_int_generator: bad normalization");
  return {f, vf};
}

// The complete list of full-rank integral lattices containing the integral
// corank-one lattice, truncated at delta <= delta_cap (default: the largest
// fundamental invariant of the flat lattice, the constancy threshold; every
// per-delta tail sum beyond it vanishes). Non-integral input: empty list.
inline std::vector<Corank1Extension> corank1_integral_lattices(
    const HermLattice& flat, std::optional<int> delta_cap = std::nullopt) {
  const HermSpace& sp = flat.ambient();
  if (sp.dim() % 2 != 0 || !is_nonsplit(sp))
    throw std::invalid_argument("corank1_integral_lattices: ambient must be even and nonsplit");
  if (flat.rank() != sp.dim() - 1)
    throw std::invalid_argument("corank1_integral_lattices: flat lattice must have corank one");
  if (!is_integral(flat)) return {};

  auto inv_flat = fundamental_invariants(flat);
  int cap = delta_cap.value_or(std::max(inv_flat.a.empty() ? 0 : inv_flat.a.back(), 0));
  auto [f, vf] = perp_int_generator(flat);
  Rat ff = pair_vec(sp, f, f).a();
  long p = sp.cfg.p;
  Rat pe = Rat(sp.cfg.p) * Rat(sp.cfg.eps0);

  std::vector<Corank1Extension> out;
  for (const auto& slice : integral_overlattices(flat)) {
    auto inv_s = fundamental_invariants(slice);
    int amax_s = inv_s.a.empty() ? 0 : inv_s.a.back();
    int delta_min = -amax_s;
    auto q = quotient_structure(dual(slice), slice);
    auto reps = coset_reps(sp, q);
    for (int delta = delta_min - 1; delta <= cap; ++delta) {
      // diagonal of the new vector: (w,w) + (-1)^delta (p eps0)^delta (f,f)
      Rat scale = (delta % 2 != 0 ? Rat(-1) : Rat(1));
      Rat peD = delta >= 0 ? Rat(pow_int(numerator(pe), delta))
                           : Rat(1, pow_int(numerator(pe), -delta));
      Rat uterm = scale * peD * ff;
      bool found_below = false;
      for (const auto& w : reps) {
        Rat ww = pair_vec(sp, w, w).a();
        if (val_p(ww + uterm, p) < 0) continue;  // only non-automatic condition
        if (delta < delta_min) {
          found_below = true;
          break;
        }
        // the cross pairings (v, slice) lie in u^{-1}O_E automatically
        // (w in the dual of the slice, u^delta f perpendicular), so the
        // diagonal test above is the whole integrality condition
        EVec v = w + (u_pow(sp.cfg, delta) * f).eval();
        EMat b(sp.dim(), flat.rank() + 1);
        b.leftCols(flat.rank()) = slice.canonical();
        b.col(flat.rank()) = v;
        out.push_back({HermLattice(flat.space(), hnf_canonical(b)), slice, delta});
      }
      if (delta < delta_min && found_below)
        throw std::logic_error("corank1: delta_min bound not tight");
    }
  }
  detail::sort_by_order_key(out,
                            [](const Corank1Extension& e) -> const HermLattice& { return e.lattice; });
  return out;
}

struct SpecialData {
  bool special = false;
  std::optional<std::pair<HermLattice, HermLattice>> plus_minus;
};

// Overlattices with fundamental invariants (a_1..a_{n-2}, a_{n-1}-1, a_{n-1}-1):
// their count is 0 or 2 when a_{n-2} < a_{n-1}; the two lattices, when present,
// satisfy the slice, valuation and orthogonal-splitting properties.
inline SpecialData special_data(const HermLattice& flat) {
  const HermSpace& sp = flat.ambient();
  if (flat.rank() != sp.dim() - 1 || flat.rank() < 3)
    throw std::invalid_argument("special_data: flat lattice must have corank one and rank >= 3");
  if (!is_integral(flat)) return {};
  auto inv = fundamental_invariants(flat);
  int n1 = inv.a.back(), n2 = inv.a[inv.a.size() - 2];
  if (n2 >= n1) return {};
  std::vector<int> target(inv.a.begin(), inv.a.end() - 1);
  target.push_back(n1 - 1);
  target.push_back(n1 - 1);
  std::sort(target.begin(), target.end());

  // Any overlattice with the target invariants is flat + <x> with
  // x = u^{-1} alpha e_top + u^delta f: the normal-basis coefficients below
  // the top block vanish, the top one is a unit multiple of u^{-1}, and the
  // perpendicular part has (x_n, x_n) of valuation a_{n-1} - 3. Only the
  // residue of alpha mod u matters for the lattice.
  auto nb0 = normal_basis(flat);
  EVec etop;
  {
    int at = 0;
    bool found = false;
    for (const auto& blk : nb0.blocks) {
      if (blk.size == 1 && 2 * blk.exponent + 1 == n1) {
        etop = nb0.basis.col(at);
        found = true;
      }
      at += blk.size;
    }
    if (!found) return {};  // top invariant carried by a 2x2 block: even, cannot match odd a_{n-1}
  }
  auto [f, vf] = perp_int_generator(flat);
  std::vector<HermLattice> hits;
  if ((n1 - 3 - vf) % 2 == 0) {
    int delta = (n1 - 3 - vf) / 2;
    FieldElement base = inv(make_u(sp.cfg));
    for (long alpha = 1; alpha < sp.cfg.p; ++alpha) {
      EVec x = (FieldElement(alpha) * base * etop).eval() + (u_pow(sp.cfg, delta) * f).eval();
      HermLattice cand = add_vector(flat, x);
      if (cand.rank() != sp.dim()) continue;
      if (!is_integral(cand)) continue;
      if (invariants_via_quotient(cand).a != target) continue;
      if (std::find(hits.begin(), hits.end(), cand) == hits.end()) hits.push_back(cand);
    }
  }
  for (const auto& h : hits)
    if (!(intersect_span(h, flat.canonical()) == flat))
      throw std::logic_error("special_data: slice property fails");
  if (hits.empty()) return {};
  if (hits.size() != 2) throw std::logic_error("special_data: count is neither 0 nor 2");
  if (n1 < 3) throw std::logic_error("special_data: a_{n-1} >= 3 fails");

  // Orthogonal decompositions of Lemma-style shape: split off the unique
  // top 1x1 block of the flat lattice and check both sides.
  int top = -1, at = 0;
  std::vector<int> cols_left;
  for (size_t i = 0; i < nb0.blocks.size(); ++i) {
    long invariant =
        nb0.blocks[i].size == 1 ? 2 * nb0.blocks[i].exponent + 1 : 2 * nb0.blocks[i].exponent;
    if (invariant == n1 && nb0.blocks[i].size == 1) top = at;
    else
      for (int k = 0; k < nb0.blocks[i].size; ++k) cols_left.push_back(at + k);
    at += nb0.blocks[i].size;
  }
  if (top < 0) throw std::logic_error("special_data: no 1x1 top block");
  EMat bleft(sp.gram.rows(), static_cast<Eigen::Index>(cols_left.size()));
  for (size_t j = 0; j < cols_left.size(); ++j) bleft.col(j) = nb0.basis.col(cols_left[j]);
  HermLattice lleft(flat.space(), bleft);
  std::vector<int> left_inv(inv.a.begin(), inv.a.end() - 1);
  if (fundamental_invariants(lleft).a != left_inv)
    throw std::logic_error("special_data: left factor invariants");
  EMat perp_left = perp_subspace(sp, bleft);
  HermLattice lright = intersect_span(flat, perp_left);
  if (fundamental_invariants(lright).a != std::vector<int>{n1})
    throw std::logic_error("special_data: right factor invariants");
  for (const auto& h : hits) {
    if (!contains(h, lleft)) throw std::logic_error("special_data: decomposition fails");
    HermLattice hright = intersect_span(h, perp_left);
    if (fundamental_invariants(hright).a != std::vector<int>{n1 - 1, n1 - 1})
      throw std::logic_error("special_data: right factor of overlattice");
    if (!(sum(lleft, hright) == h)) throw std::logic_error("special_data: not an orthogonal sum");
  }

  detail::sort_by_order_key(hits, [](const HermLattice& x) -> const HermLattice& { return x; });
  return {true, std::make_pair(hits[0], hits[1])};
}

// Orthogonal projection of x onto span(flat) and the perpendicular line.
inline std::pair<EVec, EVec> split_along(const HermLattice& flat, const EVec& x) {
  const HermSpace& sp = flat.ambient();
  EMat perp = perp_subspace(sp, flat.canonical());
  EMat joint(sp.gram.rows(), flat.rank() + perp.cols());
  joint.leftCols(flat.rank()) = flat.canonical();
  joint.rightCols(perp.cols()) = perp;
  auto c = solve_in_span(joint, with_config(x, sp.cfg));
  if (!c) throw std::logic_error("split_along: x outside the ambient space");
  EVec xv = EVec::Zero(sp.gram.rows()), xp = EVec::Zero(sp.gram.rows());
  xv = with_config(xv, sp.cfg);
  xp = with_config(xp, sp.cfg);
  for (int i = 0; i < flat.rank(); ++i) xv += ((*c)(i)*flat.canonical().col(i)).eval();
  for (Eigen::Index i = 0; i < perp.cols(); ++i)
    xp += ((*c)(flat.rank() + i) * perp.col(i)).eval();
  return {xv, xp};
}

// Membership in S_{L-flat}: the union of the two special overlattices, or
// L-flat + (perp)^int when the flat lattice is not special.
inline bool s_region_membership(const HermLattice& flat, const EVec& x) {
  if (!is_integral(flat)) throw std::invalid_argument("s_region_membership: flat not integral");
  if (flat.rank() >= 3 && flat.rank() == flat.dim() - 1) {
    SpecialData sd = special_data(flat);
    if (sd.special)
      return contains_vector(sd.plus_minus->first, x) || contains_vector(sd.plus_minus->second, x);
  }
  auto [xv, xp] = split_along(flat, x);
  if (!contains_vector(flat, xv)) return false;
  return val_E(pair_vec(flat.ambient(), xp, xp)) >= 0;  // val(0) = +inf included
}

struct ReducedPair {
  HermLattice flat;
  EVec x;
};

inline int val_or_minus_one(const HermLattice& l) {
  return is_integral(l) ? fundamental_invariants(l).val : -1;
}

// Rewrite L-flat + <x> = L-flat' + <x'> with val(L-flat') < val(L-flat), for
// x outside span(L-flat) and S_{L-flat}. Construction: normal basis of the
// full-rank sum; drop a largest-invariant 1x1 block, or split a largest 2x2
// block {f, g} into the anisotropic f + u g and x' = g.
inline ReducedPair reduce_pair(const HermLattice& flat, const EVec& x_in) {
  const HermSpace& sp = flat.ambient();
  EVec x = with_config(x_in, sp.cfg);
  if (flat.rank() != sp.dim() - 1)
    throw std::invalid_argument("reduce_pair: precondition failed: flat lattice must have corank one");
  if (!is_integral(flat))
    throw std::invalid_argument("reduce_pair: precondition failed: flat lattice not integral");
  if (in_span(flat, x))
    throw std::invalid_argument("reduce_pair: precondition failed: x in span(L-flat)");
  if (s_region_membership(flat, x))
    throw std::invalid_argument("reduce_pair: precondition failed: x in S region");

  HermLattice l = add_vector(flat, x);
  auto nb = normal_basis(l);
  // blocks are sorted by invariant; the last block carries the maximum
  const NormalBlock& top = nb.blocks.back();
  int at = 0;
  for (size_t i = 0; i + 1 < nb.blocks.size(); ++i) at += nb.blocks[i].size;

  EVec xprime;
  EMat bflat;
  if (top.size == 1) {
    xprime = nb.basis.col(at);
    bflat = EMat(l.dim(), l.rank() - 1);
    for (int j = 0; j < at; ++j) bflat.col(j) = nb.basis.col(j);
  } else {
    EVec f = nb.basis.col(at), g = nb.basis.col(at + 1);
    xprime = g;
    bflat = EMat(l.dim(), l.rank() - 1);
    for (int j = 0; j < at; ++j) bflat.col(j) = nb.basis.col(j);
    bflat.col(at) = f + (make_u(sp.cfg) * g).eval();
  }
  HermLattice newflat(flat.space(), bflat);

  if (!(add_vector(newflat, xprime) == l))
    throw std::logic_error("reduce_pair: rewrite does not preserve the lattice");
  if (val_or_minus_one(newflat) >= val_or_minus_one(flat))
    throw std::logic_error("reduce_pair: valuation did not decrease");
  return {newflat, xprime};
}

}  // namespace hermlat
