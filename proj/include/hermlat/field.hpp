#pragma once

// Exact arithmetic in the ramified quadratic extension E = F(u), u^2 = p*eps0,
// realized over the rationals: elements are a + b*u with a, b in Q and the
// Galois involution sends u to -u. The E-valuation is normalized so that
// val(u) = 1, val(p) = 2; it is computed exactly from p-adic valuations of
// the rational coordinates.

#include <ostream>
#include <string>
#include <vector>

#include "hermlat/rational.hpp"

namespace hermlat {

struct FieldConfig {
  long p = 0;     // odd prime (0 = unset sentinel for scalar literals)
  long eps0 = 0;  // unit class of u^2/p

  bool set() const { return p != 0; }

  void validate() const {
    if (p < 3 || p % 2 == 0) throw std::invalid_argument("FieldConfig: p must be an odd prime");
    for (long d = 3; d * d <= p; d += 2)
      if (p % d == 0) throw std::invalid_argument("FieldConfig: p must be an odd prime");
    if (eps0 % p == 0) throw std::invalid_argument("FieldConfig: eps0 must be a unit mod p");
  }

  friend bool operator==(const FieldConfig& x, const FieldConfig& y) {
    return x.p == y.p && x.eps0 == y.eps0;
  }
  friend bool operator!=(const FieldConfig& x, const FieldConfig& y) { return !(x == y); }
};

namespace detail {
inline const FieldConfig& merge(const FieldConfig& x, const FieldConfig& y) {
  if (!x.set()) return y;
  if (y.set() && !(x == y)) throw std::invalid_argument("FieldElement: mixed field configs");
  return x;
}
}  // namespace detail

class FieldElement {
 public:
  FieldElement() = default;
  FieldElement(int a) : a_(a) {}  // NOLINT: Eigen needs implicit literal conversion
  FieldElement(long a) : a_(a) {}
  FieldElement(const Rat& a) : a_(a) {}
  FieldElement(Rat a, Rat b, FieldConfig cfg) : a_(std::move(a)), b_(std::move(b)), cfg_(cfg) {
    if (!cfg_.set() && b_ != 0) throw std::invalid_argument("FieldElement: u-part needs a config");
  }

  const Rat& a() const { return a_; }
  const Rat& b() const { return b_; }
  const FieldConfig& config() const { return cfg_; }
  bool is_zero() const { return a_ == 0 && b_ == 0; }
  bool is_rational() const { return b_ == 0; }

  friend FieldElement operator+(const FieldElement& x, const FieldElement& y) {
    return FieldElement(x.a_ + y.a_, x.b_ + y.b_, detail::merge(x.cfg_, y.cfg_));
  }
  friend FieldElement operator-(const FieldElement& x, const FieldElement& y) {
    return FieldElement(x.a_ - y.a_, x.b_ - y.b_, detail::merge(x.cfg_, y.cfg_));
  }
  friend FieldElement operator-(const FieldElement& x) { return FieldElement(-x.a_, -x.b_, x.cfg_); }
  friend FieldElement operator*(const FieldElement& x, const FieldElement& y) {
    const FieldConfig& cfg = detail::merge(x.cfg_, y.cfg_);
    Rat a = x.a_ * y.a_;
    if (x.b_ != 0 && y.b_ != 0) {
      if (!cfg.set()) throw std::invalid_argument("FieldElement: u*u needs a config");
      a += Rat(cfg.p) * Rat(cfg.eps0) * x.b_ * y.b_;
    }
    return FieldElement(a, x.a_ * y.b_ + x.b_ * y.a_, cfg);
  }
  friend FieldElement operator/(const FieldElement& x, const FieldElement& y) { return x * inv(y); }

  FieldElement& operator+=(const FieldElement& y) { return *this = *this + y; }
  FieldElement& operator-=(const FieldElement& y) { return *this = *this - y; }
  FieldElement& operator*=(const FieldElement& y) { return *this = *this * y; }
  FieldElement& operator/=(const FieldElement& y) { return *this = *this / y; }

  friend bool operator==(const FieldElement& x, const FieldElement& y) {
    return x.a_ == y.a_ && x.b_ == y.b_;
  }
  friend bool operator!=(const FieldElement& x, const FieldElement& y) { return !(x == y); }

  // Galois conjugation: a + b*u -> a - b*u. Involution fixing F.
  friend FieldElement conj(const FieldElement& x) { return FieldElement(x.a_, -x.b_, x.cfg_); }

  friend FieldElement inv(const FieldElement& x) {
    if (x.is_zero()) throw std::domain_error("FieldElement: division by zero");
    if (x.b_ == 0) return FieldElement(1 / x.a_, 0, x.cfg_);
    Rat n = norm(x);
    return FieldElement(x.a_ / n, -x.b_ / n, x.cfg_);
  }

  // Nm_{E/F}(a + b*u) = a^2 - p*eps0*b^2.
  friend Rat norm(const FieldElement& x) {
    Rat n = x.a_ * x.a_;
    if (x.b_ != 0) {
      if (!x.cfg_.set()) throw std::invalid_argument("FieldElement: norm needs a config");
      n -= Rat(x.cfg_.p) * Rat(x.cfg_.eps0) * x.b_ * x.b_;
    }
    return n;
  }
  friend Rat trace(const FieldElement& x) { return 2 * x.a_; }

  friend std::ostream& operator<<(std::ostream& os, const FieldElement& x) {
    os << rat_to_string(x.a_);
    if (x.b_ != 0) os << (x.b_ > 0 ? "+" : "") << rat_to_string(x.b_) << "u";
    return os;
  }

 private:
  Rat a_, b_;
  FieldConfig cfg_;
};

// Normalized E-valuation: val(a + b*u) = min(2 val_p(a), 2 val_p(b) + 1).
// The two candidates have opposite parity, so no tie occurs. val(0) = kValInf.
inline int val_E(const FieldElement& x) {
  if (x.is_zero()) return kValInf;
  if (!x.config().set()) throw std::invalid_argument("val_E: element has no config");
  long p = x.config().p;
  int va = x.a() == 0 ? kValInf : 2 * val_p(x.a(), p);
  int vb = x.b() == 0 ? kValInf : 2 * val_p(x.b(), p) + 1;
  return va < vb ? va : vb;
}

inline FieldElement make_u(const FieldConfig& cfg) { return FieldElement(0, 1, cfg); }

// u^k for any integer k: u^{2j} = (p eps0)^j, u^{2j+1} = (p eps0)^j u.
inline FieldElement u_pow(const FieldConfig& cfg, long k) {
  long j = (k >= 0 ? k / 2 : (k - 1) / 2);  // floor(k/2)
  Rat pe = Rat(cfg.p) * Rat(cfg.eps0);
  Rat even = 1;
  Int pj = pow_int(numerator(pe), j >= 0 ? j : -j);
  even = j >= 0 ? Rat(pj) : Rat(1, pj);
  if (k % 2 == 0) return FieldElement(even, 0, cfg);
  return FieldElement(0, even, cfg);
}

// Canonical representative of x mod u^k O_E: reduce a mod p^ceil(k/2) and
// b mod p^ceil((k-1)/2). Valid for any x (components reduced p-adically).
inline FieldElement reduce_mod_upow(const FieldElement& x, int k) {
  if (!x.config().set()) {
    if (x.is_zero()) return x;
    throw std::invalid_argument("reduce_mod_upow: element has no config");
  }
  long p = x.config().p;
  int ka = (k >= 0) ? (k + 1) / 2 : -((-k) / 2);      // ceil(k/2)
  int kb = (k - 1 >= 0) ? k / 2 : -((-(k - 1)) / 2);  // ceil((k-1)/2)
  return FieldElement(reduce_mod_pk(x.a(), p, ka), reduce_mod_pk(x.b(), p, kb), x.config());
}

// Membership in Nm(E^x): write t = p^k w with w a p-unit; for k even test
// whether w is a square mod p, for k odd whether w / (-eps0) is.
inline bool is_norm(const Rat& t, const FieldConfig& cfg) {
  if (t == 0) throw std::invalid_argument("is_norm: t must be nonzero");
  int k = val_p(t, cfg.p);
  Rat w = t / (k >= 0 ? Rat(pow_int(Int(cfg.p), k)) : Rat(1, pow_int(Int(cfg.p), -k)));
  if (k % 2 != 0) w /= Rat(-cfg.eps0);
  // w is a p-unit rational; test its residue.
  Int num = numerator(w), den = denominator(w);
  Int res = mod_positive(num * inv_mod(den, Int(cfg.p)), Int(cfg.p));
  return is_square_mod_p(res, cfg.p);
}

// Smallest positive quadratic nonresidue mod p.
inline long nonresidue_mod_p(long p) {
  for (long w = 2; w < p; ++w)
    if (!is_square_mod_p(Int(w), p)) return w;
  throw std::logic_error("nonresidue_mod_p: none found");
}

}  // namespace hermlat

// Minimal Eigen glue for the exact scalar: only storage, +, *, - are used.
#include <Eigen/Core>

namespace Eigen {
template <>
struct NumTraits<hermlat::FieldElement> : GenericNumTraits<hermlat::FieldElement> {
  typedef hermlat::FieldElement Real;
  typedef hermlat::FieldElement NonInteger;
  typedef hermlat::FieldElement Nested;
  typedef long Literal;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 8,
    AddCost = 40,
    MulCost = 80
  };
  static inline Real epsilon() { return Real(0); }
  static inline Real dummy_precision() { return Real(0); }
  static inline int digits10() { return 0; }
};
}  // namespace Eigen
