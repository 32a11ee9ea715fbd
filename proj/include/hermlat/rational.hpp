#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <limits>
#include <stdexcept>
#include <string>

namespace hermlat {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

// Sentinel valuation of 0; large enough that min()/sums never overflow.
inline constexpr int kValInf = std::numeric_limits<int>::max() / 8;

inline Int pow_int(const Int& base, long e) {
  if (e < 0) throw std::invalid_argument("pow_int: negative exponent");
  Int r = 1, b = base;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

// p-adic valuation of a rational (kValInf for 0).
inline int val_p(const Rat& x, long p) {
  if (x == 0) return kValInf;
  int v = 0;
  Int n = numerator(x), d = denominator(x);
  while (n % p == 0) {
    n /= p;
    ++v;
  }
  while (d % p == 0) {
    d /= p;
    --v;
  }
  return v;
}

inline Int mod_positive(const Int& a, const Int& m) {
  Int r = a % m;
  if (r < 0) r += m;
  return r;
}

// Inverse of a mod m for gcd(a, m) = 1 (extended Euclid).
inline Int inv_mod(const Int& a, const Int& m) {
  Int r0 = m, r1 = mod_positive(a, m), s0 = 0, s1 = 1;
  while (r1 != 0) {
    Int q = r0 / r1;
    Int r2 = r0 - q * r1;
    Int s2 = s0 - q * s1;
    r0 = r1;
    r1 = r2;
    s0 = s1;
    s1 = s2;
  }
  if (r0 != 1) throw std::invalid_argument("inv_mod: not invertible");
  return mod_positive(s0, m);
}

// Canonical representative of x modulo p^k Z_(p), for x with val_p(x) > -infinity.
// Writes x = a / (p^e * b) with p coprime to b; the class of x mod p^k Z_(p) is
// determined by a * b^{-1} mod p^{k+e}. Returns rep in [0, p^{k+e}) / p^e.
inline Rat reduce_mod_pk(const Rat& x, long p, int k) {
  if (x == 0) return Rat(0);
  Int n = numerator(x), d = denominator(x);
  int e = 0;
  while (d % p == 0) {
    d /= p;
    ++e;
  }
  if (k + e <= 0) return Rat(0);
  Int pk = pow_int(Int(p), k + e);
  Int rep = mod_positive(n * inv_mod(d, pk), pk);
  return Rat(rep, pow_int(Int(p), e));
}

inline std::string rat_to_string(const Rat& x) {
  std::string s = numerator(x).str();
  if (denominator(x) != 1) s += "/" + denominator(x).str();
  return s;
}

inline Rat rat_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rat(Int(s));
    Int num(s.substr(0, slash));
    Int den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rat(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad rational literal: " + s);
  }
}

// Legendre symbol style test: is w a nonzero square mod p (p an odd prime)?
inline bool is_square_mod_p(const Int& w, long p) {
  Int a = mod_positive(w, p);
  if (a == 0) throw std::invalid_argument("is_square_mod_p: w divisible by p");
  // Euler criterion.
  Int r = 1, b = a, e = (Int(p) - 1) / 2;
  while (e != 0) {
    if (e % 2 == 1) r = (r * b) % p;
    b = (b * b) % p;
    e /= 2;
  }
  return r == 1;
}

}  // namespace hermlat
