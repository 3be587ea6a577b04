#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <cstdint>
#include <string>

namespace tphi {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& q) { return q.template convert_to<double>(); }

inline Rat rat_pow(const Rat& base, long e) {
  if (e == 0) return Rat(1);
  Rat b = e > 0 ? base : Rat(1) / base;
  long n = e > 0 ? e : -e;
  Rat r(1);
  while (n) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

inline Int factorial(unsigned n) {
  Int r = 1;
  for (unsigned k = 2; k <= n; ++k) r *= k;
  return r;
}

inline Int binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  Int r = 1;
  for (unsigned j = 0; j < k; ++j) { r *= (n - j); r /= (j + 1); }
  return r;
}

// Complex number over the rationals. Coefficient field of the whole algebra layer.
struct RC {
  Rat re, im;

  RC() : re(0), im(0) {}
  RC(long r) : re(r), im(0) {}
  RC(const Rat& r) : re(r), im(0) {}
  RC(Rat r, Rat i) : re(std::move(r)), im(std::move(i)) {}

  bool is_zero() const { return re == 0 && im == 0; }
  RC conj() const { return RC(re, -im); }
  Rat abs2() const { return re * re + im * im; }

  RC operator-() const { return RC(-re, -im); }
  RC& operator+=(const RC& o) { re += o.re; im += o.im; return *this; }
  RC& operator-=(const RC& o) { re -= o.re; im -= o.im; return *this; }
  RC& operator*=(const RC& o) {
    Rat r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  friend RC operator+(RC a, const RC& b) { return a += b; }
  friend RC operator-(RC a, const RC& b) { return a -= b; }
  friend RC operator*(RC a, const RC& b) { return a *= b; }
  friend RC operator*(const Rat& s, RC a) { a.re *= s; a.im *= s; return a; }
  friend RC operator/(RC a, const Rat& s) { a.re /= s; a.im /= s; return a; }
  friend RC operator/(const RC& a, const RC& b) {
    Rat n = b.abs2();
    RC num = a * b.conj();
    return RC(num.re / n, num.im / n);
  }
  friend bool operator==(const RC& a, const RC& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const RC& a, const RC& b) { return !(a == b); }

  std::complex<double> to_complex() const { return {to_double(re), to_double(im)}; }
};

inline std::string rat_str(const Rat& q) {
  std::string s = numerator(q).str();
  if (denominator(q) != 1) s += "/" + denominator(q).str();
  return s;
}

inline Rat rat_parse(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rat(Int(s));
  return Rat(Int(s.substr(0, slash)), Int(s.substr(slash + 1)));
}

// Exact rational from a double (every finite double is a binary fraction).
inline Rat rat_from_double(double x) {
  Rat r(x);
  return r;
}

}  // namespace tphi
