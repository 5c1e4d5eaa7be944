#include "choreo/rational.hpp"

#include <stdexcept>

namespace choreo {

std::string rat_str(const Rat& r) {
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  if (d == 1) return n.str();
  return n.str() + "/" + d.str();
}

std::string rat_decimal_str(const Rat& r) {
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  if (d == 1) return n.str();
  // Try to scale the denominator to a power of ten.
  Int dd = d;
  int twos = 0, fives = 0;
  while (dd % 2 == 0) { dd /= 2; ++twos; }
  while (dd % 5 == 0) { dd /= 5; ++fives; }
  if (dd != 1) return rat_str(r);
  int digits = twos > fives ? twos : fives;
  Int scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  Int scaled = n * (scale / d);
  bool neg = scaled < 0;
  Int a = neg ? Int(-scaled) : scaled;
  std::string s = a.str();
  while ((int)s.size() <= digits) s.insert(s.begin(), '0');
  s.insert(s.size() - digits, ".");
  return (neg ? "-" : "") + s;
}

std::optional<Rat> rat_from_literal(const std::string& s) {
  if (s.empty()) return std::nullopt;
  size_t i = 0;
  bool neg = false;
  if (s[i] == '-') { neg = true; ++i; }
  std::string ip, fp;
  while (i < s.size() && isdigit((unsigned char)s[i])) ip += s[i++];
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && isdigit((unsigned char)s[i])) fp += s[i++];
  }
  if (i != s.size() || (ip.empty() && fp.empty())) return std::nullopt;
  Int num = ip.empty() ? Int(0) : Int(ip);
  Int den = 1;
  for (char c : fp) {
    num = num * 10 + (c - '0');
    den *= 10;
  }
  Rat r(num, den);
  if (neg) r = -r;
  return r;
}

Int isqrt_floor(const Int& n) {
  if (n < 0) throw std::invalid_argument("isqrt of negative");
  if (n == 0) return 0;
  Int x = Int(1) << (unsigned)((boost::multiprecision::msb(n) / 2) + 1);
  for (;;) {
    Int y = (x + n / x) / 2;
    if (y >= x) break;
    x = y;
  }
  while (x * x > n) --x;
  while ((x + 1) * (x + 1) <= n) ++x;
  return x;
}

std::optional<Rat> rat_sqrt_exact(const Rat& r) {
  if (r < 0) return std::nullopt;
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  Int sn = isqrt_floor(n), sd = isqrt_floor(d);
  if (sn * sn == n && sd * sd == d) return Rat(sn, sd);
  return std::nullopt;
}

void rat_sqrt_bounds(const Rat& r, unsigned prec_bits, Rat& lo, Rat& hi) {
  if (r < 0) throw std::invalid_argument("sqrt of negative");
  if (auto ex = rat_sqrt_exact(r)) {
    lo = hi = *ex;
    return;
  }
  // sqrt(n/d) = sqrt(n*d)/d; scale by 2^prec_bits for precision.
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  Int scale = Int(1) << prec_bits;
  Int s = isqrt_floor(n * d * scale * scale);
  lo = Rat(s, d * scale);
  hi = Rat(s + 1, d * scale);
}

Int rat_ceil(const Rat& r) {
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  Int q = n / d;
  if (q * d < n) ++q;
  return q;
}

Int rat_floor(const Rat& r) {
  Int n = boost::multiprecision::numerator(r);
  Int d = boost::multiprecision::denominator(r);
  Int q = n / d;
  if (q * d > n) --q;
  return q;
}

}  // namespace choreo
