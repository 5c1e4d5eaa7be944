#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <string>

namespace choreo {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline Rat make_rat(long n, long d = 1) { return Rat(Int(n), Int(d)); }

// Renders without trailing noise: "3", "-7/2".
std::string rat_str(const Rat& r);

// Decimal string for reports: exact when the denominator is 2^a*5^b,
// otherwise falls back to "n/d".
std::string rat_decimal_str(const Rat& r);

// Parses an integer or decimal literal ("3", "0.25") into an exact rational.
std::optional<Rat> rat_from_literal(const std::string& s);

Int isqrt_floor(const Int& n);  // n >= 0

// Exact square root if r is a square of a rational.
std::optional<Rat> rat_sqrt_exact(const Rat& r);

// Enclosure lo <= sqrt(r) <= hi with hi - lo <= 1/2^prec_bits. Requires r >= 0.
void rat_sqrt_bounds(const Rat& r, unsigned prec_bits, Rat& lo, Rat& hi);

Int rat_ceil(const Rat& r);
Int rat_floor(const Rat& r);

}  // namespace choreo
