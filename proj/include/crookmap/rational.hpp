#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace crookmap {

// All geometry in this library is exact. Rat is an arbitrary-precision
// rational kept in lowest terms with positive denominator (the backing
// type guarantees both). No floating point is used in any verdict path.
// Expression templates are off so arithmetic yields plain values.
using Int = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                          boost::multiprecision::et_off>;
using Rat =
    boost::multiprecision::number<boost::multiprecision::backends::rational_adaptor<
                                      boost::multiprecision::cpp_int_backend<>>,
                                  boost::multiprecision::et_off>;

inline Int num(const Rat& r) { return boost::multiprecision::numerator(r); }
inline Int den(const Rat& r) { return boost::multiprecision::denominator(r); }

inline Rat rat(long n) { return Rat(n); }
inline Rat rat(long n, long d) { return Rat(n, d); }

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

// floor(n/d) for exact integers, any sign of n, d > 0.
inline Int floor_div(const Int& n, const Int& d) {
    Int q = n / d;
    if (n % d != 0 && (n < 0)) --q;
    return q;
}

inline Int rat_floor(const Rat& r) { return floor_div(num(r), den(r)); }

inline Int rat_ceil(const Rat& r) {
    Int f = rat_floor(r);
    return f * den(r) == num(r) ? f : f + 1;
}

inline bool is_integer(const Rat& r) { return den(r) == 1; }

std::string rat_str(const Rat& r);

// Parses "n" or "n/d" (optionally signed). Returns nullopt on malformed
// input or zero denominator.
std::optional<Rat> parse_rat(const std::string& s);

// Decimal rendering with the given number of fractional digits, rounding
// half away from zero. Lossy; used only for plot output.
std::string rat_decimal(const Rat& r, int digits);

}  // namespace crookmap
