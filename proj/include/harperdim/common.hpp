#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>

namespace harperdim {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

/// 100 decimal digits; used for continued-fraction values.
using HighReal = boost::multiprecision::cpp_bin_float_100;

/// 50 decimal digits; used where double cancellation is catastrophic
/// (Chambers determinants reach 1e25 for q <= 50).
using ExtReal = boost::multiprecision::cpp_bin_float_50;

/// Coordinates of covering-tree bands. Band lengths shrink like
/// exp(-d * a) per generation, so depth 6 with a ~ 125 already needs
/// ~35 significant digits just to tell neighbouring bands apart.
using Coord = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<80>,
                                            boost::multiprecision::et_off>;

/// Domain error: a precondition of a numerical operation does not hold.
/// The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  a = a < 0 ? -a : a;
  b = b < 0 ? -b : b;
  while (b != 0) {
    const std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

/// Shortest round-trip decimal representation; deterministic across runs.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

template <class Real>
std::string format_real(const Real& v) {
  if constexpr (std::is_floating_point_v<Real>) {
    return format_double(static_cast<double>(v));
  } else {
    std::ostringstream os;
    os.precision(std::numeric_limits<Real>::max_digits10);
    os << std::scientific << v;
    return os.str();
  }
}

/// Natural log of a positive big integer without converting it to double
/// (which overflows past ~1e308).
inline double log_big(const BigInt& v) {
  if (v <= 0) throw Error("log_big: argument must be positive");
  const unsigned bits = boost::multiprecision::msb(v) + 1;
  if (bits <= 1000) return std::log(v.convert_to<double>());
  const unsigned shift = bits - 64;
  const BigInt top = v >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

}  // namespace harperdim
