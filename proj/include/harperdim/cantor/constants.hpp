#pragma once

#include "harperdim/common.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace harperdim::cantor {

/// Constants of the covering structure. Their existence is what the
/// covering theorem asserts; here they are inputs. Defaults satisfy
/// 2 b2 c1 <= 1 and make the threshold C~(c1, d1) ~ 124.2.
struct HSConstants {
  std::size_t m = 0;
  std::size_t m_hat = 2;
  double M = 2;
  double C1 = 50;
  double b1 = 0.1;
  double b2 = 0.2;
  double c1 = 0.5;
  double d1 = 0.05;
  double d2 = 0.1;
  double eps0 = 0.1;
  double eps1 = 0.2;

  /// Throws on violated ordering or feasibility constraints.
  void validate() const {
    auto fail = [](const std::string& what) { throw Error("invalid constants: " + what); };
    if (m_hat < 2) fail("m_hat must be >= 2");
    if (m > m_hat) fail("m must not exceed m_hat");
    if (!(M >= 2)) fail("M must be >= 2");
    if (!(C1 > 0)) fail("C1 must be > 0");
    if (!(b1 > 0 && b2 > b1)) fail("need 0 < b1 < b2");
    if (!(c1 > 0)) fail("c1 must be > 0");
    if (!(d1 > 0 && d2 > d1)) fail("need 0 < d1 < d2");
    if (!(eps1 > 0 && eps0 > 0 && eps0 < eps1)) fail("need 0 < eps0 < eps1");
    if (!(eps0 < 1)) fail("eps0 must be < 1");
    if (2 * b2 * c1 > 1)
      throw Error("infeasible layout: gap budget 2*b2*c1 = " + format_double(2 * b2 * c1) +
                  " exceeds 1 (children gaps cannot fit inside a parent)");
  }
};

/// Smallest t > 1/d1 with c1 exp(d1 t) / t > 2, by bisection on
/// (1/d1, 1e6]. On that range t -> c1 exp(d1 t)/t is increasing.
inline double tilde_c(double c1, double d1) {
  if (!(c1 > 0 && d1 > 0)) throw Error("tilde_c: need c1 > 0 and d1 > 0");
  auto g = [&](double t) { return c1 * std::exp(d1 * t) / t - 2.0; };
  double lo = 1.0 / d1;
  double hi = 1e6;
  if (g(hi) <= 0) throw Error("tilde_c: no solution below 1e6");
  if (g(lo) > 0) return std::nextafter(lo, hi);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  return hi;
}

inline double tilde_c(const HSConstants& k) { return tilde_c(k.c1, k.d1); }

/// Quotient threshold max(C1, C~) of the local-dimension estimate.
inline double quotient_threshold(const HSConstants& k) { return std::max(k.C1, tilde_c(k)); }

/// key = value lines; '#' and ';' start comments; [section] headers are
/// ignored. Keys are the field names of HSConstants (case-sensitive).
inline HSConstants parse_constants(const std::string& text) {
  HSConstants k;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    double v = 0;
    try {
      std::size_t used = 0;
      v = std::stod(val, &used);
      if (used != val.size()) throw std::invalid_argument(val);
    } catch (const std::exception&) {
      throw Error("config line " + std::to_string(lineno) + ": bad number '" + val + "'");
    }
    static const std::map<std::string, double HSConstants::*> reals = {
        {"M", &HSConstants::M},   {"C1", &HSConstants::C1}, {"b1", &HSConstants::b1},
        {"b2", &HSConstants::b2}, {"c1", &HSConstants::c1}, {"d1", &HSConstants::d1},
        {"d2", &HSConstants::d2}, {"eps0", &HSConstants::eps0}, {"eps1", &HSConstants::eps1}};
    if (key == "m" || key == "m_hat") {
      if (v < 0 || v != std::floor(v)) throw Error("config: " + key + " must be a non-negative integer");
      (key == "m" ? k.m : k.m_hat) = static_cast<std::size_t>(v);
    } else if (auto it = reals.find(key); it != reals.end()) {
      k.*(it->second) = v;
    } else {
      throw Error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  k.validate();
  return k;
}

inline HSConstants load_constants(const std::string& path) {
  if (path == "defaults") return HSConstants{};
  std::ifstream f(path);
  if (!f) throw Error("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_constants(ss.str());
}

inline std::string to_config(const HSConstants& k) {
  std::ostringstream os;
  os << "m = " << k.m << "\nm_hat = " << k.m_hat << "\nM = " << format_double(k.M)
     << "\nC1 = " << format_double(k.C1) << "\nb1 = " << format_double(k.b1) << "\nb2 = " << format_double(k.b2)
     << "\nc1 = " << format_double(k.c1) << "\nd1 = " << format_double(k.d1) << "\nd2 = " << format_double(k.d2)
     << "\neps0 = " << format_double(k.eps0) << "\neps1 = " << format_double(k.eps1) << "\n";
  return os.str();
}

}  // namespace harperdim::cantor
