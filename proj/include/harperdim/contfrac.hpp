#pragma once

// Continued fractions alpha = [a1, a2, a3, ...] of frequencies in (0, 1),
// their convergents p_n / q_n, and the frequency statistics
// beta(alpha), A*(alpha), G*(alpha).

#include "harperdim/common.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace harperdim {

/// Partial quotients a_1, a_2, ... as a finite prefix followed by an
/// optional periodic tail that repeats forever. A fraction without tail is
/// rational.
class ContinuedFraction {
 public:
  ContinuedFraction() = default;

  explicit ContinuedFraction(std::vector<BigInt> prefix,
                             std::optional<std::vector<BigInt>> tail = std::nullopt)
      : prefix_(std::move(prefix)), tail_(std::move(tail)) {
    if (tail_ && tail_->empty()) throw Error("periodic tail must be nonempty");
    if (prefix_.empty() && !tail_) throw Error("continued fraction has no quotients");
    auto check = [](const BigInt& a) {
      if (a < 1) throw Error("partial quotients must be >= 1");
    };
    std::for_each(prefix_.begin(), prefix_.end(), check);
    if (tail_) std::for_each(tail_->begin(), tail_->end(), check);
  }

  static ContinuedFraction periodic(std::vector<BigInt> tail) {
    return ContinuedFraction({}, std::move(tail));
  }
  /// alpha_n = [n, n, n, ...]
  static ContinuedFraction constant(std::int64_t n) { return periodic({BigInt(n)}); }
  static ContinuedFraction golden() { return constant(1); }

  /// Literal syntax "[a1,a2,...;t1,t2,...]"; the part after ';' is the
  /// periodic tail. "[;5]" is alpha_5, "[3,50]" is the rational 50/151.
  static ContinuedFraction parse(std::string_view text);

  const std::vector<BigInt>& prefix() const { return prefix_; }
  const std::optional<std::vector<BigInt>>& tail() const { return tail_; }

  bool infinite() const { return tail_.has_value(); }
  bool purely_periodic() const { return prefix_.empty() && tail_.has_value(); }
  std::size_t period() const { return tail_ ? tail_->size() : 0; }

  /// Number of quotients available; max() for an infinite expansion.
  std::size_t available() const {
    return tail_ ? std::numeric_limits<std::size_t>::max() : prefix_.size();
  }

  /// a_i, 1-based.
  const BigInt& quotient(std::size_t i) const {
    if (i == 0 || i > available()) throw Error("insufficient quotients");
    if (i <= prefix_.size()) return prefix_[i - 1];
    return (*tail_)[(i - 1 - prefix_.size()) % tail_->size()];
  }

  std::vector<BigInt> quotients(std::size_t n) const {
    std::vector<BigInt> out;
    out.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) out.push_back(quotient(i));
    return out;
  }

  std::string to_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < prefix_.size(); ++i) {
      if (i) s += ',';
      s += prefix_[i].str();
    }
    if (tail_) {
      s += ';';
      for (std::size_t i = 0; i < tail_->size(); ++i) {
        if (i) s += ',';
        s += (*tail_)[i].str();
      }
    }
    return s + "]";
  }

  friend bool operator==(const ContinuedFraction&, const ContinuedFraction&) = default;

 private:
  std::vector<BigInt> prefix_;
  std::optional<std::vector<BigInt>> tail_;
};

inline ContinuedFraction ContinuedFraction::parse(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw Error("continued fraction literal must look like [a1,a2,...;t1,...]: " + std::string(text));
  s = s.substr(1, s.size() - 2);

  auto split = [&](const std::string& part) {
    std::vector<BigInt> out;
    if (part.empty()) return out;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = part.find(',', start);
      const std::string tok = part.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw Error("bad partial quotient '" + tok + "' in " + std::string(text));
      out.emplace_back(tok);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  };

  const std::size_t semi = s.find(';');
  if (semi == std::string::npos) return ContinuedFraction(split(s));
  if (s.find(';', semi + 1) != std::string::npos) throw Error("more than one ';' in " + std::string(text));
  auto tail = split(s.substr(semi + 1));
  if (tail.empty()) throw Error("periodic tail must be nonempty");
  return ContinuedFraction(split(s.substr(0, semi)), std::move(tail));
}

struct Convergent {
  BigInt p;
  BigInt q;
  std::size_t index = 0;
};

/// p_k / q_k for k = 1..n via p_k = a_k p_{k-1} + p_{k-2} seeded with
/// p_0 = 0, q_0 = 1, p_{-1} = 1, q_{-1} = 0.
inline std::vector<Convergent> convergents(const ContinuedFraction& cf, std::size_t n) {
  if (n == 0) throw Error("convergents: n must be >= 1");
  if (n > cf.available()) throw Error("insufficient quotients");
  std::vector<Convergent> out;
  out.reserve(n);
  BigInt p_prev = 1, q_prev = 0, p = 0, q = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    const BigInt& a = cf.quotient(k);
    BigInt p_next = a * p + p_prev;
    BigInt q_next = a * q + q_prev;
    p_prev = std::move(p);
    q_prev = std::move(q);
    p = std::move(p_next);
    q = std::move(q_next);
    out.push_back({p, q, k});
  }
  return out;
}

inline Convergent convergent(const ContinuedFraction& cf, std::size_t n) {
  if (n == 0) return {BigInt(0), BigInt(1), 0};
  return convergents(cf, n).back();
}

/// Value of the continued fraction. Eventually periodic expansions are
/// solved exactly through the quadratic fixed point of the tail, then
/// rounded to Real; finite expansions are the rational p_k / q_k.
template <class Real = double>
Real value(const ContinuedFraction& cf) {
  using std::sqrt;
  const auto& pre = cf.prefix();
  if (!cf.infinite()) {
    const Convergent c = convergent(cf, pre.size());
    return Real(BigRational(c.p, c.q).convert_to<Real>());
  }
  // Purely periodic beta = [t1..tP, beta] satisfies
  //   q_{P-1} beta^2 + (q_P - p_{P-1}) beta - p_P = 0.
  const ContinuedFraction t = ContinuedFraction::periodic(*cf.tail());
  const std::size_t period = cf.period();
  const Convergent last = convergent(t, period);
  const Convergent before = convergent(t, period - 1);
  const Real qa(before.q.convert_to<Real>());
  const Real qb(Real(last.q.convert_to<Real>()) - Real(before.p.convert_to<Real>()));
  const Real pc(last.p.convert_to<Real>());
  Real beta;
  if (qa == 0) {
    beta = pc / qb;
  } else {
    // positive root, written to avoid cancellation: 2c / (b + sqrt(b^2 + 4ac))
    beta = (2 * pc) / (qb + sqrt(qb * qb + 4 * qa * pc));
  }
  if (pre.empty()) return beta;
  // alpha = (p_k + beta p_{k-1}) / (q_k + beta q_{k-1}) for the prefix of length k
  const Convergent ck = convergent(cf, pre.size());
  const Convergent ck1 = convergent(cf, pre.size() - 1);
  const Real num = Real(ck.p.convert_to<Real>()) + beta * Real(ck1.p.convert_to<Real>());
  const Real den = Real(ck.q.convert_to<Real>()) + beta * Real(ck1.q.convert_to<Real>());
  return num / den;
}

struct ExpandResult {
  ContinuedFraction cf;
  /// Expansion terminated: x is rational to working precision.
  bool exact = false;
  /// Stopped before the requested count because rounding error made the
  /// next quotient ambiguous; quotients beyond cf's length are unreliable.
  bool truncated = false;
};

/// Gauss-map expansion of x in (0, 1). The absolute error of the iterate is
/// propagated (|d(1/x)| = err / x^2) so that no ambiguous quotient is ever
/// emitted.
template <class Real>
ExpandResult expand(Real x, std::size_t n) {
  using std::abs;
  using std::floor;
  using std::round;
  if (!(x > 0 && x < 1)) throw Error("expand: x must lie in (0, 1)");
  const Real eps = std::numeric_limits<Real>::epsilon();
  Real err = eps * x / 2;
  std::vector<BigInt> qs;
  ExpandResult res;
  for (std::size_t k = 0; k < n; ++k) {
    const Real y = 1 / x;
    const Real err_y = err / (x * x) + eps * y;
    const Real nearest = round(y);
    const Real d = abs(y - nearest);
    if (d <= 64 * eps * y) {
      qs.emplace_back(nearest.template convert_to<BigInt>());
      res.exact = true;
      break;
    }
    if (d <= err_y || err_y >= Real(0.5)) {
      res.truncated = true;
      break;
    }
    const Real a = floor(y);
    qs.emplace_back(static_cast<BigInt>(a.template convert_to<BigInt>()));
    x = y - a;
    err = err_y;
  }
  if (qs.empty()) throw Error("expand: precision exhausted before the first quotient");
  res.cf = ContinuedFraction(std::move(qs));
  return res;
}

template <>
inline ExpandResult expand<double>(double x, std::size_t n) {
  // double has no convert_to; route through the same algorithm with BigInt
  // conversion done via long long (quotients from a double never exceed 2^53).
  if (!(x > 0 && x < 1)) throw Error("expand: x must lie in (0, 1)");
  const double eps = std::numeric_limits<double>::epsilon();
  double err = eps * x / 2;
  std::vector<BigInt> qs;
  ExpandResult res;
  for (std::size_t k = 0; k < n; ++k) {
    const double y = 1 / x;
    const double err_y = err / (x * x) + eps * y;
    const double nearest = std::round(y);
    const double d = std::abs(y - nearest);
    if (d <= 64 * eps * y) {
      qs.emplace_back(static_cast<long long>(nearest));
      res.exact = true;
      break;
    }
    if (d <= err_y || err_y >= 0.5 || y > 9.0e15) {
      res.truncated = true;
      break;
    }
    const double a = std::floor(y);
    qs.emplace_back(static_cast<long long>(a));
    x = y - a;
    err = err_y;
  }
  if (qs.empty()) throw Error("expand: precision exhausted before the first quotient");
  res.cf = ContinuedFraction(std::move(qs));
  return res;
}

/// Finite-depth proxies for beta(alpha), A*(alpha), G*(alpha).
///
/// beta_estimate is the supremum of log q_{k+1} / q_k over the tail window
/// ceil(n/2) <= k <= n-1. It is evidence, not a limsup: early indices are
/// excluded because log q_2 / q_1 is O(1) for every alpha.
/// a_star_estimate and g_star_estimate are the running arithmetic and
/// geometric means of a_1..a_n, so for a periodic fraction and n a multiple
/// of the period they equal the one-period means.
struct FrequencyStats {
  std::size_t depth = 0;
  double beta_estimate = 0;
  double a_star_estimate = 0;
  double g_star_estimate = 0;
};

inline FrequencyStats stats(const ContinuedFraction& cf, std::size_t n) {
  if (n < 2) throw Error("stats: depth must be >= 2");
  if (n > cf.available()) throw Error("insufficient quotients");
  const auto conv = convergents(cf, n);
  FrequencyStats s;
  s.depth = n;
  const std::size_t start = std::max<std::size_t>(1, (n + 1) / 2);
  double beta = 0;
  for (std::size_t k = start; k + 1 <= n; ++k) {
    const double ratio = log_big(conv[k].q) / conv[k - 1].q.convert_to<double>();
    beta = std::max(beta, ratio);
  }
  s.beta_estimate = beta;
  BigInt sum = 0, prod = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    sum += cf.quotient(i);
    prod *= cf.quotient(i);
  }
  s.a_star_estimate = BigRational(sum, BigInt(n)).convert_to<double>();
  s.g_star_estimate = std::exp(log_big(prod) / static_cast<double>(n));
  return s;
}

struct ClassDecision {
  bool member = false;
  /// Decided over the whole (infinite) expansion rather than a finite prefix.
  bool exact = false;
  std::size_t inspected = 0;
};

/// 1 <= a_i <= M for i <= m and a_i >= C for i > m.
inline ClassDecision large_quotient_class(const ContinuedFraction& cf, double M, std::size_t m, double C) {
  if (M < 1 || C < 1) throw Error("large_quotient_class: need M >= 1 and C >= 1");
  ClassDecision d;
  std::size_t limit = cf.available();
  if (cf.infinite()) limit = std::max(cf.prefix().size(), m) + cf.period();
  d.exact = cf.infinite();
  d.member = true;
  for (std::size_t i = 1; i <= limit; ++i) {
    const double a = cf.quotient(i).convert_to<double>();
    const bool ok = i <= m ? a <= M : a >= C;
    ++d.inspected;
    if (!ok) {
      d.member = false;
      d.exact = true;
      break;
    }
  }
  return d;
}

/// d_H(alpha, alpha') = 1 / (n + 1), n the first index where the expansions
/// differ. Restricted to irrational (infinite) expansions; identical
/// expansions are at distance 0.
inline double cf_distance(const ContinuedFraction& a, const ContinuedFraction& b) {
  if (!a.infinite() || !b.infinite()) throw Error("cf_distance: defined for irrational frequencies only");
  const std::size_t bound = std::max(a.prefix().size(), b.prefix().size()) + std::lcm(a.period(), b.period());
  for (std::size_t i = 1; i <= bound; ++i)
    if (a.quotient(i) != b.quotient(i)) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

}  // namespace harperdim
