#pragma once

// Band structure of the critical almost Mathieu operator at rational
// frequency p/q through the q x q Floquet matrices
//
//   M_{p,q}(t1, t2) = e^{i t1} J + e^{-i t1} J* + e^{i t2} K + e^{-i t2} K*,
//   J = diag(e^{i (j-1) 2 pi p / q}),  K the cyclic shift,
//
// and the Chambers identity
//
//   det(M(t1, t2) - E) = f_{p,q}(E) + (-1)^{q+1} 2 (cos q t1 + cos q t2).

#include "harperdim/common.hpp"
#include "harperdim/parallel.hpp"

#include <Eigen/Dense>
#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_complex.hpp>

#include <algorithm>
#include <complex>
#include <numbers>
#include <variant>
#include <vector>

namespace harperdim::harper {

struct FloquetMatrix {
  std::int64_t p = 0;
  std::int64_t q = 1;
  double theta1 = 0;
  double theta2 = 0;
  double lambda = 1;
  Eigen::MatrixXcd entries;
};

namespace detail {

inline void check_frequency(std::int64_t p, std::int64_t q) {
  if (q < 1) throw Error("q must be >= 1");
  if (p < 0 || (p >= q && !(p == 0 && q == 1))) throw Error("p must satisfy 0 <= p < q");
  if (gcd64(p, q) != 1) throw Error("p and q are not coprime: reduce the fraction first");
}

/// Angle (j-1) * 2 pi p / q reduced mod 2 pi before evaluation, so that the
/// diagonal does not lose accuracy for large j.
inline double phase(std::int64_t j, std::int64_t p, std::int64_t q) {
  return 2.0 * std::numbers::pi * static_cast<double>((j * p) % q) / static_cast<double>(q);
}

template <class Matrix>
double max_abs(const Matrix& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace detail

inline FloquetMatrix build_matrix(std::int64_t p, std::int64_t q, double theta1, double theta2,
                                  double lambda = 1.0) {
  detail::check_frequency(p, q);
  FloquetMatrix m{p, q, theta1, theta2, lambda, Eigen::MatrixXcd::Zero(q, q)};
  const std::complex<double> hop = std::polar(1.0, theta2);
  for (std::int64_t j = 0; j < q; ++j) {
    m.entries(j, j) += 2.0 * lambda * std::cos(theta1 + detail::phase(j, p, q));
    const std::int64_t k = (j + 1) % q;
    m.entries(j, k) += hop;
    m.entries(k, j) += std::conj(hop);
  }
  return m;
}

/// Either the real symmetric gauge form or, when no exact real form exists,
/// the complex Hermitian matrix itself.
using ReducedMatrix = std::variant<Eigen::MatrixXd, Eigen::MatrixXcd>;

/// Conjugating by diag(e^{-i j t2}) moves the Bloch phase of K onto the
/// corner, where it becomes e^{i q t2}. For t2 = 0 or t2 = pi/q that is +1 or
/// -1, giving a real cyclic-tridiagonal matrix with unit hopping.
inline ReducedMatrix gauge_reduce(std::int64_t p, std::int64_t q, double theta1, double theta2,
                                  double lambda = 1.0) {
  detail::check_frequency(p, q);
  const double pi_over_q = std::numbers::pi / static_cast<double>(q);
  double corner;
  if (std::abs(theta2) <= 1e-15) {
    corner = 1.0;
  } else if (std::abs(theta2 - pi_over_q) <= 1e-15 * std::max(1.0, pi_over_q)) {
    corner = -1.0;
  } else {
    return build_matrix(p, q, theta1, theta2, lambda).entries;
  }
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(q, q);
  for (std::int64_t j = 0; j < q; ++j) {
    a(j, j) += 2.0 * lambda * std::cos(theta1 + detail::phase(j, p, q));
    const std::int64_t k = (j + 1) % q;
    const double h = (k == 0) ? corner : 1.0;
    a(j, k) += h;
    a(k, j) += h;
  }
  return a;
}

/// All eigenvalues in ascending order. Throws on non-Hermitian input.
inline std::vector<double> eigenvalues(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error("eigenvalues: matrix must be square");
  const double scale = std::max(1.0, detail::max_abs(a));
  if (detail::max_abs(Eigen::MatrixXd(a - a.transpose())) > 1e-12 * scale)
    throw Error("eigenvalues: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigenvalues: solver did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

inline std::vector<double> eigenvalues(const Eigen::MatrixXcd& a) {
  if (a.rows() != a.cols()) throw Error("eigenvalues: matrix must be square");
  const double scale = std::max(1.0, detail::max_abs(a));
  if (detail::max_abs(Eigen::MatrixXcd(a - a.adjoint())) > 1e-12 * scale)
    throw Error("eigenvalues: matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigenvalues: solver did not converge");
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

inline std::vector<double> eigenvalues(const ReducedMatrix& a) {
  return std::visit([](const auto& m) { return eigenvalues(m); }, a);
}

inline std::vector<double> eigenvalues(const FloquetMatrix& m) { return eigenvalues(m.entries); }

/// f_{p,q}, represented by the eigenvalues mu_i of M(pi/2q, pi/2q), where
/// cos q t1 = cos q t2 = 0, so that f(E) = prod (mu_i - E). The polynomial
/// is never expanded into coefficients.
class ChambersPolynomial {
 public:
  ChambersPolynomial(std::int64_t p, std::int64_t q) : p_(p), q_(q) {
    const double t = std::numbers::pi / (2.0 * static_cast<double>(q));
    roots_ = eigenvalues(build_matrix(p, q, t, t));
  }

  double operator()(double energy) const {
    double prod = 1.0;
    for (double mu : roots_) prod *= (mu - energy);
    return prod;
  }

  const std::vector<double>& roots() const { return roots_; }
  std::int64_t p() const { return p_; }
  std::int64_t q() const { return q_; }

 private:
  std::int64_t p_, q_;
  std::vector<double> roots_;
};

inline double chambers_f(std::int64_t p, std::int64_t q, double energy) {
  return ChambersPolynomial(p, q)(energy);
}

namespace detail {

using ExtComplex = boost::multiprecision::cpp_complex_50;

/// Determinant by Gaussian elimination with partial pivoting. Zero entries
/// are skipped, so the cyclic-tridiagonal Floquet matrices cost O(q^2)
/// comparisons instead of O(q^3) extended-precision multiplications.
inline ExtComplex determinant(std::vector<ExtComplex> a, std::size_t n) {
  using boost::multiprecision::abs;
  const ExtComplex zero(0);
  auto at = [&](std::size_t i, std::size_t j) -> ExtComplex& { return a[i * n + j]; };
  auto mag = [](const ExtComplex& z) { return ExtReal(abs(z.real()) + abs(z.imag())); };
  ExtComplex det(1);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    ExtReal best = mag(at(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (at(i, k) == zero) continue;
      const ExtReal m = mag(at(i, k));
      if (m > best) {
        best = m;
        piv = i;
      }
    }
    if (best == 0) return zero;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(at(k, j), at(piv, j));
      det = -det;
    }
    const ExtComplex pivot = at(k, k);
    det *= pivot;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (at(i, k) == zero) continue;
      const ExtComplex factor = at(i, k) / pivot;
      for (std::size_t j = k + 1; j < n; ++j) {
        if (at(k, j) == zero) continue;
        at(i, j) -= factor * at(k, j);
      }
      at(i, k) = zero;
    }
  }
  return det;
}

/// det(M(t1, t2) - E) in 50-digit arithmetic, from the matrix entries.
inline ExtComplex floquet_det_ext(std::int64_t p, std::int64_t q, const ExtReal& t1, const ExtReal& t2,
                                  const ExtReal& energy) {
  const ExtReal two_pi = 2 * boost::math::constants::pi<ExtReal>();
  const std::size_t n = static_cast<std::size_t>(q);
  std::vector<ExtComplex> a(n * n, ExtComplex(0));
  const ExtComplex hop(cos(t2), sin(t2));
  const ExtComplex hop_conj(cos(t2), -sin(t2));
  for (std::size_t j = 0; j < n; ++j) {
    const ExtReal angle = t1 + two_pi * ExtReal((static_cast<std::int64_t>(j) * p) % q) / ExtReal(q);
    a[j * n + j] += ExtComplex(2 * cos(angle) - energy);
    const std::size_t k = (j + 1) % n;
    a[j * n + k] += hop;
    a[k * n + j] += hop_conj;
  }
  return determinant(std::move(a), n);
}

}  // namespace detail

/// |det(M(t1,t2) - E) - f_{p,q}(E) - (-1)^{q+1} 2 (cos q t1 + cos q t2)|.
///
/// |f_{p,q}| reaches ~1e25 on [-4, 4] already for q <= 50, so both
/// determinants (at (t1, t2) and at (pi/2q, pi/2q), the latter being f) are
/// evaluated by elimination in 50-digit arithmetic.
inline double chambers_residual(std::int64_t p, std::int64_t q, double theta1, double theta2, double energy) {
  detail::check_frequency(p, q);
  const ExtReal t1(theta1), t2(theta2), e(energy);
  const ExtReal qq(q);
  const ExtReal t_star = boost::math::constants::pi<ExtReal>() / (2 * qq);
  const auto det = detail::floquet_det_ext(p, q, t1, t2, e);
  const auto f = detail::floquet_det_ext(p, q, t_star, t_star, e);
  const ExtReal sign = (q % 2 == 1) ? ExtReal(1) : ExtReal(-1);
  const ExtReal rhs = f.real() + sign * 2 * (cos(qq * t1) + cos(qq * t2));
  using boost::multiprecision::abs;
  using boost::multiprecision::hypot;
  const ExtReal r = hypot(det.real() - rhs, det.imag() - f.imag());
  return r.convert_to<double>();
}

struct Band {
  double lower = 0;  // gamma_l
  double upper = 0;  // delta_l
  int index = 0;     // l, 1-based

  double length() const { return upper - lower; }
};

struct BandSet {
  std::int64_t p = 0;
  std::int64_t q = 1;
  double lambda = 1;
  std::vector<Band> bands;
  /// Edges from a quasi-momentum grid rather than the exact two-point rule.
  bool approximate = false;
};

struct BandOptions {
  /// Grid points along t1 = t2 in [0, pi/q] for lambda != 1.
  int grid = 64;
  /// Overlap between consecutive non-central bands that signals eigensolver
  /// failure, in units of max(1, |lambda|).
  double overlap_tol = 1e-9;
};

/// Spectrum at frequency p/q as q closed bands.
///
/// For lambda = 1 every eigenvalue branch is a monotone function of
/// 2 (cos q t1 + cos q t2), which ranges over [-4, 4] with extremes at
/// (0, 0) and (pi/q, pi/q); the l-th eigenvalues at those two points are the
/// edges of band l. Other couplings scan the diagonal t1 = t2 and are
/// flagged approximate.
inline BandSet band_set(std::int64_t p, std::int64_t q, double lambda = 1.0, const BandOptions& opt = {}) {
  detail::check_frequency(p, q);
  const double pi_over_q = std::numbers::pi / static_cast<double>(q);
  BandSet bs{p, q, lambda, {}, lambda != 1.0};
  std::vector<double> lo, hi;
  if (lambda == 1.0) {
    const auto e0 = eigenvalues(gauge_reduce(p, q, 0.0, 0.0));
    const auto e1 = eigenvalues(gauge_reduce(p, q, pi_over_q, pi_over_q));
    for (std::int64_t l = 0; l < q; ++l) {
      lo.push_back(std::min(e0[l], e1[l]));
      hi.push_back(std::max(e0[l], e1[l]));
    }
  } else {
    const int n = std::max(2, opt.grid);
    for (int k = 0; k < n; ++k) {
      const double t = pi_over_q * static_cast<double>(k) / static_cast<double>(n - 1);
      const double t2 = (k == n - 1) ? pi_over_q : t;
      const auto e = eigenvalues(gauge_reduce(p, q, t, k == 0 ? 0.0 : t2, lambda));
      if (k == 0) {
        lo = e;
        hi = e;
      } else {
        for (std::int64_t l = 0; l < q; ++l) {
          lo[l] = std::min(lo[l], e[l]);
          hi[l] = std::max(hi[l], e[l]);
        }
      }
    }
  }
  const double tol = opt.overlap_tol * std::max(1.0, std::abs(lambda));
  for (std::int64_t l = 0; l < q; ++l) {
    if (l + 1 < q && hi[l] - lo[l + 1] > tol && !(q % 2 == 0 && l + 1 == q / 2))
      throw Error("band_set: bands " + std::to_string(l + 1) + " and " + std::to_string(l + 2) +
                  " overlap; eigensolver inconsistency at p/q = " + std::to_string(p) + "/" + std::to_string(q));
    bs.bands.push_back({lo[l], hi[l], static_cast<int>(l + 1)});
  }
  return bs;
}

inline double total_measure(const BandSet& bs) {
  double s = 0;
  for (const auto& b : bs.bands) s += b.length();
  return s;
}

/// Indices l (1-based) with gamma_{l+1} - delta_l < tol.
inline std::vector<int> touching_bands(const BandSet& bs, double tol) {
  std::vector<int> out;
  for (std::size_t l = 0; l + 1 < bs.bands.size(); ++l)
    if (bs.bands[l + 1].lower - bs.bands[l].upper < tol) out.push_back(static_cast<int>(l + 1));
  return out;
}

/// All coprime 0 <= p < q <= q_max, ordered by (q, p).
inline std::vector<std::pair<std::int64_t, std::int64_t>> coprime_pairs(std::int64_t q_max) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  for (std::int64_t q = 1; q <= q_max; ++q)
    for (std::int64_t p = 0; p < q; ++p)
      if (gcd64(p, q) == 1) out.emplace_back(p, q);
  return out;
}

/// Hofstadter butterfly: band_set for every coprime pair with q <= q_max.
/// Workers fill disjoint slots, so the result is independent of `threads`.
inline std::vector<BandSet> butterfly(std::int64_t q_max, double lambda = 1.0, unsigned threads = 1) {
  if (q_max < 1) throw Error("butterfly: q_max must be >= 1");
  const auto pairs = coprime_pairs(q_max);
  std::vector<BandSet> out(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    out[i] = band_set(pairs[i].first, pairs[i].second, lambda);
  });
  return out;
}

}  // namespace harperdim::harper
