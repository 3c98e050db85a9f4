#include "ofdmest/trigroots.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace ofdmest {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double to_half_open(double x) {
  if (x <= -kPi) x += 2.0 * kPi;
  if (x > kPi) x -= 2.0 * kPi;
  return x;
}

double circular_gap(double a, double b) {
  const double d = std::fabs(a - b);
  return std::min(d, 2.0 * kPi - d);
}

// Illinois-modified regula falsi on a sign-changing bracket.
double refine_bracket(const TrigSeries& s, double lo, double hi, double f_lo, double f_hi, int iterations) {
  int side = 0;
  double x = lo;
  for (int i = 0; i < iterations; ++i) {
    x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = evaluate(s, x);
    if (fx == 0.0 || hi - lo < 1e-15) return x;
    if ((fx > 0) == (f_hi > 0)) {
      hi = x;
      f_hi = fx;
      if (side == -1) f_lo *= 0.5;
      side = -1;
    } else {
      lo = x;
      f_lo = fx;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    }
  }
  return x;
}

double polish(const TrigSeries& s, double x0, const RootOptions& opts) {
  if (evaluate(s, x0) == 0.0) return x0;
  for (const double h : {1e-9, 1e-7, 1e-5, opts.polish_bracket}) {
    if (h > opts.polish_bracket) continue;
    const double lo = x0 - h;
    const double hi = x0 + h;
    const double f_lo = evaluate(s, lo);
    const double f_hi = evaluate(s, hi);
    if (f_lo == 0.0) return lo;
    if (f_hi == 0.0) return hi;
    if ((f_lo > 0) != (f_hi > 0)) return refine_bracket(s, lo, hi, f_lo, f_hi, opts.polish_iterations);
  }
  return x0;
}

}  // namespace

TrigSeries::TrigSeries(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs)
    : a(std::move(cos_coeffs)), b(std::move(sin_coeffs)) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("TrigSeries: coefficient sequences must be nonempty and of equal length");
  }
  b[0] = 0.0;
}

double TrigSeries::magnitude() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += std::fabs(a[k]) + std::fabs(b[k]);
  return acc;
}

bool TrigSeries::is_zero() const {
  return std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; }) &&
         std::all_of(b.begin() + (b.empty() ? 0 : 1), b.end(), [](double v) { return v == 0.0; });
}

double evaluate(const TrigSeries& s, double x) {
  double acc = s.a.empty() ? 0.0 : s.a[0];
  for (std::size_t k = 1; k < s.a.size(); ++k) {
    const double kx = static_cast<double>(k) * x;
    acc += s.a[k] * std::cos(kx) + s.b[k] * std::sin(kx);
  }
  return acc;
}

std::vector<cplx> to_laurent_poly(const TrigSeries& s) {
  if (s.a.empty() || s.a.size() != s.b.size()) throw std::invalid_argument("to_laurent_poly: malformed series");
  if (s.is_zero()) throw DegenerateSeriesError("to_laurent_poly: all coefficients are zero");
  const std::size_t k_max = s.a.size() - 1;
  std::vector<cplx> c(2 * k_max + 1);
  c[k_max] = s.a[0];
  for (std::size_t k = 1; k <= k_max; ++k) {
    c[k_max + k] = 0.5 * cplx{s.a[k], -s.b[k]};
    c[k_max - k] = 0.5 * cplx{s.a[k], s.b[k]};
  }
  return c;
}

namespace {

// Polishes raw candidates, keeps those with a small residual, sorts and merges circular duplicates.
std::vector<double> finalize(const TrigSeries& s, const std::vector<double>& raw, const RootOptions& opts) {
  const double accept = 1e-8 * s.magnitude();
  std::vector<std::pair<double, double>> found;  // (root, |g(root)|)
  for (const double x0 : raw) {
    const double x = to_half_open(polish(s, x0, opts));
    const double residual = std::fabs(evaluate(s, x));
    if (residual <= accept) found.emplace_back(x, residual);
  }

  std::sort(found.begin(), found.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& r : found) {
    if (!merged.empty() && circular_gap(merged.back().first, r.first) < opts.dedup_tol) {
      if (r.second < merged.back().second) merged.back() = r;
      continue;
    }
    merged.push_back(r);
  }
  if (merged.size() > 1 && circular_gap(merged.front().first, merged.back().first) < opts.dedup_tol) {
    if (merged.back().second < merged.front().second) merged.front() = merged.back();
    merged.pop_back();
    std::sort(merged.begin(), merged.end());
  }

  std::vector<double> out;
  out.reserve(merged.size());
  for (const auto& r : merged) out.push_back(r.first);
  return out;
}

std::vector<double> companion_candidates(const TrigSeries& s, const RootOptions& opts) {
  std::vector<cplx> c = to_laurent_poly(s);

  double c_max = 0.0;
  for (const auto& v : c) c_max = std::max(c_max, std::abs(v));
  // Vanishing top harmonic: drop the (conjugate) outer pair.
  std::size_t lo = 0;
  std::size_t hi = c.size() - 1;
  while (hi > lo && std::abs(c[hi]) < 1e-12 * c_max) {
    --hi;
    ++lo;
  }
  const std::size_t degree = hi - lo;
  if (degree == 0) return {};

  const auto dim = static_cast<Eigen::Index>(degree);
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index i = 1; i < dim; ++i) companion(i, i - 1) = 1.0;
  const cplx lead = c[hi];
  for (Eigen::Index i = 0; i < dim; ++i) companion(i, dim - 1) = -c[lo + static_cast<std::size_t>(i)] / lead;

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw RootFindingError("roots: companion eigenvalue solve failed");

  std::vector<double> raw;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const cplx z = solver.eigenvalues()[i];
    if (std::fabs(std::abs(z) - 1.0) <= opts.unit_circle_tol) raw.push_back(std::arg(z));
  }
  return raw;
}

// With c = cos x: g = A(c) + sin(x) B(c), and g(x) g(-x) = A^2 - (1 - c^2) B^2 is a real
// Chebyshev series in c of degree 2(K-1). Its roots in [-1, 1] give x = +-acos(c).
std::vector<double> colleague_candidates(const TrigSeries& s, const RootOptions& opts) {
  if (s.a.empty() || s.a.size() != s.b.size()) throw std::invalid_argument("roots: malformed series");
  if (s.is_zero()) throw DegenerateSeriesError("roots: all coefficients are zero");

  double scale = 0.0;
  for (std::size_t k = 0; k < s.a.size(); ++k) scale = std::max(scale, std::hypot(s.a[k], s.b[k]));
  std::size_t top = s.a.size() - 1;
  while (top > 0 && std::hypot(s.a[top], s.b[top]) < 2e-12 * scale) --top;
  if (top == 0) return {};

  std::vector<double> a(top + 1);
  std::vector<double> b(top + 1);
  for (std::size_t k = 0; k <= top; ++k) {
    a[k] = s.a[k] / scale;
    b[k] = s.b[k] / scale;
  }
  const std::size_t degree = 2 * top;
  std::vector<double> h(degree + 1, 0.0);
  for (std::size_t k = 0; k <= top; ++k) {
    for (std::size_t m = 0; m <= top; ++m) {
      const double aa = a[k] * a[m];
      const double bb = b[k] * b[m];
      h[k + m] += 0.5 * (aa + bb);
      h[k > m ? k - m : m - k] += 0.5 * (aa - bb);
    }
  }

  const auto dim = static_cast<Eigen::Index>(degree);
  Eigen::MatrixXd colleague = Eigen::MatrixXd::Zero(dim, dim);
  colleague(0, 1) = 1.0;
  for (Eigen::Index i = 1; i < dim - 1; ++i) {
    colleague(i, i - 1) = 0.5;
    colleague(i, i + 1) = 0.5;
  }
  colleague(dim - 1, dim - 2) = 0.5;
  for (Eigen::Index k = 0; k < dim; ++k) colleague(dim - 1, k) -= h[static_cast<std::size_t>(k)] / (2.0 * h[degree]);

  Eigen::EigenSolver<Eigen::MatrixXd> solver(colleague, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw RootFindingError("roots: colleague eigenvalue solve failed");

  std::vector<double> raw;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const cplx c = solver.eigenvalues()[i];
    if (std::fabs(c.imag()) > opts.unit_circle_tol || std::fabs(c.real()) > 1.0 + opts.unit_circle_tol) continue;
    const double x = std::acos(std::clamp(c.real(), -1.0, 1.0));
    raw.push_back(x);
    raw.push_back(-x);
  }
  return raw;
}

}  // namespace

std::vector<double> roots(const TrigSeries& s, const RootOptions& opts) {
  const std::vector<double> raw =
      opts.method == RootMethod::laurent_companion ? companion_candidates(s, opts) : colleague_candidates(s, opts);
  return finalize(s, raw, opts);
}

}  // namespace ofdmest
