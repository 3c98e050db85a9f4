#pragma once

// Real trigonometric polynomials and their real roots via a companion-matrix
// eigenvalue solve, either on the Laurent-lifted complex polynomial or on the
// equivalent real Chebyshev series in cos(x).

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ofdmest {

/// g(x) = sum_k a[k] cos(kx) + b[k] sin(kx), k = 0 .. K-1. b[0] is kept at zero.
struct TrigSeries {
  std::vector<double> a;
  std::vector<double> b;

  TrigSeries() = default;
  explicit TrigSeries(std::size_t terms) : a(terms, 0.0), b(terms, 0.0) {}
  TrigSeries(std::vector<double> cos_coeffs, std::vector<double> sin_coeffs);

  std::size_t terms() const { return a.size(); }
  /// sum_k |a_k| + |b_k|
  double magnitude() const;
  bool is_zero() const;
};

/// All-zero (or otherwise rootless-by-construction) series passed to the root finder.
class DegenerateSeriesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The eigenvalue solver did not converge.
class RootFindingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double evaluate(const TrigSeries& s, double x);

/// Coefficients c_0 .. c_{2(K-1)} (ascending powers) of p(z) with p(e^{jx}) = e^{j(K-1)x} g(x).
std::vector<std::complex<double>> to_laurent_poly(const TrigSeries& s);

enum class RootMethod {
  laurent_companion,    // complex companion of the Laurent polynomial, roots on |z| = 1
  chebyshev_colleague,  // real colleague matrix of g(x) g(-x) in c = cos(x), roots in [-1, 1]
};

struct RootOptions {
  RootMethod method = RootMethod::chebyshev_colleague;
  double unit_circle_tol = 1e-6;  // on ||z| - 1| or on |Im c|
  double polish_bracket = 1e-3;
  int polish_iterations = 20;
  double dedup_tol = 1e-7;
};

/// Real roots of s in (-pi, pi], ascending.
std::vector<double> roots(const TrigSeries& s, const RootOptions& opts = {});

}  // namespace ofdmest
