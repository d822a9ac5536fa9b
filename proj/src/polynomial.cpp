#include "bodelim/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>
#include <unsupported/Eigen/Polynomials>

#include "bodelim/error.hpp"

namespace bodelim::poly {

std::vector<double> from_roots(std::span<const Complex> roots) {
  std::vector<Complex> c{1.0};
  for (const Complex& r : roots) {
    std::vector<Complex> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= c[i] * r;
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  std::transform(c.begin(), c.end(), out.begin(), [](Complex z) { return z.real(); });
  return out;
}

std::vector<double> multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[n - a.size() + i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[n - b.size() + i] += b[i];
  return out;
}

std::vector<double> scale(std::span<const double> a, double k) {
  std::vector<double> out(a.begin(), a.end());
  for (double& x : out) x *= k;
  return out;
}

std::vector<double> trim(std::span<const double> a) {
  auto first = std::find_if(a.begin(), a.end(), [](double x) { return x != 0.0; });
  return {first, a.end()};
}

Complex eval(std::span<const double> coeffs, Complex s) {
  Complex acc = 0.0;
  for (double c : coeffs) acc = acc * s + c;
  return acc;
}

namespace {

Complex eval_derivative(std::span<const double> coeffs, Complex s) {
  Complex acc = 0.0;
  const std::size_t n = coeffs.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc = acc * s + coeffs[i] * static_cast<double>(n - 1 - i);
  }
  return acc;
}

}  // namespace

std::vector<Complex> roots(std::span<const double> coeffs_in) {
  const std::vector<double> coeffs = trim(coeffs_in);
  if (coeffs.empty()) throw DomainError("roots: zero polynomial");
  const std::size_t degree = coeffs.size() - 1;
  if (degree == 0) return {};

  std::vector<Complex> out;
  if (degree == 1) {
    out.push_back(-coeffs[1] / coeffs[0]);
  } else {
    // Eigen wants ascending powers.
    Eigen::VectorXd asc(degree + 1);
    for (std::size_t i = 0; i <= degree; ++i) asc(i) = coeffs[degree - i];
    Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
    solver.compute(asc);
    const auto& r = solver.roots();
    out.reserve(degree);
    for (Eigen::Index i = 0; i < r.size(); ++i) {
      if (!std::isfinite(r(i).real()) || !std::isfinite(r(i).imag()))
        throw NumericError("roots: companion eigenvalue solver failed");
      out.push_back(r(i));
    }
    for (Complex& z : out) {
      const Complex p = eval(coeffs, z);
      const Complex dp = eval_derivative(coeffs, z);
      if (std::abs(dp) == 0.0) continue;
      const Complex polished = z - p / dp;
      if (std::abs(eval(coeffs, polished)) < std::abs(p)) z = polished;
    }
  }
  make_conjugate_symmetric(out, 1e-10, 1e-5);
  sort_roots(out);
  return out;
}

void make_conjugate_symmetric(std::vector<Complex>& roots, double snap_tol, double pair_tol) {
  for (Complex& z : roots) {
    if (std::abs(z.imag()) <= snap_tol * std::max(1.0, std::abs(z))) z = {z.real(), 0.0};
  }
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i] || roots[i].imag() == 0.0) continue;
    std::size_t best = roots.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < roots.size(); ++j) {
      if (j == i || used[j] || roots[j].imag() == 0.0) continue;
      if ((roots[j].imag() > 0) == (roots[i].imag() > 0)) continue;
      const double d = std::abs(roots[j] - std::conj(roots[i]));
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    if (best == roots.size() || best_dist > pair_tol * std::max(1.0, std::abs(roots[i]))) {
      throw DomainError("root set is not conjugate-symmetric");
    }
    const Complex mid = 0.5 * (roots[i] + std::conj(roots[best]));
    roots[i] = mid;
    roots[best] = std::conj(mid);
    used[i] = used[best] = true;
  }
}

void sort_roots(std::vector<Complex>& roots) {
  std::sort(roots.begin(), roots.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
}

}  // namespace bodelim::poly
