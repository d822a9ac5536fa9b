#pragma once

// Real polynomials stored as coefficient vectors in descending powers,
// i.e. {1, -2} is s - 2.

#include <complex>
#include <span>
#include <vector>

namespace bodelim::poly {

using Complex = std::complex<double>;

std::vector<double> from_roots(std::span<const Complex> roots);
std::vector<double> multiply(std::span<const double> a, std::span<const double> b);
std::vector<double> add(std::span<const double> a, std::span<const double> b);
std::vector<double> scale(std::span<const double> a, double k);

/// Drops leading coefficients that are exactly zero.
std::vector<double> trim(std::span<const double> a);

Complex eval(std::span<const double> coeffs, Complex s);

/// Roots from the eigenvalues of the balanced companion matrix, each polished
/// by one Newton step when that step reduces the residual. Complex roots are
/// returned as exact conjugate pairs.
std::vector<Complex> roots(std::span<const double> coeffs);

/// Snaps near-real roots onto the real axis and forces exact conjugate pairs.
/// Throws DomainError when a complex root has no conjugate partner.
void make_conjugate_symmetric(std::vector<Complex>& roots, double snap_tol, double pair_tol);

/// Canonical ordering: ascending real part, then ascending imaginary part.
void sort_roots(std::vector<Complex>& roots);

}  // namespace bodelim::poly
