#include <algorithm>
#include <cmath>
#include <random>

#include "bodelim/error.hpp"
#include "bodelim/polynomial.hpp"
#include "doctest.h"

using namespace bodelim;
using poly::Complex;

TEST_CASE("from_roots and eval agree") {
  const std::vector<Complex> r = {{-1.0, 0.0}, {2.0, 3.0}, {2.0, -3.0}};
  const auto c = poly::from_roots(r);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == doctest::Approx(1.0));
  // (s+1)(s^2 - 4s + 13) = s^3 - 3s^2 + 9s + 13
  CHECK(c[1] == doctest::Approx(-3.0));
  CHECK(c[2] == doctest::Approx(9.0));
  CHECK(c[3] == doctest::Approx(13.0));
  for (const Complex& z : r) CHECK(std::abs(poly::eval(c, z)) < 1e-12);
}

TEST_CASE("multiply, add, trim") {
  const std::vector<double> a = {1.0, 1.0};
  const std::vector<double> b = {1.0, -1.0};
  const auto p = poly::multiply(a, b);
  CHECK(p == std::vector<double>{1.0, 0.0, -1.0});
  const auto q = poly::add(p, std::vector<double>{2.0});
  CHECK(q == std::vector<double>{1.0, 0.0, 1.0});
  CHECK(poly::trim(std::vector<double>{0.0, 0.0, 3.0}) == std::vector<double>{3.0});
  CHECK(poly::trim(std::vector<double>{0.0}).empty());
}

TEST_CASE("roots of known polynomials") {
  SUBCASE("quadratic with complex pair") {
    const auto r = poly::roots(std::vector<double>{1.0, 1.0, 2.0});
    REQUIRE(r.size() == 2);
    CHECK(r[0] == std::conj(r[1]));
    CHECK(r[0].real() == doctest::Approx(-0.5));
    CHECK(std::abs(r[0].imag()) == doctest::Approx(std::sqrt(7.0) / 2.0));
  }
  SUBCASE("linear") {
    const auto r = poly::roots(std::vector<double>{2.0, -4.0});
    REQUIRE(r.size() == 1);
    CHECK(r[0].real() == doctest::Approx(2.0));
    CHECK(r[0].imag() == 0.0);
  }
  SUBCASE("constant has no roots") { CHECK(poly::roots(std::vector<double>{3.0}).empty()); }
  SUBCASE("zero roots from trailing zeros") {
    const auto r = poly::roots(std::vector<double>{1.0, 3.0, 0.0, 0.0});
    REQUIRE(r.size() == 3);
    CHECK(r[0].real() == doctest::Approx(-3.0));
    CHECK(std::abs(r[1]) < 1e-12);
    CHECK(std::abs(r[2]) < 1e-12);
  }
}

TEST_CASE("roots round-trip random real polynomials") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Complex> r;
    const int pairs = trial % 3;
    for (int i = 0; i < pairs; ++i) {
      const Complex z(u(rng), std::abs(u(rng)) + 0.1);
      r.push_back(z);
      r.push_back(std::conj(z));
    }
    for (int i = 0; i < 2 + trial % 4; ++i) r.emplace_back(u(rng), 0.0);
    const auto c = poly::from_roots(r);
    const auto back = poly::roots(c);
    REQUIRE(back.size() == r.size());
    for (const Complex& z : back) CHECK(std::abs(poly::eval(c, z)) < 1e-7 * (1.0 + std::pow(std::abs(z), r.size())));
    for (const Complex& z : back) {
      if (z.imag() != 0.0)
        CHECK(std::find(back.begin(), back.end(), std::conj(z)) != back.end());
    }
  }
}

TEST_CASE("make_conjugate_symmetric") {
  std::vector<Complex> r = {{1.0, 1e-14}, {2.0, 1.0}, {2.0, -1.0 + 1e-12}};
  poly::make_conjugate_symmetric(r, 1e-10, 1e-9);
  poly::sort_roots(r);
  CHECK(r[0] == Complex(1.0, 0.0));
  CHECK(r[1] == std::conj(r[2]));

  std::vector<Complex> bad = {{1.0, 1.0}};
  CHECK_THROWS_AS(poly::make_conjugate_symmetric(bad, 1e-10, 1e-9), DomainError);
}
