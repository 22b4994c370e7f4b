#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kn/targets.hpp"
#include "test_util.hpp"

using namespace kn;
using namespace kn::testutil;

namespace {

Vector vec2(Complex a, Complex b) {
  Vector v(2);
  v << a, b;
  return v;
}

AlgebraElement diag_skew(std::initializer_list<double> entries) {
  const int n = static_cast<int>(entries.size());
  Matrix m = Matrix::Zero(n, n);
  int i = 0;
  for (double e : entries) m(i, i) = Complex(0, e), ++i;
  return AlgebraElement::skew(m);
}

}  // namespace

TEST_CASE("action basics") {
  Target p(ProjectiveTarget{2});
  TargetPoint x = make_projective_point(vec2(1, 1));

  TargetPoint same = act(p, GroupElement::identity(2), x);
  CHECK((same.frame - x.frame).norm() < 1e-14);

  Matrix g = Matrix::Zero(2, 2);
  g(0, 0) = 2;
  g(1, 1) = 1;
  TargetPoint moved = act(p, GroupElement(g), x);
  Vector expect = vec2(2, 1).normalized();
  CHECK((moved.frame - expect).norm() < 1e-12);

  std::mt19937_64 rng(31);
  Target gr(GrassmannTarget{2, 4});
  TargetPoint pt = random_point(gr, rng);
  Matrix k = random_unitary_matrix(4, rng);
  TargetPoint kp = act(gr, GroupElement(k), pt);
  CHECK(point_is_normalized(gr, kp));

  // Group law on every kind.
  for (int i = 0; i < 8; ++i) {
    Target t = cycle_target(i);
    TargetPoint y = random_point(t, rng);
    GroupElement a = random_group(t.ambient_dim(), rng);
    GroupElement b = random_group(t.ambient_dim(), rng);
    TargetPoint lhs = act(t, a, act(t, b, y));
    TargetPoint rhs = act(t, GroupElement(a.mat * b.mat), y);
    CHECK((lhs.frame * lhs.frame.adjoint() - rhs.frame * rhs.frame.adjoint())
              .norm() < 1e-10);
  }
}

TEST_CASE("moment pair closed values") {
  Target lin(LinearTarget{2});
  TargetPoint zero = make_linear_point(vec2(0, 0));
  std::mt19937_64 rng(37);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(moment_pair(lin, zero, random_skew(2, rng))) < 1e-15);
  }

  // Projective [1:0], s = diag(i, 0): the calibrated value is the supported
  // eigenvalue of i*s, here -1.
  Target p(ProjectiveTarget{2});
  TargetPoint e1 = make_projective_point(vec2(1, 0));
  CHECK(moment_pair(p, e1, diag_skew({1, 0})) == doctest::Approx(-1.0));

  // Grassmann line span(e1), xi = diag(i, -i): tau * Tr(Pi * i xi) = -tau.
  Target gr(GrassmannTarget{1, 2, 1.0});
  Matrix col(2, 1);
  col << Complex(1, 0), Complex(0, 0);
  TargetPoint pi1 = make_grassmann_point(col);
  CHECK(moment_pair(gr, pi1, diag_skew({1, -1})) == doctest::Approx(-1.0));
}

TEST_CASE("moment element duality and equivariance") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 12; ++i) {
    Target t = cycle_target(i);
    const int m = t.ambient_dim();
    TargetPoint x = random_point(t, rng);
    AlgebraElement mu = moment_element(t, x);
    ActingGroup full = ActingGroup::full_unitary(m);
    for (const auto& b : full.basis()) {
      CHECK(std::abs(pairing(mu, b).real() - moment_pair(t, x, b)) < 1e-10);
      CHECK(std::abs(pairing(mu, b).imag()) < 1e-10);
    }
    Matrix k = random_unitary_matrix(m, rng);
    TargetPoint kx = act(t, GroupElement(k), x);
    AlgebraElement mukx = moment_element(t, kx);
    CHECK((mukx.mat - k * mu.mat * k.adjoint()).norm() < 1e-10);
  }
}

TEST_CASE("flow and lambda curves") {
  Target p(ProjectiveTarget{2});
  AlgebraElement s = diag_skew({1, -1});
  TargetPoint x = make_projective_point(vec2(1, 1));

  TargetPoint still = flow(p, x, s, 0.0);
  CHECK((still.frame - x.frame).norm() < 1e-14);

  // Eigenline is flow-invariant.
  TargetPoint e1 = make_projective_point(vec2(1, 0));
  TargetPoint e1t = flow(p, e1, s, 3.7);
  CHECK(std::abs(std::abs(e1t.frame(0)) - 1.0) < 1e-12);
  CHECK(lambda_t(p, e1, s, 0.0) == doctest::Approx(lambda_t(p, e1, s, 5.0)));

  // [1:1] flows to the eigenline of the top eigenvalue of i*s (here e2).
  TargetPoint late = flow(p, x, s, 20.0);
  CHECK(std::abs(late.frame(1)) == doctest::Approx(1.0).epsilon(1e-10));

  // Closed form of the curve: lambda_t = tanh(2t).
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    CHECK(lambda_t(p, x, s, t) == doctest::Approx(std::tanh(2.0 * t)).epsilon(1e-10));
  }
  CHECK(lambda_t(p, x, s, 0.0) == doctest::Approx(moment_pair(p, x, s)));
}

TEST_CASE("closed-form maximal weights") {
  Target p(ProjectiveTarget{3});
  AlgebraElement s = diag_skew({-1, 2, -3});  // i*s = diag(1, -2, 3)
  Vector v(3);
  v << 1, 0, 1;
  TargetPoint x = make_projective_point(v);
  ExtendedWeight w = maximal_weight(p, x, s);
  REQUIRE(!w.infinite);
  CHECK(w.value == doctest::Approx(3.0));

  Target lin(LinearTarget{2});
  TargetPoint xl = make_linear_point(vec2(1, 1));
  ExtendedWeight w0 = maximal_weight(lin, xl, diag_skew({2, 0}));  // i*s <= 0
  REQUIRE(!w0.infinite);
  CHECK(w0.value == doctest::Approx(0.0));
  CHECK(maximal_weight(lin, xl, diag_skew({-1, 2})).infinite);

  Target gr(GrassmannTarget{1, 2, 1.0});
  Matrix col(2, 1);
  col << Complex(1, 0), Complex(1, 0);
  TargetPoint pi = make_grassmann_point(col);
  ExtendedWeight wg = maximal_weight(gr, pi, diag_skew({-1, 1}));
  REQUIRE(!wg.infinite);
  CHECK(wg.value == doctest::Approx(1.0));
}

TEST_CASE("numeric weight oracle agrees with the closed form") {
  std::mt19937_64 rng(43);
  CHECK(!numeric_maximal_weight(cycle_target(1), random_point(cycle_target(1), rng),
                                AlgebraElement::zero(3))
             .infinite);
  CHECK(numeric_maximal_weight(cycle_target(1), random_point(cycle_target(1), rng),
                               AlgebraElement::zero(3))
            .value == 0.0);

  int finite_checked = 0;
  for (int i = 0; finite_checked < 40 && i < 200; ++i) {
    Target t = cycle_target(1 + (i % 3));  // compact kinds are always finite
    TargetPoint x = random_point(t, rng);
    AlgebraElement s = random_skew(t.ambient_dim(), rng);
    ExtendedWeight closed = maximal_weight(t, x, s);
    ExtendedWeight numeric = numeric_maximal_weight(t, x, s);
    REQUIRE(!closed.infinite);
    if (numeric.inconclusive) continue;
    REQUIRE(!numeric.infinite);
    CHECK(std::abs(closed.value - numeric.value) <
          1e-4 * std::max(1.0, std::abs(closed.value)));
    ++finite_checked;
  }
  CHECK(finite_checked == 40);

  // Divergent linear instances are flagged.
  Target lin(LinearTarget{3});
  for (int i = 0; i < 10; ++i) {
    TargetPoint x = random_point(lin, rng);
    AlgebraElement s = random_skew(3, rng);
    ExtendedWeight closed = maximal_weight(lin, x, s);
    ExtendedWeight numeric = numeric_maximal_weight(lin, x, s);
    if (closed.infinite) {
      CHECK(numeric.infinite);
    } else {
      CHECK(!numeric.infinite);
    }
  }
}

TEST_CASE("weight properties") {
  std::mt19937_64 rng(47);
  for (int i = 0; i < 16; ++i) {
    Target t = cycle_target(i);
    const int m = t.ambient_dim();
    TargetPoint x = random_point(t, rng);
    AlgebraElement s = random_skew(m, rng);

    // Monotonicity of the curve.
    double prev = lambda_t(t, x, s, 0.0);
    for (double time = 0.25; time <= 6.0; time += 0.25) {
      const double cur = lambda_t(t, x, s, time);
      // Near the plateau the curve is flat to machine precision, so the
      // slack has to scale with the magnitude of the value itself.
      CHECK(cur >= prev - 1e-7 * std::max(1.0, std::abs(prev)));
      prev = cur;
    }

    // Derivative of the curve is a squared gradient norm: nonnegative.
    const double d0 =
        (lambda_t(t, x, s, 1e-5) - lambda_t(t, x, s, -1e-5)) / 2e-5;
    CHECK(d0 >= -1e-6);

    // Homogeneity.
    ExtendedWeight w = maximal_weight(t, x, s);
    for (double scale : {2.0, 10.0}) {
      AlgebraElement ss = AlgebraElement::skew(scale * s.mat);
      ExtendedWeight ws = maximal_weight(t, x, ss);
      CHECK(w.infinite == ws.infinite);
      if (!w.infinite) {
        CHECK(ws.value ==
              doctest::Approx(scale * w.value).epsilon(1e-12).scale(1.0));
      }
    }

    // K-equivariance.
    Matrix k = random_unitary_matrix(m, rng);
    TargetPoint kx = act(t, GroupElement(k), x);
    AlgebraElement ks = AlgebraElement::skew(k * s.mat * k.adjoint());
    ExtendedWeight wk = maximal_weight(t, kx, ks);
    CHECK(w.infinite == wk.infinite);
    if (!w.infinite) {
      CHECK(std::abs(wk.value - w.value) < 1e-10 * std::max(1.0, std::abs(w.value)));
    }
  }
}
