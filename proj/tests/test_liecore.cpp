#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "kn/liecore.hpp"
#include "test_util.hpp"

using namespace kn;
using namespace kn::testutil;

TEST_CASE("pairing basics") {
  std::mt19937_64 rng(7);
  AlgebraElement zero = AlgebraElement::zero(2);
  AlgebraElement s = random_skew(2, rng);
  CHECK(std::abs(pairing(zero, s)) < 1e-15);

  Matrix u1(1, 1);
  u1(0, 0) = Complex(0, 1);
  AlgebraElement a = AlgebraElement::skew(u1);
  CHECK(pairing(a, a).real() == doctest::Approx(1.0));

  Matrix u2 = Matrix::Zero(2, 2);
  u2(0, 0) = Complex(0, 1);
  u2(1, 1) = Complex(0, -1);
  AlgebraElement b = AlgebraElement::skew(u2);
  CHECK(pairing(b, b).real() == doctest::Approx(2.0));
}

TEST_CASE("pairing is Ad-invariant and conjugate symmetric") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    AlgebraElement s = random_skew(4, rng);
    AlgebraElement t = random_skew(4, rng);
    CHECK(std::abs(pairing(s, t) - std::conj(pairing(t, s))) < 1e-12);
    Matrix k = random_unitary_matrix(4, rng);
    AlgebraElement ads = AlgebraElement::skew(k * s.mat * k.adjoint());
    AlgebraElement adt = AlgebraElement::skew(k * t.mat * k.adjoint());
    CHECK(std::abs(pairing(ads, adt) - pairing(s, t)) < 1e-10);
  }
}

TEST_CASE("cartan decomposition") {
  CHECK(length_log(GroupElement::identity(3)) == doctest::Approx(0.0));

  std::mt19937_64 rng(13);
  Matrix k = random_unitary_matrix(3, rng);
  auto [ku, s] = cartan_decompose(GroupElement(k));
  CHECK(alg_norm(s) < 1e-10);
  CHECK(length_log(GroupElement(k)) < 1e-10);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = std::exp(1.0);
  d(1, 1) = 1.0;
  auto [kd, sd] = cartan_decompose(GroupElement(d));
  CHECK((kd.mat - Matrix::Identity(2, 2)).norm() < 1e-10);
  CHECK(std::abs(sd.mat(0, 0).real() - 1.0) < 1e-10);
  CHECK(std::abs(sd.mat(1, 1).real()) < 1e-10);

  Matrix d2 = Matrix::Zero(2, 2);
  d2(0, 0) = std::exp(2.0);
  d2(1, 1) = std::exp(-1.0);
  CHECK(length_log(GroupElement(d2)) == doctest::Approx(std::sqrt(5.0)));

  for (int rep = 0; rep < 30; ++rep) {
    GroupElement g = random_group(4, rng);
    auto [kk, ss] = cartan_decompose(g);
    CHECK(kk.is_unitary(1e-10));
    CHECK((kk.mat * mat_exp(ss.mat) - g.mat).norm() < 1e-10);
    Matrix ku2 = random_unitary_matrix(4, rng);
    CHECK(length_log(GroupElement(ku2 * g.mat)) ==
          doctest::Approx(length_log(g)).epsilon(1e-9));
  }
}

TEST_CASE("length comparison bounds") {
  // |g|_log is controlled two-sidedly by |gh|_log with a constant depending
  // only on h, through the singular-value perturbation bound.
  std::mt19937_64 rng(17);
  const int n = 4;
  for (int rep = 0; rep < 100; ++rep) {
    GroupElement g = random_group(n, rng, 0.8);
    GroupElement h = random_group(n, rng, 0.8);
    GroupElement gh(g.mat * h.mat);
    Eigen::JacobiSVD<Matrix> svd(h.mat);
    const double op = svd.singularValues()(0);
    const double opinv = 1.0 / svd.singularValues()(n - 1);
    const double logC = std::log(std::max({op, opinv, 1.0}));
    const double lg = length_log(g);
    const double lgh = length_log(gh);
    const double rootN = std::sqrt(static_cast<double>(n));
    CHECK(lg >= lgh / rootN - rootN * logC - 1e-9);
    CHECK(lg <= rootN * (lgh + logC) + 1e-9);
  }
}

TEST_CASE("eigen flag") {
  AlgebraElement zero = AlgebraElement::zero(3, Parity::Hermitian);
  EigenFlag f0 = eigen_flag(zero);
  CHECK(f0.eigenvalues.size() == 1);
  CHECK(f0.ranks.back() == 3);

  Matrix d = Matrix::Zero(3, 3);
  d(0, 0) = -2;
  d(1, 1) = -2;
  d(2, 2) = 1;
  EigenFlag f1 = eigen_flag(AlgebraElement::hermitian(d));
  REQUIRE(f1.eigenvalues.size() == 2);
  CHECK(f1.eigenvalues[0] == doctest::Approx(-2));
  CHECK(f1.eigenvalues[1] == doctest::Approx(1));
  CHECK(f1.ranks == std::vector<int>{2, 3});

  Matrix d2 = Matrix::Zero(3, 3);
  d2(0, 0) = 3;
  d2(1, 1) = 1;
  d2(2, 2) = 2;
  EigenFlag f2 = eigen_flag(AlgebraElement::hermitian(d2));
  REQUIRE(f2.eigenvalues.size() == 3);
  CHECK(f2.eigenvalues[0] == doctest::Approx(1));
  CHECK(std::abs(f2.cumulative_bases[0](1, 0)) == doctest::Approx(1.0));

  // Invariance of cumulative subspaces under the element.
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 20; ++rep) {
    AlgebraElement chi = random_hermitian(5, rng);
    EigenFlag f = eigen_flag(chi);
    for (const Matrix& w : f.cumulative_bases) {
      Matrix restricted = w.adjoint() * chi.mat * w;
      CHECK((chi.mat * w - w * restricted).norm() < 1e-10);
    }
  }
}

TEST_CASE("antidominant composition") {
  AlgebraElement plain = antidominant_compose(2.5, {}, 3, {});
  CHECK((plain.mat - 2.5 * Matrix::Identity(3, 3)).norm() < 1e-14);

  AlgebraElement chi = antidominant_compose(0.0, {1}, 2, {-1.0});
  CHECK(chi.mat(0, 0).real() == doctest::Approx(-0.5));
  CHECK(chi.mat(1, 1).real() == doctest::Approx(0.5));

  EigenFlag f = eigen_flag(chi);
  CHECK(f.ranks == std::vector<int>{1, 2});

  CHECK_THROWS(antidominant_compose(0.0, {1}, 2, {1.0}));
  CHECK_THROWS(antidominant_compose(0.0, {2, 1}, 3, {-1.0, -1.0}));
}

TEST_CASE("acting groups") {
  ActingGroup full = ActingGroup::full_unitary(3);
  CHECK(full.algebra_dim() == 9);
  ActingGroup torus = ActingGroup::standard_torus(3);
  CHECK(torus.algebra_dim() == 3);
  ActingGroup tfree = ActingGroup::traceless_torus(3);
  CHECK(tfree.algebra_dim() == 2);

  std::mt19937_64 rng(29);
  AlgebraElement s = random_skew(3, rng);
  AlgebraElement p = torus.project(s);
  CHECK(torus.contains(p));
  // Projection is idempotent and orthogonal.
  CHECK(alg_norm(AlgebraElement::skew(torus.project(p).mat - p.mat)) < 1e-12);
  for (const auto& b : torus.basis()) {
    CHECK(std::abs(pairing(AlgebraElement::skew(s.mat - p.mat), b)) < 1e-10);
  }
  // Traceless torus elements have zero trace.
  CHECK(std::abs(tfree.project(s).mat.trace()) < 1e-12);

  AlgebraElement center =
      AlgebraElement::skew(Complex(0, 2) * Matrix::Identity(3, 3));
  CHECK(full.is_central(center));
  CHECK(torus.is_central(center));
}
