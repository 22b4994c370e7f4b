#ifndef KN_TEST_UTIL_HPP
#define KN_TEST_UTIL_HPP

#include <random>

#include "kn/targets.hpp"

namespace kn::testutil {

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return m;
}

inline AlgebraElement random_skew(int n, std::mt19937_64& rng, double scale = 1.0) {
  Matrix a = random_matrix(n, n, rng, scale);
  return AlgebraElement::skew(0.5 * (a - a.adjoint().eval()));
}

inline AlgebraElement random_hermitian(int n, std::mt19937_64& rng,
                                       double scale = 1.0) {
  Matrix a = random_matrix(n, n, rng, scale);
  return AlgebraElement::hermitian(0.5 * (a + a.adjoint().eval()));
}

inline GroupElement random_group(int n, std::mt19937_64& rng, double scale = 0.5) {
  Matrix k = random_unitary_matrix(n, rng);
  AlgebraElement s = random_hermitian(n, rng, scale);
  return GroupElement(k * mat_exp(s.mat));
}

/// One representative target of each kind, cycled by index.
inline Target cycle_target(int index) {
  switch (index % 4) {
    case 0:
      return Target(LinearTarget{3});
    case 1:
      return Target(ProjectiveTarget{3});
    case 2:
      return Target(GrassmannTarget{2, 4});
    default:
      return Target(FlagTarget{{1, 3}, {1.0, 0.5}, 4});
  }
}

inline TargetPoint random_point(const Target& t, std::mt19937_64& rng) {
  return std::visit(
      [&](auto&& tt) -> TargetPoint {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          return make_linear_point(random_vector(tt.n, rng));
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          return make_projective_point(random_vector(tt.n, rng));
        } else if constexpr (std::is_same_v<T, GrassmannTarget>) {
          return make_grassmann_point(random_matrix(tt.R, tt.k, rng));
        } else {
          return make_flag_point(random_matrix(tt.R, tt.ranks.back(), rng));
        }
      },
      t.v);
}

}  // namespace kn::testutil

#endif
