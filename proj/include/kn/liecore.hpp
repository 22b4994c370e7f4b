#ifndef KN_LIECORE_HPP
#define KN_LIECORE_HPP

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace kn {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// How a matrix sits relative to the compact form: skew-Hermitian elements
/// live in k, Hermitian ones in i*k, everything else is generic in g.
enum class Parity { SkewHermitian, Hermitian, General };

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingularInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Element of the Lie algebra of U(m)/GL(m,C), carried through the anchor
/// representation as an m x m complex matrix. Doubles as flow generator and
/// character.
struct AlgebraElement {
  Matrix mat;
  Parity parity = Parity::General;

  AlgebraElement() = default;
  AlgebraElement(Matrix m, Parity p);

  int dim() const { return static_cast<int>(mat.rows()); }

  static AlgebraElement skew(Matrix m);
  static AlgebraElement hermitian(Matrix m);
  static AlgebraElement general(Matrix m);
  static AlgebraElement zero(int m, Parity p = Parity::SkewHermitian);
};

/// Invertible m x m complex matrix acting through the anchor representation.
struct GroupElement {
  Matrix mat;

  GroupElement() = default;
  explicit GroupElement(Matrix m) : mat(std::move(m)) {}

  int dim() const { return static_cast<int>(mat.rows()); }
  bool is_unitary(double tol = 1e-12) const;

  static GroupElement identity(int m);
};

/// Tr(rho(s) rho(t)^*). Real and positive definite on k.
Complex pairing(const AlgebraElement& s, const AlgebraElement& t);

/// sqrt(Re pairing(s, s)), the anchored Frobenius norm.
double alg_norm(const AlgebraElement& s);

/// Matrix exponential of a normal (or near-normal) matrix.
Matrix mat_exp(const Matrix& a);

/// Hermitian logarithm of a positive definite Hermitian matrix.
Matrix herm_log(const Matrix& p);

/// g = k exp(s) with k unitary and s Hermitian.
std::pair<GroupElement, AlgebraElement> cartan_decompose(const GroupElement& g);

/// |g|_log: Frobenius norm of the Hermitian logarithm of the polar part.
double length_log(const GroupElement& g);

/// Ascending eigenvalue flag of a Hermitian element.
struct EigenFlag {
  std::vector<double> eigenvalues;       // strictly ascending after clustering
  std::vector<Matrix> cumulative_bases;  // orthonormal, each extends previous
  std::vector<int> ranks;                // strictly ascending, last == m
};

/// Clustered eigen-decomposition of a Hermitian element into its invariant
/// partial flag. Clustering tolerance is relative; cluster eigenvalues are
/// averaged.
EigenFlag eigen_flag(const AlgebraElement& chi, double cluster_tol = 1e-8);

/// z*Id + sum_j m_j (pi_j - (R_j/R) Id), with pi_j the projection onto the
/// first R_j coordinates and every m_j < 0.
AlgebraElement antidominant_compose(double z, const std::vector<int>& ranks,
                                    int total_rank,
                                    const std::vector<double>& weights);

/// The compact group whose moment geometry we work in: either all of U(m) or
/// a torus embedded through a list of diagonal weight vectors.
class ActingGroup {
 public:
  enum class Kind { FullUnitary, DiagonalTorus };

  static ActingGroup full_unitary(int m);
  /// weights: d x m real matrix; the torus algebra is
  /// { i * diag(weights^T theta) : theta in R^d }.
  static ActingGroup diagonal_torus(Eigen::MatrixXd weights);
  /// Full diagonal torus of U(m) (standard weights).
  static ActingGroup standard_torus(int m);
  /// Diagonal torus of determinant-one phases (trace-free weight span).
  static ActingGroup traceless_torus(int m);

  Kind kind() const { return kind_; }
  int dim() const { return m_; }
  int algebra_dim() const { return static_cast<int>(basis_.size()); }

  /// Orthonormal basis of k with respect to the anchor pairing.
  const std::vector<AlgebraElement>& basis() const { return basis_; }

  /// Orthogonal projection of an ambient skew-Hermitian matrix onto k.
  AlgebraElement project(const AlgebraElement& s) const;

  bool contains(const AlgebraElement& s, double tol = 1e-10) const;
  bool is_central(const AlgebraElement& c, double tol = 1e-12) const;

  AlgebraElement random_element(std::mt19937_64& rng, double scale = 1.0) const;
  GroupElement random_unitary(std::mt19937_64& rng) const;

 private:
  ActingGroup(Kind k, int m) : kind_(k), m_(m) {}
  Kind kind_;
  int m_;
  Eigen::MatrixXd weights_;  // torus only
  std::vector<AlgebraElement> basis_;
};

/// Uniformly seeded random unitary via QR of a Ginibre matrix.
Matrix random_unitary_matrix(int m, std::mt19937_64& rng);

}  // namespace kn

#endif
