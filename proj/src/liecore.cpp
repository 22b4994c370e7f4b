#include "kn/liecore.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace kn {

namespace {

double herm_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

double skew_defect(const Matrix& m) {
  return (m + m.adjoint()).cwiseAbs().maxCoeff();
}

}  // namespace

AlgebraElement::AlgebraElement(Matrix m, Parity p) : mat(std::move(m)), parity(p) {
  if (mat.rows() != mat.cols()) throw DimensionMismatch("algebra element must be square");
  const double tol = 1e-12 * std::max(1.0, mat.cwiseAbs().maxCoeff());
  if (p == Parity::SkewHermitian && skew_defect(mat) > tol)
    throw std::invalid_argument("matrix is not skew-Hermitian");
  if (p == Parity::Hermitian && herm_defect(mat) > tol)
    throw std::invalid_argument("matrix is not Hermitian");
}

AlgebraElement AlgebraElement::skew(Matrix m) { return {std::move(m), Parity::SkewHermitian}; }
AlgebraElement AlgebraElement::hermitian(Matrix m) { return {std::move(m), Parity::Hermitian}; }
AlgebraElement AlgebraElement::general(Matrix m) { return {std::move(m), Parity::General}; }

AlgebraElement AlgebraElement::zero(int m, Parity p) {
  return {Matrix::Zero(m, m), p};
}

bool GroupElement::is_unitary(double tol) const {
  return (mat * mat.adjoint() - Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() <= tol;
}

GroupElement GroupElement::identity(int m) { return GroupElement(Matrix::Identity(m, m)); }

Complex pairing(const AlgebraElement& s, const AlgebraElement& t) {
  if (s.dim() != t.dim()) throw DimensionMismatch("pairing: dimension mismatch");
  return (s.mat * t.mat.adjoint()).trace();
}

double alg_norm(const AlgebraElement& s) {
  return std::sqrt(std::max(0.0, pairing(s, s).real()));
}

Matrix mat_exp(const Matrix& a) {
  // Normal matrices via Schur (diagonal T), otherwise scaling and squaring.
  const int m = static_cast<int>(a.rows());
  const double normal_defect = (a * a.adjoint() - a.adjoint() * a).cwiseAbs().maxCoeff();
  if (normal_defect <= 1e-12 * std::max(1.0, a.squaredNorm())) {
    Eigen::ComplexEigenSolver<Matrix> es(a);
    Matrix d = es.eigenvalues().array().exp().matrix().asDiagonal();
    return es.eigenvectors() * d * es.eigenvectors().inverse();
  }
  int squarings = 0;
  double nrm = a.cwiseAbs().maxCoeff() * m;
  Matrix b = a;
  while (nrm > 0.5) {
    b *= 0.5;
    nrm *= 0.5;
    ++squarings;
  }
  Matrix result = Matrix::Identity(m, m);
  Matrix term = Matrix::Identity(m, m);
  for (int k = 1; k <= 18; ++k) {
    term = term * b / static_cast<double>(k);
    result += term;
  }
  for (int k = 0; k < squarings; ++k) result = result * result;
  return result;
}

Matrix herm_log(const Matrix& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(p);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw SingularInput("herm_log: matrix is not positive definite");
  Eigen::VectorXd logs = es.eigenvalues().array().log();
  return es.eigenvectors() * logs.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

std::pair<GroupElement, AlgebraElement> cartan_decompose(const GroupElement& g) {
  Eigen::JacobiSVD<Matrix> svd(g.mat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues().minCoeff() <= 1e-300)
    throw SingularInput("cartan_decompose: singular input");
  // g = (U V*) (V S V*) = k exp(s)
  Matrix k = svd.matrixU() * svd.matrixV().adjoint();
  Eigen::VectorXd logs = svd.singularValues().array().log();
  Matrix s = svd.matrixV() * logs.cast<Complex>().asDiagonal() * svd.matrixV().adjoint();
  return {GroupElement(std::move(k)), AlgebraElement::hermitian(std::move(s))};
}

double length_log(const GroupElement& g) {
  Eigen::JacobiSVD<Matrix> svd(g.mat);
  if (svd.singularValues().minCoeff() <= 1e-300)
    throw SingularInput("length_log: singular input");
  return svd.singularValues().array().log().matrix().norm();
}

EigenFlag eigen_flag(const AlgebraElement& chi, double cluster_tol) {
  if (chi.parity != Parity::Hermitian)
    throw std::invalid_argument("eigen_flag: element must be Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(chi.mat);
  const Eigen::VectorXd& vals = es.eigenvalues();  // ascending
  const Matrix& vecs = es.eigenvectors();
  const int m = chi.dim();
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());

  EigenFlag flag;
  int start = 0;
  while (start < m) {
    int end = start + 1;
    while (end < m && vals[end] - vals[end - 1] <= cluster_tol * scale) ++end;
    flag.eigenvalues.push_back(vals.segment(start, end - start).mean());
    flag.ranks.push_back(end);
    flag.cumulative_bases.push_back(vecs.leftCols(end));
    start = end;
  }
  return flag;
}

AlgebraElement antidominant_compose(double z, const std::vector<int>& ranks,
                                    int total_rank,
                                    const std::vector<double>& weights) {
  if (ranks.size() != weights.size())
    throw std::invalid_argument("antidominant_compose: ranks/weights size mismatch");
  int prev = 0;
  for (int r : ranks) {
    if (r <= prev || r >= total_rank)
      throw std::invalid_argument("antidominant_compose: invalid rank sequence");
    prev = r;
  }
  for (double w : weights)
    if (w >= 0.0) throw std::invalid_argument("antidominant_compose: weights must be negative");

  Matrix chi = z * Matrix::Identity(total_rank, total_rank);
  for (std::size_t j = 0; j < ranks.size(); ++j) {
    Matrix lam = Matrix::Zero(total_rank, total_rank);
    for (int i = 0; i < ranks[j]; ++i) lam(i, i) = 1.0;
    lam -= (static_cast<double>(ranks[j]) / total_rank) *
           Matrix::Identity(total_rank, total_rank);
    chi += weights[j] * lam;
  }
  return AlgebraElement::hermitian(std::move(chi));
}

ActingGroup ActingGroup::full_unitary(int m) {
  ActingGroup g(Kind::FullUnitary, m);
  // Orthonormal basis of u(m): i E_kk, (E_kl - E_lk)/sqrt2, i(E_kl + E_lk)/sqrt2.
  for (int k = 0; k < m; ++k) {
    Matrix b = Matrix::Zero(m, m);
    b(k, k) = Complex(0, 1);
    g.basis_.push_back(AlgebraElement::skew(std::move(b)));
  }
  const double r = 1.0 / std::sqrt(2.0);
  for (int k = 0; k < m; ++k)
    for (int l = k + 1; l < m; ++l) {
      Matrix b = Matrix::Zero(m, m);
      b(k, l) = r;
      b(l, k) = -r;
      g.basis_.push_back(AlgebraElement::skew(std::move(b)));
      Matrix c = Matrix::Zero(m, m);
      c(k, l) = Complex(0, r);
      c(l, k) = Complex(0, r);
      g.basis_.push_back(AlgebraElement::skew(std::move(c)));
    }
  return g;
}

ActingGroup ActingGroup::diagonal_torus(Eigen::MatrixXd weights) {
  ActingGroup g(Kind::DiagonalTorus, static_cast<int>(weights.cols()));
  g.weights_ = weights;
  // Gram-Schmidt on the weight rows; pairing of diagonal elements is the
  // Euclidean dot product of the weight vectors.
  std::vector<Eigen::VectorXd> ortho;
  for (int j = 0; j < weights.rows(); ++j) {
    Eigen::VectorXd w = weights.row(j);
    for (const auto& u : ortho) w -= u.dot(w) * u;
    if (w.norm() > 1e-12) ortho.push_back(w.normalized());
  }
  for (const auto& u : ortho) {
    Matrix b = Matrix::Zero(g.m_, g.m_);
    for (int i = 0; i < g.m_; ++i) b(i, i) = Complex(0, u[i]);
    g.basis_.push_back(AlgebraElement::skew(std::move(b)));
  }
  return g;
}

ActingGroup ActingGroup::standard_torus(int m) {
  return diagonal_torus(Eigen::MatrixXd::Identity(m, m));
}

ActingGroup ActingGroup::traceless_torus(int m) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m - 1, m);
  for (int j = 0; j + 1 < m; ++j) {
    w(j, j) = 1.0;
    w(j, j + 1) = -1.0;
  }
  return diagonal_torus(std::move(w));
}

AlgebraElement ActingGroup::project(const AlgebraElement& s) const {
  Matrix out = Matrix::Zero(m_, m_);
  for (const auto& b : basis_) out += pairing(s, b).real() * b.mat;
  return AlgebraElement::skew(std::move(out));
}

bool ActingGroup::contains(const AlgebraElement& s, double tol) const {
  return (project(s).mat - s.mat).cwiseAbs().maxCoeff() <= tol;
}

bool ActingGroup::is_central(const AlgebraElement& c, double tol) const {
  for (const auto& b : basis_) {
    Matrix comm = c.mat * b.mat - b.mat * c.mat;
    if (comm.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

AlgebraElement ActingGroup::random_element(std::mt19937_64& rng, double scale) const {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix out = Matrix::Zero(m_, m_);
  for (const auto& b : basis_) out += scale * gauss(rng) * b.mat;
  return AlgebraElement::skew(std::move(out));
}

GroupElement ActingGroup::random_unitary(std::mt19937_64& rng) const {
  if (kind_ == Kind::FullUnitary) return GroupElement(random_unitary_matrix(m_, rng));
  return GroupElement(mat_exp(random_element(rng).mat));
}

Matrix random_unitary_matrix(int m, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = Complex(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < m; ++j) {
    Complex d = r(j, j);
    q.col(j) *= d / std::abs(d);
  }
  return q;
}

}  // namespace kn
