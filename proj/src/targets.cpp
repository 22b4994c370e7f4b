#include "kn/targets.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

namespace kn {

namespace {

struct EigenData {
  std::vector<double> values;          // distinct, ascending
  std::vector<int> cum_ranks;          // cumulative multiplicities
  Matrix vectors;                      // full orthonormal eigenbasis
};

// Clustered spectrum of the Hermitian matrix i*s.
EigenData spectrum_of_is(const AlgebraElement& s) {
  Matrix h = Complex(0, 1) * s.mat;
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  EigenData out;
  out.vectors = es.eigenvectors();
  const Eigen::VectorXd& vals = es.eigenvalues();
  const int m = static_cast<int>(vals.size());
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  int start = 0;
  while (start < m) {
    int end = start + 1;
    while (end < m && vals[end] - vals[end - 1] <= 1e-8 * scale) ++end;
    out.values.push_back(vals.segment(start, end - start).mean());
    out.cum_ranks.push_back(end);
    start = end;
  }
  return out;
}

void require_skew(const AlgebraElement& s) {
  if (s.parity != Parity::SkewHermitian)
    throw std::invalid_argument("flow generator must be skew-Hermitian (in k)");
}

int intersection_dim(const Matrix& frame, const Matrix& subspace_basis,
                     double rank_tol) {
  if (subspace_basis.cols() == 0 || frame.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(frame.adjoint() * subspace_basis);
  int d = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] >= 1.0 - rank_tol) ++d;
  return d;
}

double grassmann_weight(const Matrix& frame, const EigenData& eig, double tau,
                        double rank_tol) {
  const int k = static_cast<int>(frame.cols());
  const int r = static_cast<int>(eig.values.size());
  double w = k * eig.values.back();
  for (int j = 0; j + 1 < r; ++j) {
    const Matrix ej = eig.vectors.leftCols(eig.cum_ranks[j]);
    w += intersection_dim(frame, ej, rank_tol) * (eig.values[j] - eig.values[j + 1]);
  }
  return tau * w;
}

}  // namespace

int Target::ambient_dim() const {
  return std::visit(
      [](const auto& t) -> int {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, LinearTarget>) return t.n;
        else if constexpr (std::is_same_v<T, ProjectiveTarget>) return t.n;
        else if constexpr (std::is_same_v<T, GrassmannTarget>) return t.R;
        else return t.R;
      },
      v);
}

void Target::validate() const {
  std::visit(
      [](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          if (t.n < 1) throw std::invalid_argument("linear target: n >= 1 required");
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          if (t.n < 2) throw std::invalid_argument("projective target: n >= 2 required");
          if (t.tau <= 0) throw std::invalid_argument("tau must be positive");
        } else if constexpr (std::is_same_v<T, GrassmannTarget>) {
          if (!(0 < t.k && t.k < t.R))
            throw std::invalid_argument("grassmann target: 0 < k < R required");
          if (t.tau <= 0) throw std::invalid_argument("tau must be positive");
        } else {
          if (t.ranks.empty() || t.ranks.size() != t.taus.size())
            throw std::invalid_argument("flag target: ranks/taus mismatch");
          int prev = 0;
          for (int r : t.ranks) {
            if (r <= prev || r >= t.R)
              throw std::invalid_argument("flag target: ranks must ascend below R");
            prev = r;
          }
          for (double tau : t.taus)
            if (tau <= 0) throw std::invalid_argument("tau must be positive");
        }
      },
      v);
}

Matrix orthonormalize_columns(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = Matrix(qr.householderQ()).leftCols(a.cols());
  Matrix r = qr.matrixQR().topLeftCorner(a.cols(), a.cols());
  for (int j = 0; j < a.cols(); ++j) {
    Complex d = r(j, j);
    if (std::abs(d) < 1e-300)
      throw SingularInput("orthonormalize_columns: rank-deficient frame");
    q.col(j) *= d / std::abs(d);
  }
  return q;
}

TargetPoint make_linear_point(const Vector& x) { return {x}; }

TargetPoint make_projective_point(const Vector& xhat) {
  const double n = xhat.norm();
  if (n < 1e-300) throw std::invalid_argument("projective point: zero homogeneous vector");
  return {xhat / n};
}

TargetPoint make_grassmann_point(const Matrix& columns) {
  return {orthonormalize_columns(columns)};
}

TargetPoint make_flag_point(const Matrix& columns) {
  return {orthonormalize_columns(columns)};
}

bool point_is_normalized(const Target& t, const TargetPoint& x, double tol) {
  return std::visit(
      [&](const auto& tt) -> bool {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) return true;
        else if constexpr (std::is_same_v<T, ProjectiveTarget>)
          return std::abs(x.frame.norm() - 1.0) <= tol;
        else {
          Matrix gram = x.frame.adjoint() * x.frame;
          return (gram - Matrix::Identity(gram.rows(), gram.cols()))
                     .cwiseAbs()
                     .maxCoeff() <= tol;
        }
      },
      t.v);
}

TargetPoint act(const Target& t, const GroupElement& g, const TargetPoint& x) {
  if (g.dim() != t.ambient_dim() || x.frame.rows() != t.ambient_dim())
    throw DimensionMismatch("act: dimension mismatch");
  return std::visit(
      [&](const auto& tt) -> TargetPoint {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          return {g.mat * x.frame};
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          return make_projective_point(g.mat * x.frame.col(0));
        } else {
          return {orthonormalize_columns(g.mat * x.frame)};
        }
      },
      t.v);
}

double moment_pair(const Target& t, const TargetPoint& x, const AlgebraElement& s) {
  require_skew(s);
  const Matrix h = Complex(0, 1) * s.mat;  // Hermitian
  return std::visit(
      [&](const auto& tt) -> double {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          return (x.frame.col(0).adjoint() * h * x.frame.col(0))(0).real();
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          const double n2 = x.frame.col(0).squaredNorm();
          return tt.tau * (x.frame.col(0).adjoint() * h * x.frame.col(0))(0).real() / n2;
        } else if constexpr (std::is_same_v<T, GrassmannTarget>) {
          return tt.tau * (x.frame.adjoint() * h * x.frame).trace().real();
        } else {
          double out = 0.0;
          for (std::size_t a = 0; a < tt.ranks.size(); ++a) {
            const Matrix fa = x.frame.leftCols(tt.ranks[a]);
            out += tt.taus[a] * (fa.adjoint() * h * fa).trace().real();
          }
          return out;
        }
      },
      t.v);
}

AlgebraElement moment_element(const Target& t, const TargetPoint& x) {
  const Complex mi(0, -1);
  return std::visit(
      [&](const auto& tt) -> AlgebraElement {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          return AlgebraElement::skew(mi * (x.frame.col(0) * x.frame.col(0).adjoint()));
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          const double n2 = x.frame.col(0).squaredNorm();
          return AlgebraElement::skew(mi * tt.tau *
                                      (x.frame.col(0) * x.frame.col(0).adjoint()) / n2);
        } else if constexpr (std::is_same_v<T, GrassmannTarget>) {
          return AlgebraElement::skew(mi * tt.tau * (x.frame * x.frame.adjoint()));
        } else {
          Matrix out = Matrix::Zero(tt.R, tt.R);
          for (std::size_t a = 0; a < tt.ranks.size(); ++a) {
            const Matrix fa = x.frame.leftCols(tt.ranks[a]);
            out += mi * tt.taus[a] * (fa * fa.adjoint());
          }
          return AlgebraElement::skew(std::move(out));
        }
      },
      t.v);
}

TargetPoint flow(const Target& t, const TargetPoint& x, const AlgebraElement& s,
                 double time) {
  require_skew(s);
  if (time == 0.0) return x;
  // A single exponential with a large spectral spread destroys the smaller
  // frame directions in floating point (dynamic range e^{2|t| ||s||}).
  // Split the flow into substeps and renormalize between them; QR mixes
  // columns only within leading blocks, so the nested spans are preserved
  // and the composition equals the one-shot flow exactly.
  const double total = std::abs(time) * alg_norm(s);
  const int n = std::max(1, static_cast<int>(std::ceil(total / 8.0)));
  const Matrix step = mat_exp(Complex(0, time / n) * s.mat);
  TargetPoint out = x;
  GroupElement g(step);
  for (int i = 0; i < n; ++i) out = act(t, g, out);
  return out;
}

double lambda_t(const Target& t, const TargetPoint& x, const AlgebraElement& s,
                double time) {
  return moment_pair(t, flow(t, x, s, time), s);
}

ExtendedWeight maximal_weight(const Target& t, const TargetPoint& x,
                              const AlgebraElement& s, double rank_tol) {
  require_skew(s);
  const EigenData eig = spectrum_of_is(s);
  return std::visit(
      [&](const auto& tt) -> ExtendedWeight {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          const double xn = x.frame.norm();
          if (xn < rank_tol) return ExtendedWeight::finite(0.0);
          const Vector coords = eig.vectors.adjoint() * x.frame.col(0);
          double max_supported = -std::numeric_limits<double>::infinity();
          int lo = 0;
          for (std::size_t j = 0; j < eig.values.size(); ++j) {
            const int hi = eig.cum_ranks[j];
            if (coords.segment(lo, hi - lo).norm() > rank_tol * xn)
              max_supported = eig.values[j];
            lo = hi;
          }
          return max_supported > rank_tol ? ExtendedWeight::inf()
                                          : ExtendedWeight::finite(0.0);
        } else if constexpr (std::is_same_v<T, ProjectiveTarget>) {
          const Vector coords = eig.vectors.adjoint() * x.frame.col(0);
          const double xn = x.frame.norm();
          double max_supported = -std::numeric_limits<double>::infinity();
          int lo = 0;
          for (std::size_t j = 0; j < eig.values.size(); ++j) {
            const int hi = eig.cum_ranks[j];
            if (coords.segment(lo, hi - lo).norm() > rank_tol * xn)
              max_supported = eig.values[j];
            lo = hi;
          }
          return ExtendedWeight::finite(tt.tau * max_supported);
        } else if constexpr (std::is_same_v<T, GrassmannTarget>) {
          return ExtendedWeight::finite(
              grassmann_weight(x.frame, eig, tt.tau, rank_tol));
        } else {
          double out = 0.0;
          for (std::size_t a = 0; a < tt.ranks.size(); ++a)
            out += grassmann_weight(x.frame.leftCols(tt.ranks[a]), eig, tt.taus[a],
                                    rank_tol);
          return ExtendedWeight::finite(out);
        }
      },
      t.v);
}

ExtendedWeight numeric_maximal_weight(const Target& t, const TargetPoint& x,
                                      const AlgebraElement& s, double t_max,
                                      double slope_tol,
                                      double divergence_threshold) {
  require_skew(s);
  if (t_max <= 0) throw std::invalid_argument("numeric_maximal_weight: t_max > 0");
  if (alg_norm(s) < 1e-14) return ExtendedWeight::finite(0.0);

  const double dt = std::min(0.25, t_max / 8.0);
  double prev = moment_pair(t, x, s);
  double cur = prev;
  double time = 0.0;
  try {
  while (time < t_max - 0.5 * dt) {
    time += dt;
    cur = lambda_t(t, x, s, time);
    if (std::abs(cur) > divergence_threshold) {
      const double slope = (cur - prev) / dt;
      if (slope > slope_tol) return ExtendedWeight::inf();
    }
    prev = cur;
  }
  const double slope = (cur - prev) / dt;  // last step slope
  const double final_slope =
      (lambda_t(t, x, s, time) - lambda_t(t, x, s, time - dt)) / dt;
  if (std::abs(final_slope) < slope_tol) {
    ExtendedWeight w = ExtendedWeight::finite(cur);
    w.error_estimate = std::max(std::abs(final_slope), std::abs(slope) * dt);
    return w;
  }
  if (std::abs(cur) > divergence_threshold && final_slope > slope_tol)
    return ExtendedWeight::inf();
  } catch (const SingularInput&) {
    // The frame degenerated in floating point before the curve settled;
    // report the last reliable value without committing to a verdict.
  }
  ExtendedWeight w = ExtendedWeight::finite(cur);
  w.inconclusive = true;
  w.error_estimate = std::abs(cur - prev);
  return w;
}

}  // namespace kn
