#ifndef KN_TARGETS_HPP
#define KN_TARGETS_HPP

#include <optional>
#include <variant>
#include <vector>

#include "kn/liecore.hpp"

namespace kn {

// Kaehler targets with a unitary action. The moment map convention is
// calibrated so that t -> lambda_t(x;s) is nondecreasing along the flow
// e^{its} and its limit agrees with the closed-form maximal weights:
//
//   Linear      <mu(x),s> = x^* (i s) x
//   Projective  <mu(x),s> = tau * xhat^* (i s) xhat / |xhat|^2
//   Grassmann   <mu(pi),s> = tau * Tr(Pi (i s)),  Pi orthogonal projection
//   Flag        weighted sum of the Grassmann values of the nested planes
//
// This is the printed convention with the sign flipped and the 1/2 removed,
// which makes the attracting fixed-point value of the flow equal to the
// closed-form weight (max eigenvalue on the support).

struct LinearTarget {
  int n;
};
struct ProjectiveTarget {
  int n;
  double tau = 1.0;  // experimental scale, default 1
};
struct GrassmannTarget {
  int k;
  int R;
  double tau = 1.0;
};
struct FlagTarget {
  std::vector<int> ranks;  // i_1 < ... < i_s < R
  std::vector<double> taus;
  int R;
};

struct Target {
  std::variant<LinearTarget, ProjectiveTarget, GrassmannTarget, FlagTarget> v;

  Target(LinearTarget t) : v(t) {}
  Target(ProjectiveTarget t) : v(t) {}
  Target(GrassmannTarget t) : v(t) {}
  Target(FlagTarget t) : v(std::move(t)) {}

  /// Dimension of the ambient representation space the group acts on.
  int ambient_dim() const;
  void validate() const;
};

/// Point in a target. Linear/projective points are column vectors; Grassmann
/// points are R x k orthonormal frames; flag points are R x i_s orthonormal
/// frames whose column prefixes span the nested planes.
struct TargetPoint {
  Matrix frame;
};

TargetPoint make_linear_point(const Vector& x);
TargetPoint make_projective_point(const Vector& xhat);       // normalizes
TargetPoint make_grassmann_point(const Matrix& columns);     // orthonormalizes
TargetPoint make_flag_point(const Matrix& columns);          // orthonormalizes

/// Verifies the per-variant normalization invariants to 1e-12.
bool point_is_normalized(const Target& t, const TargetPoint& x, double tol = 1e-12);

TargetPoint act(const Target& t, const GroupElement& g, const TargetPoint& x);

double moment_pair(const Target& t, const TargetPoint& x, const AlgebraElement& s);

/// mu(x) materialized in ambient u(m): pairing(moment_element(x), s) equals
/// moment_pair(x, s) for every skew-Hermitian s.
AlgebraElement moment_element(const Target& t, const TargetPoint& x);

TargetPoint flow(const Target& t, const TargetPoint& x, const AlgebraElement& s,
                 double time);

double lambda_t(const Target& t, const TargetPoint& x, const AlgebraElement& s,
                double time);

/// Maximal weight value: finite real or +infinity.
struct ExtendedWeight {
  double value = 0.0;
  bool infinite = false;
  std::optional<double> error_estimate;  // set on numerically produced values
  bool inconclusive = false;

  static ExtendedWeight inf() { return {0.0, true, std::nullopt, false}; }
  static ExtendedWeight finite(double v) { return {v, false, std::nullopt, false}; }
};

/// Closed-form maximal weight from the eigen-structure of i rho(s).
ExtendedWeight maximal_weight(const Target& t, const TargetPoint& x,
                              const AlgebraElement& s, double rank_tol = 1e-10);

/// Numeric limit of lambda_t: the oracle for the closed form.
ExtendedWeight numeric_maximal_weight(const Target& t, const TargetPoint& x,
                                      const AlgebraElement& s, double t_max = 50.0,
                                      double slope_tol = 1e-6,
                                      double divergence_threshold = 1e6);

/// Orthonormalize columns by thin QR with positive diagonal (deterministic).
Matrix orthonormalize_columns(const Matrix& a);

}  // namespace kn

#endif
