#ifndef KN_FILTSTAB_HPP
#define KN_FILTSTAB_HPP

#include <boost/rational.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace kn {

// Exact slope-stability arithmetic for filtered bundles over a curve.
// Degrees are integers in line-bundle units (first Chern numbers); every
// statement handled here is homogeneous in the choice of unit, so the 2*pi
// of the analytic degree convention is absorbed into it. The base volume is
// normalized to 1.

using Rational = boost::rational<long long>;

struct BundleData {
  long long R;  // rank, >= 1
  long long d;  // degree
};

/// Filtration 0 < V_1 < ... < V_s < V with positive rational weights.
struct SectionFiltration {
  std::vector<long long> ranks;    // strictly increasing, < R
  std::vector<long long> degrees;  // deg(V_k)
  std::vector<Rational> weights;   // tau_k > 0
};

/// Arithmetic shadow of a nonzero proper subsheaf: rank, degree, and the
/// ranks of its meets with the filtration steps. Realizability over an
/// actual curve is not checked.
struct Subobject {
  long long rank;                // 0 < rank < R
  long long degree;
  std::vector<long long> meets;  // rk(V_k meet V'), one per step
};

/// chi = z Id + sum_j m_j lambda_{R^j}, all m_j < 0.
struct ParabolicWeights {
  Rational z;
  std::vector<long long> flag_ranks;    // strictly increasing, < R
  std::vector<long long> flag_degrees;  // deg(V^j)
  std::vector<Rational> m;              // negative
};

void validate(const BundleData& b);
void validate(const BundleData& b, const SectionFiltration& f);
void validate(const BundleData& b, const SectionFiltration& f, const Subobject& s);
void validate(const BundleData& b, const ParabolicWeights& pw);

/// The unique central value (deg V + sum tau_k rk V_k) / R.
Rational central_c(const BundleData& b, const SectionFiltration& f);

enum class SlopeVerdict { StrictPass, Equality, Violated };

/// Exact comparison of the weighted subobject slope with the weighted total
/// slope.
SlopeVerdict slope_test(const BundleData& b, const SectionFiltration& f,
                        const Subobject& s);

/// Degree of the pair: z deg(V) + sum_j m_j (deg V^j - (R^j/R) deg V).
Rational deg_pair(const BundleData& b, const ParabolicWeights& pw);

/// Same value through the eigenvalue route: lambda_top deg(V) plus the
/// eigenvalue jumps against the flag degrees.
Rational deg_pair_eigenvalue_form(const BundleData& b, const ParabolicWeights& pw);

/// c-total degree with c the central value: degree of the pair, plus the
/// tau-weighted maximal-weight terms over the filtration (meets[k][j] =
/// rk(V_k meet V^j)), minus z*c*R.
Rational total_degree(const BundleData& b, const SectionFiltration& f,
                      const ParabolicWeights& pw,
                      const std::vector<std::vector<long long>>& meets);

/// Coefficient of z in the total-degree expression; vanishes iff c is the
/// central value.
Rational z_coefficient(const BundleData& b, const SectionFiltration& f, Rational c);

struct EquivalenceCounterexample {
  Subobject sub;
  ParabolicWeights pw;
  Rational total;
  SlopeVerdict verdict;
};

struct EquivalenceReport {
  bool all_grid_positive = true;
  bool all_slopes_strict = true;
  bool equivalent = true;  // the two quantifiers agree
  long long instances_checked = 0;
  // A genuine mismatch between the two quantifiers, if any.
  std::optional<EquivalenceCounterexample> counterexample;
  // First subobject failing the strict slope test, when one exists.
  std::optional<EquivalenceCounterexample> destabilizer;
};

struct SearchBounds {
  long long degree_bound = 3;
};

/// Exhaustive check on small data that positivity of the total degree over
/// the (z, m) grid matches the strict slope test over all subobjects.
EquivalenceReport equivalence_brute(const BundleData& b, const SectionFiltration& f,
                                    const SearchBounds& bounds = {});

struct BogomolovReport {
  Rational value;
  bool no_solution_expected = false;  // set when the residual is negative
};

/// Curve-case residual d(d + sum tau_k r_k)/R - sum tau_k d_k; nonnegative
/// whenever solvable data is possible. base_dimension must be 1.
BogomolovReport bogomolov_residual(const BundleData& b, const SectionFiltration& f,
                                   int base_dimension = 1);

/// Render a rational as "p/q" (or "p" when q == 1).
std::string to_string(const Rational& r);

}  // namespace kn

#endif
