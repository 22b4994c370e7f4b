#ifndef KN_KEMPFNESS_HPP
#define KN_KEMPFNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "kn/targets.hpp"

namespace kn {

/// Value of the integral of the moment map along the Cartan geodesic.
struct PsiRecord {
  double value = 0.0;
  double error_estimate = 0.0;
  AlgebraElement generator;   // s in k with g ~ k_prefix * e^{is}
  GroupElement unitary_prefix;
  bool tolerance_reached = true;
};

/// Psi(x, g) by adaptive Gauss-Legendre quadrature of lambda_t over [0,1].
PsiRecord psi(const Target& t, const TargetPoint& x, const GroupElement& g,
              double quad_tol = 1e-9);

/// |Psi(x,g) + Psi(gx,h) - Psi(x,hg)|, a property probe.
double psi_cocycle_check(const Target& t, const TargetPoint& x,
                         const GroupElement& g, const GroupElement& h,
                         double quad_tol = 1e-9);

struct FlowOptions {
  double step = 0.5;
  int max_iter = 2000;
  double tol = 1e-9;
  double divergence_budget = 50.0;
  bool record_trace = false;
};

struct FlowTraceRow {
  int iter;
  double residual;
  double psi_value;
  double length_log;
};

struct FlowResult {
  enum class Status { Converged, DivergenceWitness, MaxIter };
  Status status = Status::MaxIter;
  GroupElement g;            // accumulated group element
  TargetPoint x;             // final point
  double residual = 0.0;     // |mu(gx) - c|
  std::optional<AlgebraElement> witness;  // unit-norm direction in k
  double psi_value = 0.0;
  int iterations = 0;
  bool nonsimple_stabilizer = false;
  std::vector<FlowTraceRow> trace;
};

/// Moment-map flow toward mu = c inside the complexified orbit. c must be
/// central for the acting group.
FlowResult minimize_psi(const Target& t, const TargetPoint& x,
                        const ActingGroup& group, const AlgebraElement& c,
                        const FlowOptions& opts = {});

struct StabilityVerdict {
  enum class Kind { Stable, Unstable, Inconclusive };
  Kind kind = Kind::Inconclusive;
  std::optional<FlowResult> minimizer;     // Stable
  std::optional<AlgebraElement> witness;   // Unstable
  std::optional<double> witness_weight;    // closed-form lambda^{mu-c} <= 0
  std::string diagnostics;
};

/// Two-stage test: closed-form screen over torus-diagonalizable directions,
/// then a flow probe. Inconclusive is an honest outcome.
StabilityVerdict stability_test(const Target& t, const TargetPoint& x,
                                const ActingGroup& group, const AlgebraElement& c,
                                const FlowOptions& opts = {});

/// Chordal distance between points modulo the representation gauge
/// (lift phase, frame rotation): principal-angle based, no sampling.
double korbit_distance(const Target& t, const TargetPoint& x, const TargetPoint& y);

/// Distance modulo the acting group's compact part as well; for torus groups
/// the aligning element is recovered in closed form from projector phases.
double korbit_distance(const Target& t, const TargetPoint& x, const TargetPoint& y,
                       const ActingGroup& group);

/// lambda^{mu-c}(x; s) via the closed form.
ExtendedWeight shifted_maximal_weight(const Target& t, const TargetPoint& x,
                                      const AlgebraElement& s,
                                      const AlgebraElement& c);

}  // namespace kn

#endif
