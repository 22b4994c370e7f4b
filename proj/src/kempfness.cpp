#include "kn/kempfness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace kn {

namespace {

// 10-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr int kGlN = 10;
constexpr double kGlNode[kGlN] = {
    -0.9739065285171717, -0.8650633666889845, -0.6794095682990244,
    -0.4333953941292472, -0.1488743389816312, 0.1488743389816312,
    0.4333953941292472,  0.6794095682990244,  0.8650633666889845,
    0.9739065285171717};
constexpr double kGlWeight[kGlN] = {
    0.0666713443086881, 0.1494513491505806, 0.2190863625159820,
    0.2692667193099963, 0.2955242247147529, 0.2955242247147529,
    0.2692667193099963, 0.2190863625159820, 0.1494513491505806,
    0.0666713443086881};

double gl10(const std::function<double(double)>& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < kGlN; ++i) acc += kGlWeight[i] * f(mid + half * kGlNode[i]);
  return half * acc;
}

struct QuadResult {
  double value;
  double error;
  bool ok;
};

QuadResult adaptive_gl(const std::function<double(double)>& f, double a, double b,
                       double tol, int depth) {
  const double whole = gl10(f, a, b);
  const double mid = 0.5 * (a + b);
  const double left = gl10(f, a, mid);
  const double right = gl10(f, mid, b);
  const double err = std::abs(left + right - whole);
  // Below the roundoff floor of the integrand further halving only chases
  // noise, so accept once the discrepancy is at that floor even if the
  // requested slice of the tolerance budget is smaller.
  const double floor_ =
      64.0 * std::numeric_limits<double>::epsilon() *
      (std::abs(left) + std::abs(right) + std::abs(whole) + 1.0);
  if (err <= std::max(tol, floor_) || depth >= 24) {
    return {left + right, err, err <= std::max(tol, floor_)};
  }
  QuadResult l = adaptive_gl(f, a, mid, 0.5 * tol, depth + 1);
  QuadResult r = adaptive_gl(f, mid, b, 0.5 * tol, depth + 1);
  return {l.value + r.value, l.error + r.error, l.ok && r.ok};
}

// Per-component projectors used for gauge-invariant distances: the point
// itself for linear targets, otherwise orthogonal projections onto the
// spanned planes.
std::vector<Matrix> component_projectors(const Target& t, const TargetPoint& x) {
  std::vector<Matrix> out;
  std::visit(
      [&](auto&& tt) {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          out.push_back(x.frame * x.frame.adjoint());
        } else if constexpr (std::is_same_v<T, ProjectiveTarget> ||
                             std::is_same_v<T, GrassmannTarget>) {
          out.push_back(x.frame * x.frame.adjoint());
        } else if constexpr (std::is_same_v<T, FlagTarget>) {
          for (int r : tt.ranks) {
            Matrix f = x.frame.leftCols(r);
            out.push_back(f * f.adjoint());
          }
        }
      },
      t.v);
  return out;
}

double projector_distance(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    d = std::max(d, (a[i] - b[i]).norm() / std::sqrt(2.0));
  }
  return d;
}

// Tangent vectors of the infinitesimal action at x, one stacked block per
// flag component, with the gauge directions quotiented out.
std::vector<Matrix> action_tangent(const Target& t, const TargetPoint& x,
                                   const AlgebraElement& b) {
  std::vector<Matrix> out;
  std::visit(
      [&](auto&& tt) {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, LinearTarget>) {
          out.push_back(b.mat * x.frame);
        } else if constexpr (std::is_same_v<T, ProjectiveTarget> ||
                             std::is_same_v<T, GrassmannTarget>) {
          Matrix pi = x.frame * x.frame.adjoint();
          Matrix id = Matrix::Identity(pi.rows(), pi.cols());
          out.push_back((id - pi) * b.mat * x.frame);
        } else if constexpr (std::is_same_v<T, FlagTarget>) {
          Matrix id = Matrix::Identity(tt.R, tt.R);
          for (int r : tt.ranks) {
            Matrix f = x.frame.leftCols(r);
            Matrix pi = f * f.adjoint();
            out.push_back((id - pi) * b.mat * f);
          }
        }
      },
      t.v);
  return out;
}

// Dimension of the kernel of the infinitesimal action of the group at x.
int stabilizer_algebra_dim(const Target& t, const TargetPoint& x,
                           const ActingGroup& group) {
  const int d = group.algebra_dim();
  if (d == 0) return 0;
  std::vector<std::vector<Matrix>> tangents;
  tangents.reserve(d);
  for (const auto& b : group.basis()) tangents.push_back(action_tangent(t, x, b));
  Eigen::MatrixXd gram(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      double v = 0.0;
      for (size_t a = 0; a < tangents[i].size(); ++a) {
        v += (tangents[i][a].adjoint() * tangents[j][a]).trace().real();
      }
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int kernel = 0;
  for (int i = 0; i < d; ++i) {
    if (es.eigenvalues()(i) < 1e-10 * scale) ++kernel;
  }
  return kernel;
}

// Diagonal phase alignment recovered from the entries of two conjugate
// Hermitian matrices: b ~ diag(e^{i theta}) a diag(e^{-i theta}). Phases are
// propagated over a spanning forest of entries with usable modulus.
Eigen::VectorXd recover_phases(const Matrix& a, const Matrix& b, double tol = 1e-9) {
  const int m = static_cast<int>(a.rows());
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(m);
  std::vector<bool> visited(m, false);
  for (int root = 0; root < m; ++root) {
    if (visited[root]) continue;
    visited[root] = true;
    std::vector<int> queue = {root};
    while (!queue.empty()) {
      int j = queue.back();
      queue.pop_back();
      for (int k = 0; k < m; ++k) {
        if (visited[k]) continue;
        if (std::min(std::abs(a(j, k)), std::abs(b(j, k))) <= tol) continue;
        theta(k) = theta(j) - std::arg(b(j, k) / a(j, k));
        visited[k] = true;
        queue.push_back(k);
      }
    }
  }
  return theta;
}

AlgebraElement normalized_direction(const AlgebraElement& s) {
  const double n = alg_norm(s);
  return AlgebraElement::skew(s.mat / (n > 0 ? n : 1.0));
}

}  // namespace

PsiRecord psi(const Target& t, const TargetPoint& x, const GroupElement& g,
              double quad_tol) {
  t.validate();
  if (g.dim() != t.ambient_dim()) {
    throw DimensionMismatch("psi: group element dimension mismatch");
  }
  auto [k, s_herm] = cartan_decompose(g);
  PsiRecord rec;
  rec.unitary_prefix = k;
  // g = k e^{i u} with u = -i s skew; the integral only sees the polar part.
  AlgebraElement u = AlgebraElement::skew(Complex(0.0, -1.0) * s_herm.mat);
  rec.generator = u;
  if (alg_norm(u) < 1e-15) {
    rec.value = 0.0;
    rec.error_estimate = 0.0;
    return rec;
  }
  auto integrand = [&](double time) { return lambda_t(t, x, u, time); };
  QuadResult q = adaptive_gl(integrand, 0.0, 1.0, quad_tol, 0);
  rec.value = q.value;
  rec.error_estimate = q.error;
  rec.tolerance_reached = q.ok;
  return rec;
}

double psi_cocycle_check(const Target& t, const TargetPoint& x,
                         const GroupElement& g, const GroupElement& h,
                         double quad_tol) {
  TargetPoint gx = act(t, g, x);
  GroupElement hg(h.mat * g.mat);
  // Three quadratures share the budget so the combined residual stays
  // within twice the requested tolerance.
  const double tol = quad_tol / 2.0;
  double lhs = psi(t, x, g, tol).value + psi(t, gx, h, tol).value;
  double rhs = psi(t, x, hg, tol).value;
  return std::abs(lhs - rhs);
}

FlowResult minimize_psi(const Target& t, const TargetPoint& x,
                        const ActingGroup& group, const AlgebraElement& c,
                        const FlowOptions& opts) {
  t.validate();
  const int m = t.ambient_dim();
  if (group.dim() != m || c.dim() != m) {
    throw DimensionMismatch("minimize_psi: dimension mismatch");
  }
  if (!group.is_central(c, 1e-10)) {
    throw std::invalid_argument("minimize_psi: c must be central for the group");
  }

  FlowResult res;
  res.g = GroupElement::identity(m);
  res.x = x;
  double step = opts.step;
  double psi_val = 0.0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    AlgebraElement mu = group.project(moment_element(t, res.x));
    AlgebraElement nu = AlgebraElement::skew(mu.mat - c.mat);
    const double r = alg_norm(nu);
    const double glen = length_log(res.g);
    if (opts.record_trace) res.trace.push_back({iter, r, psi_val, glen});
    res.residual = r;
    res.psi_value = psi_val;
    res.iterations = iter;

    if (r < opts.tol) {
      res.status = FlowResult::Status::Converged;
      res.nonsimple_stabilizer = stabilizer_algebra_dim(t, res.x, group) > 0;
      return res;
    }
    if (glen > opts.divergence_budget) {
      res.status = FlowResult::Status::DivergenceWitness;
      auto [k, s_herm] = cartan_decompose(res.g);
      AlgebraElement dir =
          group.project(AlgebraElement::skew(Complex(0.0, -1.0) * s_herm.mat));
      res.witness = normalized_direction(dir);
      return res;
    }

    AlgebraElement s = AlgebraElement::skew(-nu.mat);
    double alpha = step;
    bool accepted = false;
    TargetPoint x_trial;
    double r_trial = r;
    for (int bt = 0; bt < 48; ++bt) {
      x_trial = flow(t, res.x, s, alpha);
      AlgebraElement mu_t = group.project(moment_element(t, x_trial));
      r_trial = alg_norm(AlgebraElement::skew(mu_t.mat - c.mat));
      if (r_trial < r) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // The residual refuses to decrease along its own negative gradient.
      // With the residual still clearly positive this is a stall at a
      // critical point outside the zero level: the descent direction itself
      // (or, after a long excursion, the accumulated log of the group
      // trajectory) is a destabilizing axis.
      if (r > 10.0 * opts.tol) {
        res.status = FlowResult::Status::DivergenceWitness;
        AlgebraElement dir = s;
        if (glen > 1.0) {
          auto [k, s_herm] = cartan_decompose(res.g);
          dir = group.project(
              AlgebraElement::skew(Complex(0.0, -1.0) * s_herm.mat));
        }
        res.witness = normalized_direction(dir);
      } else {
        res.status = FlowResult::Status::MaxIter;
      }
      return res;
    }

    // Increment of the shifted moment integral along this substep.
    const double shift = pairing(c, s).real();
    auto seg = [&](double time) { return lambda_t(t, res.x, s, time) - shift; };
    psi_val += gl10(seg, 0.0, alpha);

    res.g = GroupElement(mat_exp(Complex(0.0, 1.0) * alpha * s.mat) * res.g.mat);
    res.x = x_trial;
    step = (alpha >= step) ? std::min(1.5 * alpha, 4.0) : alpha * 1.5;
  }
  res.status = FlowResult::Status::MaxIter;
  return res;
}

ExtendedWeight shifted_maximal_weight(const Target& t, const TargetPoint& x,
                                      const AlgebraElement& s,
                                      const AlgebraElement& c) {
  ExtendedWeight w = maximal_weight(t, x, s);
  if (w.infinite) return w;
  w.value -= pairing(c, s).real();
  return w;
}

StabilityVerdict stability_test(const Target& t, const TargetPoint& x,
                                const ActingGroup& group, const AlgebraElement& c,
                                const FlowOptions& opts) {
  t.validate();
  StabilityVerdict verdict;
  const int m = t.ambient_dim();

  // Stage 1: closed-form screen. Directions: the group basis, and for torus
  // actions the coordinate-subset rays (the faces of the support polytope lie
  // along them). Only a strictly negative finite weight is decisive.
  std::vector<AlgebraElement> candidates;
  for (const auto& b : group.basis()) {
    candidates.push_back(b);
    candidates.push_back(AlgebraElement::skew(-b.mat));
  }
  if (group.kind() == ActingGroup::Kind::DiagonalTorus && m <= 12) {
    const int lim = 1 << m;
    for (int mask = 1; mask < lim - 1; ++mask) {
      Vector diag = Vector::Zero(m);
      for (int j = 0; j < m; ++j) {
        if (mask & (1 << j)) diag(j) = Complex(0.0, 1.0);
      }
      AlgebraElement raw = AlgebraElement::skew(Matrix(diag.asDiagonal()));
      AlgebraElement proj = group.project(raw);
      if (alg_norm(proj) < 1e-12) continue;
      candidates.push_back(normalized_direction(proj));
      candidates.push_back(AlgebraElement::skew(-candidates.back().mat));
    }
  }
  for (const auto& s : candidates) {
    ExtendedWeight w = shifted_maximal_weight(t, x, s, c);
    if (!w.infinite && w.value < -1e-10) {
      verdict.kind = StabilityVerdict::Kind::Unstable;
      verdict.witness = normalized_direction(s);
      ExtendedWeight wn = shifted_maximal_weight(t, x, *verdict.witness, c);
      verdict.witness_weight = wn.value;
      verdict.diagnostics = "closed-form screen: strictly negative weight";
      return verdict;
    }
  }

  // Stage 2: flow probe.
  FlowResult fr = minimize_psi(t, x, group, c, opts);
  switch (fr.status) {
    case FlowResult::Status::Converged:
      verdict.kind = StabilityVerdict::Kind::Stable;
      verdict.minimizer = fr;
      verdict.diagnostics = fr.nonsimple_stabilizer
                                ? "converged; stabilizer has positive dimension"
                                : "converged";
      return verdict;
    case FlowResult::Status::DivergenceWitness: {
      ExtendedWeight w = shifted_maximal_weight(t, x, *fr.witness, c);
      if (!w.infinite && w.value <= 1e-8) {
        verdict.kind = StabilityVerdict::Kind::Unstable;
        verdict.witness = fr.witness;
        verdict.witness_weight = w.value;
        verdict.diagnostics = "flow diverged; witness weight nonpositive";
      } else {
        verdict.kind = StabilityVerdict::Kind::Inconclusive;
        verdict.diagnostics =
            "flow diverged but the witness weight is not certifiably nonpositive";
      }
      return verdict;
    }
    case FlowResult::Status::MaxIter:
      verdict.kind = StabilityVerdict::Kind::Inconclusive;
      verdict.diagnostics = "flow did not settle within the iteration budget";
      return verdict;
  }
  return verdict;
}

double korbit_distance(const Target& t, const TargetPoint& x, const TargetPoint& y) {
  t.validate();
  if (std::holds_alternative<LinearTarget>(t.v)) {
    return (x.frame - y.frame).norm();
  }
  return projector_distance(component_projectors(t, x), component_projectors(t, y));
}

double korbit_distance(const Target& t, const TargetPoint& x, const TargetPoint& y,
                       const ActingGroup& group) {
  t.validate();
  if (group.kind() == ActingGroup::Kind::FullUnitary) {
    // The full unitary group acts transitively on frames of fixed rank
    // profile; for linear targets only the radius survives.
    if (std::holds_alternative<LinearTarget>(t.v)) {
      return std::abs(x.frame.norm() - y.frame.norm());
    }
    return 0.0;
  }
  // Torus alignment: recover diagonal phases from the densest gauge-invariant
  // conjugation data, then compare after applying them.
  std::vector<Matrix> px = component_projectors(t, x);
  std::vector<Matrix> py = component_projectors(t, y);
  Matrix a = Matrix::Zero(group.dim(), group.dim());
  Matrix b = a;
  for (size_t i = 0; i < px.size(); ++i) {
    a += px[i];
    b += py[i];
  }
  Eigen::VectorXd theta = recover_phases(a, b);
  Vector phases(theta.size());
  for (int j = 0; j < theta.size(); ++j) {
    phases(j) = std::exp(Complex(0.0, theta(j)));
  }
  GroupElement g{Matrix(phases.asDiagonal())};
  TargetPoint xg = act(t, g, x);
  if (std::holds_alternative<LinearTarget>(t.v)) {
    return (xg.frame - y.frame).norm();
  }
  return projector_distance(component_projectors(t, xg), py);
}

}  // namespace kn
