#ifndef KN_VORTEXLAT_HPP
#define KN_VORTEXLAT_HPP

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace kn {
namespace vortex {

using Cd = std::complex<double>;

// Finite-difference U(1) vortex equations on a flat square torus.
//
// The integer degree is carried entirely by a fixed background of link
// phases whose plaquette flux is exactly 2*pi*d/N^2 (one corner plaquette
// differs by the literal 2*pi*d, invisible mod 2*pi); the dynamical field a
// is a periodic real-valued 1-form perturbation and phi is a plain periodic
// complex site field. The quasi-periodic boundary factor of a degree-d
// section is absorbed into the seam links of the background, whose boundary
// holonomy is e^{2*pi*i*d}.
//
// Conventions, fixed once:
//   mu(phi)    = |phi|^2 / 2          (real coordinate of the moment value)
//   dbar, del  = (D_x -+ i D_y)/sqrt(2), so |D phi|^2 = |del|^2 + |dbar|^2
//                holds exactly per site.
//   curvature  = 2*pi*d/L^2 + curl(a), curl by forward differences.
// The scalar c corresponds to the integer-degree unit of the exact
// arithmetic layer through c = 2*pi*d/area for the zero section; the
// conversion constant 2*pi/area is exported below.

struct TorusLattice {
  int N;     // sites per side, >= 8
  double L;  // side length

  double h() const { return L / N; }
  double area() const { return L * L; }
  int idx(int i, int j) const {
    i %= N;
    j %= N;
    if (i < 0) i += N;
    if (j < 0) j += N;
    return i * N + j;
  }
};

void validate(const TorusLattice& lat);

/// Conversion between the scalar c and integer-degree units.
double degree_to_c(const TorusLattice& lat, long long d);

struct U1Connection {
  int d = 0;               // integer degree, fixed at construction
  std::vector<double> ax;  // N^2 link values, x-directed, periodic
  std::vector<double> ay;  // N^2 link values, y-directed, periodic
};

U1Connection trivial_connection(const TorusLattice& lat, int d);

/// Background link angle including the degree twist (seam construction).
double background_angle_x(const TorusLattice& lat, int d, int i, int j);
double background_angle_y(const TorusLattice& lat, int d, int i, int j);

struct Section {
  std::vector<Cd> phi;  // N^2 site values, periodic in the twisted gauge
};

Section zero_section(const TorusLattice& lat);
Section constant_section(const TorusLattice& lat, Cd value);

/// Scalar curvature density per plaquette: 2*pi*d/L^2 plus the discrete
/// curl of a. The h^2-weighted sum is 2*pi*d exactly.
std::vector<double> curvature(const TorusLattice& lat, const U1Connection& conn);

struct CovariantDerivative {
  std::vector<Cd> dx;    // D_x phi per site
  std::vector<Cd> dy;    // D_y phi per site
  std::vector<Cd> del;   // (D_x + i D_y)/sqrt(2)
  std::vector<Cd> dbar;  // (D_x - i D_y)/sqrt(2)
};

CovariantDerivative d_A(const TorusLattice& lat, const U1Connection& conn,
                        const Section& s);

struct YmhBreakdown {
  double total = 0;
  double curvature_term = 0;
  double kinetic_term = 0;
  double potential_term = 0;
  double residual_term = 0;     // |LambdaF + mu - c|^2 with mu plaquette-averaged
  double dbar_term = 0;         // 2 |dbar phi|^2
  double topological_term = 0;  // 2 c (2 pi d) + coupling-class integral terms
};

/// Yang-Mills-Higgs value and its decomposition pieces; all norms are
/// h^2-weighted sums.
YmhBreakdown ymh(const TorusLattice& lat, const U1Connection& conn,
                 const Section& s, double c);

/// |total - (residual + dbar + topological)|; the mismatch comes only from
/// evaluating mu at plaquette centers by corner averaging, and is O(h^2) on
/// smooth data and exactly 0 for the zero section.
double decomposition_check(const TorusLattice& lat, const U1Connection& conn,
                           const Section& s, double c);

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 20000;
  std::uint64_t seed = 1;
  bool zero_section_mode = false;
  bool record_trace = false;
};

struct SolveTraceRow {
  int iter;
  double objective;
  double residual_eq;    // ||LambdaF + mu - c||
  double residual_dbar;  // sqrt(2)*||dbar phi||
};

struct SolveResult {
  enum class Status { Solution, NoSolution, MaxIter };
  Status status = Status::MaxIter;
  std::string reason;  // set for NoSolution
  U1Connection conn;
  Section section;
  double residual_eq = 0;
  double residual_dbar = 0;
  double bradlow_slack = 0;  // c*area - 2*pi*d, the mean-constraint margin
  int iterations = 0;
  std::vector<SolveTraceRow> trace;
};

/// Mean-constraint screen, then descent on the non-topological part of the
/// decomposition: ||LambdaF + mu - c||^2 + 2||dbar phi||^2.
SolveResult solve(const TorusLattice& lat, int d, double c,
                  const SolveOptions& opts = {});

struct Gradient {
  std::vector<double> gax;
  std::vector<double> gay;
  std::vector<Cd> gphi;  // 2 * dJ/d(conj phi)
};

/// Objective of the solver and its analytic gradient (exposed for
/// finite-difference verification).
double solve_objective(const TorusLattice& lat, const U1Connection& conn,
                       const Section& s, double c);
Gradient solve_gradient(const TorusLattice& lat, const U1Connection& conn,
                        const Section& s, double c);

/// Gauge transformation by periodic site phases chi: phi -> e^{i chi} phi,
/// links shifted compatibly. Leaves ymh invariant.
void gauge_transform(const TorusLattice& lat, const std::vector<double>& chi,
                     U1Connection& conn, Section& s);

struct RefinementStudy {
  std::vector<int> sizes;
  std::vector<double> residuals;
  std::vector<double> orders;  // log2 ratios between consecutive sizes
};

/// Decomposition residual on fixed smooth data sampled at N, 2N, 4N.
RefinementStudy refinement_study(double L, double c, int base_n = 16);

/// Flat binary state with a one-line JSON header
/// (N, L, d, order: ax, ay, re phi, im phi, row-major).
void save_state(const std::string& path, const TorusLattice& lat,
                const U1Connection& conn, const Section& s);
struct LoadedState {
  TorusLattice lat;
  U1Connection conn;
  Section section;
};
LoadedState load_state(const std::string& path);

}  // namespace vortex
}  // namespace kn

#endif
