#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "kn/vortexlat.hpp"

using namespace kn::vortex;

namespace {

constexpr double kPi = std::numbers::pi;

U1Connection random_connection(const TorusLattice& lat, int d,
                               std::mt19937_64& rng, double scale = 0.3) {
  U1Connection c = trivial_connection(lat, d);
  std::normal_distribution<double> g(0.0, scale);
  for (auto& v : c.ax) v = g(rng);
  for (auto& v : c.ay) v = g(rng);
  return c;
}

Section random_section(const TorusLattice& lat, std::mt19937_64& rng,
                       double scale = 0.5) {
  Section s = zero_section(lat);
  std::normal_distribution<double> g(0.0, scale);
  for (auto& v : s.phi) v = Cd(g(rng), g(rng));
  return s;
}

double total_charge(const TorusLattice& lat, const U1Connection& conn) {
  double q = 0.0;
  for (double f : curvature(lat, conn)) q += f * lat.h() * lat.h();
  return q;
}

}  // namespace

TEST_CASE("curvature and topological charge") {
  TorusLattice lat{16, 2.0};
  U1Connection flat = trivial_connection(lat, 0);
  for (double f : curvature(lat, flat)) CHECK(f == 0.0);

  U1Connection one = trivial_connection(lat, 1);
  for (double f : curvature(lat, one)) {
    CHECK(f == doctest::Approx(2.0 * kPi / lat.area()).epsilon(1e-14));
  }

  std::mt19937_64 rng(101);
  for (int d : {-2, 0, 1, 3}) {
    U1Connection c = random_connection(lat, d, rng);
    CHECK(std::abs(total_charge(lat, c) - 2.0 * kPi * d) < 1e-12);
  }
  CHECK_THROWS(validate(TorusLattice{4, 1.0}));
}

TEST_CASE("covariant derivative and the pointwise splitting") {
  TorusLattice lat{16, 2.0};
  U1Connection flat = trivial_connection(lat, 0);
  Section constant = constant_section(lat, Cd(0.7, -0.2));
  CovariantDerivative dv = d_A(lat, flat, constant);
  for (const Cd& v : dv.dx) CHECK(std::abs(v) < 1e-14);
  for (const Cd& v : dv.dy) CHECK(std::abs(v) < 1e-14);

  // Norm identity |D phi|^2 = |del|^2 + |dbar|^2 holds per site.
  std::mt19937_64 rng(103);
  U1Connection c = random_connection(lat, 1, rng);
  Section s = random_section(lat, rng);
  CovariantDerivative d = d_A(lat, c, s);
  for (size_t k = 0; k < s.phi.size(); ++k) {
    const double lhs = std::norm(d.dx[k]) + std::norm(d.dy[k]);
    const double rhs = std::norm(d.del[k]) + std::norm(d.dbar[k]);
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, lhs));
  }
}

TEST_CASE("discrete dbar converges to the continuum operator at first order") {
  // Periodic plane wave, compared against its analytic dbar image.
  auto max_err = [](int n) {
    TorusLattice lat{n, 1.0};
    U1Connection flat = trivial_connection(lat, 0);
    Section s = zero_section(lat);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double x = i * lat.h();
        const double y = j * lat.h();
        s.phi[lat.idx(i, j)] = std::exp(Cd(0, 2 * kPi * x + 4 * kPi * y));
      }
    }
    CovariantDerivative d = d_A(lat, flat, s);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Cd exact = (Cd(0, 2 * kPi) - Cd(0, 1) * Cd(0, 4 * kPi)) *
                         s.phi[lat.idx(i, j)] / std::sqrt(2.0);
        err = std::max(err, std::abs(d.dbar[lat.idx(i, j)] - exact));
      }
    }
    return err;
  };
  const double e16 = max_err(16);
  const double e32 = max_err(32);
  const double order = std::log2(e16 / e32);
  CHECK(order > 0.8);
}

TEST_CASE("ymh values and gauge invariance") {
  TorusLattice lat{16, 2.0};

  YmhBreakdown zero = ymh(lat, trivial_connection(lat, 0), zero_section(lat), 0.0);
  CHECK(zero.total == 0.0);

  YmhBreakdown bg = ymh(lat, trivial_connection(lat, 1), zero_section(lat), 0.0);
  const double f0 = 2.0 * kPi / lat.area();
  CHECK(bg.total == doctest::Approx(f0 * f0 * lat.area()).epsilon(1e-12));

  std::mt19937_64 rng(107);
  for (int rep = 0; rep < 5; ++rep) {
    U1Connection c = random_connection(lat, 1, rng);
    Section s = random_section(lat, rng);
    YmhBreakdown b = ymh(lat, c, s, 0.7);
    CHECK(std::abs(b.total - (b.curvature_term + b.kinetic_term + b.potential_term)) <
          1e-12 * std::max(1.0, b.total));

    std::vector<double> chi(s.phi.size());
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& v : chi) v = g(rng);
    U1Connection c2 = c;
    Section s2 = s;
    gauge_transform(lat, chi, c2, s2);
    YmhBreakdown b2 = ymh(lat, c2, s2, 0.7);
    CHECK(std::abs(b2.total - b.total) < 1e-10 * std::max(1.0, b.total));
    CHECK(std::abs(total_charge(lat, c2) - total_charge(lat, c)) < 1e-10);
  }
}

TEST_CASE("decomposition residual") {
  TorusLattice lat{16, 2.0};
  // Zero section: the identity degenerates to definitions and is exact.
  CHECK(decomposition_check(lat, trivial_connection(lat, 2), zero_section(lat),
                            0.4) == 0.0);

  RefinementStudy st = refinement_study(2.0, 0.7);
  REQUIRE(st.residuals.size() == 3);
  CHECK(st.orders[0] > 1.8);
  CHECK(st.orders[1] > 1.8);
  // N=16 vs N=32 ratio close to 4.
  CHECK(st.residuals[0] / st.residuals[1] == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("solver gradient matches finite differences") {
  TorusLattice lat{8, 2.0};
  std::mt19937_64 rng(109);
  U1Connection c = random_connection(lat, 1, rng);
  Section s = random_section(lat, rng);
  const double cc = 0.9;
  Gradient g = solve_gradient(lat, c, s, cc);
  const double eps = 1e-6;
  std::uniform_int_distribution<int> pick(0, lat.N * lat.N - 1);
  for (int rep = 0; rep < 12; ++rep) {
    const int k = pick(rng);
    {
      U1Connection cp = c;
      cp.ax[k] += eps;
      U1Connection cm = c;
      cm.ax[k] -= eps;
      const double fd = (solve_objective(lat, cp, s, cc) -
                         solve_objective(lat, cm, s, cc)) /
                        (2 * eps);
      CHECK(fd == doctest::Approx(g.gax[k]).epsilon(1e-5));
    }
    {
      U1Connection cp = c;
      cp.ay[k] += eps;
      U1Connection cm = c;
      cm.ay[k] -= eps;
      const double fd = (solve_objective(lat, cp, s, cc) -
                         solve_objective(lat, cm, s, cc)) /
                        (2 * eps);
      CHECK(fd == doctest::Approx(g.gay[k]).epsilon(1e-5));
    }
    {
      Section sp = s;
      sp.phi[k] += eps;
      Section sm = s;
      sm.phi[k] -= eps;
      const double fd = (solve_objective(lat, c, sp, cc) -
                         solve_objective(lat, c, sm, cc)) /
                        (2 * eps);
      CHECK(fd == doctest::Approx(g.gphi[k].real()).epsilon(1e-5));
      sp = s;
      sp.phi[k] += Cd(0, eps);
      sm = s;
      sm.phi[k] -= Cd(0, eps);
      const double fdi = (solve_objective(lat, c, sp, cc) -
                          solve_objective(lat, c, sm, cc)) /
                         (2 * eps);
      CHECK(fdi == doctest::Approx(g.gphi[k].imag()).epsilon(1e-5));
    }
  }
}

TEST_CASE("solver outcomes") {
  TorusLattice lat{16, 4.0};

  // d = 0: the constant ansatz solves exactly.
  SolveOptions opts;
  opts.tol = 1e-10;
  SolveResult flat = solve(lat, 0, 0.5, opts);
  REQUIRE(flat.status == SolveResult::Status::Solution);
  CHECK(flat.residual_eq < 1e-10);
  CHECK(flat.residual_dbar < 1e-10);
  CHECK(std::abs(total_charge(lat, flat.conn)) < 1e-12);

  // Zero-section mode: solvable exactly at c = 2 pi d / area.
  SolveOptions zs;
  zs.zero_section_mode = true;
  SolveResult ok = solve(lat, 2, degree_to_c(lat, 2), zs);
  CHECK(ok.status == SolveResult::Status::Solution);
  SolveResult notok = solve(lat, 2, degree_to_c(lat, 2) + 0.1, zs);
  CHECK(notok.status == SolveResult::Status::NoSolution);

  // Below the degree bound: screened out.
  SolveResult blocked = solve(lat, 1, 0.5 * degree_to_c(lat, 1));
  REQUIRE(blocked.status == SolveResult::Status::NoSolution);
  CHECK(blocked.reason.find("degree bound") != std::string::npos);

  // d = 1 above the bound: descent reaches small residuals and conserves
  // the charge exactly.  At N=16 the discrete system has a least-squares
  // residual floor near 2e-5; N=32 resolves the vortex well enough for the
  // residuals to pass below the tolerance.
  TorusLattice fine{32, 4.0};
  SolveOptions vo;
  vo.tol = 1e-6;
  vo.max_iter = 30000;
  SolveResult vortex1 = solve(fine, 1, 1.0, vo);
  REQUIRE(vortex1.status == SolveResult::Status::Solution);
  CHECK(vortex1.residual_eq < 1e-6);
  CHECK(vortex1.residual_dbar < 1e-6);
  CHECK(std::abs(total_charge(fine, vortex1.conn) - 2.0 * kPi) < 1e-12);
  // Mean constraint: the lattice integral of mu stays nonnegative.
  double mu_int = 0.0;
  for (const Cd& v : vortex1.section.phi) {
    mu_int += 0.5 * std::norm(v) * fine.h() * fine.h();
  }
  CHECK(mu_int > -1e-9);

  // The solution is a minimizer against random perturbations.
  std::mt19937_64 rng(113);
  const double base = ymh(fine, vortex1.conn, vortex1.section, 1.0).total;
  std::normal_distribution<double> g(0.0, 0.05);
  for (int rep = 0; rep < 50; ++rep) {
    U1Connection pc = vortex1.conn;
    Section ps = vortex1.section;
    for (auto& v : pc.ax) v += g(rng);
    for (auto& v : pc.ay) v += g(rng);
    for (auto& v : ps.phi) v += Cd(g(rng), g(rng));
    CHECK(ymh(fine, pc, ps, 1.0).total >= base - 1e-9);
  }
}

TEST_CASE("state serialization round-trip") {
  TorusLattice lat{8, 1.5};
  std::mt19937_64 rng(127);
  U1Connection c = random_connection(lat, 1, rng);
  Section s = random_section(lat, rng);
  const std::string path = "vortex_state_test.bin";
  save_state(path, lat, c, s);
  LoadedState st = load_state(path);
  CHECK(st.lat.N == lat.N);
  CHECK(st.lat.L == doctest::Approx(lat.L));
  CHECK(st.conn.d == 1);
  for (size_t k = 0; k < s.phi.size(); ++k) {
    CHECK(st.conn.ax[k] == c.ax[k]);
    CHECK(st.conn.ay[k] == c.ay[k]);
    CHECK(st.section.phi[k] == s.phi[k]);
  }
  std::remove(path.c_str());
}
