#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qel/initial_data.hpp"

using namespace qel;

namespace {

// dr = dz = 0.005, so r0 + lambda0/2 and lambda0/2 are nodes
GridPtr node_grid() { return make_grid(0.4, 1.6, -0.6, 0.6, 241, 241); }

int node_r(const MeridionalGrid& g, double r) { return static_cast<int>(std::lround(g.r_coord(r))); }
int node_z(const MeridionalGrid& g, double z) { return static_cast<int>(std::lround(g.z_coord(z))); }

}  // namespace

TEST(Cutoff, CoreAndExterior) {
  const double l = 0.05;
  EXPECT_EQ(cutoff(0.0, 0.0, l), 1.0);
  EXPECT_EQ(cutoff(2.0 * l, -2.0 * l, l), 1.0);
  EXPECT_EQ(cutoff(5.0 * l, 0.0, l), 0.0);
  EXPECT_EQ(cutoff(0.0, -4.0 * l, l), 0.0);
  const double mid = cutoff(3.0 * l, 0.0, l);
  EXPECT_GT(mid, 0.0);
  EXPECT_LT(mid, 1.0);
  EXPECT_THROW(cutoff(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST(Cutoff, StrictlyDecreasingOnTransition) {
  const double l = 0.05;
  double prev = cutoff(2.0 * l, 0.0, l);
  for (int k = 1; k < 2000; ++k) {
    const double x = l * (2.0 + 2.0 * k / 2000.0);
    const double v = cutoff(x, 0.0, l);
    // the glue is flat to roundoff next to the plateau and the support edge
    if (x > 2.1 * l && x < 3.9 * l)
      EXPECT_LT(v, prev) << x;
    else
      EXPECT_LE(v, prev) << x;
    EXPECT_EQ(v, cutoff(-x, 0.0, l));
    prev = v;
  }
}

TEST(DataParameters, DerivedAmplitudeAndDefaults) {
  DataParameters p;
  EXPECT_DOUBLE_EQ(p.b0(), 64.0 * 0.05 * 0.05);
  EXPECT_TRUE(p.violations().empty());
  p.lambda0 = 0.1;
  p.A_b = 100.0;
  EXPECT_DOUBLE_EQ(p.b0(), 1.0);
}

TEST(DataParameters, ReportsViolatedInequalities) {
  DataParameters p;
  p.lambda0 = 0.08;  // lambda0/r0 > epsilon0
  const auto v = p.violations();
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("lambda0/r0"), std::string::npos);
  EXPECT_THROW(p.validate(), std::invalid_argument);

  DataParameters q;
  q.A_b = 1e9;
  ASSERT_FALSE(q.violations().empty());
  EXPECT_NE(q.violations()[0].find("A_b"), std::string::npos);

  DataParameters z;
  z.Gamma_star0 = 0.0;
  EXPECT_FALSE(z.violations().empty());
}

TEST(InitialFields, DirectSubstitution) {
  DataParameters p;
  auto g = node_grid();
  const auto f = build_initial_fields(p, g);
  const int i = node_r(*g, p.r0 + p.lambda0 / 2.0);
  const int j = node_z(*g, p.lambda0 / 2.0);
  ASSERT_NEAR(g->r(i), p.r0 + p.lambda0 / 2.0, 1e-14);
  ASSERT_NEAR(g->z(j), p.lambda0 / 2.0, 1e-14);
  const double h = p.lambda0 / 2.0;
  EXPECT_NEAR(f.G0.at(i, j), p.a0 * p.lambda0 * p.lambda0 / 4.0, 1e-15);
  EXPECT_NEAR(f.Gamma0.at(i, j), p.Gamma_star0 + 0.5 * p.b0() * h * h * h, 1e-15);

  // nodal line r = r0
  const int i0 = node_r(*g, p.r0);
  for (int jj = 0; jj < g->n_z(); ++jj) EXPECT_EQ(f.G0.at(i0, jj), 0.0);
}

TEST(InitialFields, ZeroOutsideWindow) {
  DataParameters p;
  auto g = node_grid();
  const auto f = build_initial_fields(p, g);
  for (int i = 0; i < g->n_r(); ++i)
    for (int j = 0; j < g->n_z(); ++j) {
      const double x = g->r(i) - p.r0, z = g->z(j);
      if (std::abs(x) >= 4.0 * p.lambda0 || std::abs(z) >= 4.0 * p.lambda0) {
        EXPECT_EQ(f.G0.at(i, j), 0.0);
        EXPECT_EQ(f.Gamma0.at(i, j), 0.0);
      }
    }
  EXPECT_EQ(f.G0.sample(p.r0 + 0.3, 0.1), 0.0);
}

TEST(InitialFields, RejectsWindowTouchingBoundary) {
  DataParameters p;
  auto tight = make_grid(0.85, 1.15, -0.3, 0.3, 61, 61);
  EXPECT_THROW(build_initial_fields(p, tight), SupportError);
  DataParameters bad;
  bad.lambda0 = 0.2;
  EXPECT_THROW(build_initial_fields(bad, node_grid()), std::invalid_argument);
}

TEST(InitialFields, ParityOnCore) {
  DataParameters p;
  auto g = node_grid();
  const auto f = build_initial_fields(p, g);
  const int ic = node_r(*g, p.r0), jc = node_z(*g, 0.0);
  const int m = static_cast<int>(std::round(p.lambda0 / g->dr()));
  for (int a = 0; a <= m; ++a)
    for (int b = 0; b <= m; ++b) {
      const double G = f.G0.at(ic + a, jc + b);
      EXPECT_NEAR(f.G0.at(ic - a, jc + b), -G, 1e-15);
      EXPECT_NEAR(f.G0.at(ic + a, jc - b), -G, 1e-15);
      const double S = f.Gamma0.at(ic + a, jc + b) - p.Gamma_star0;
      EXPECT_NEAR(f.Gamma0.at(ic - a, jc + b) - p.Gamma_star0, -S, 1e-14);
      EXPECT_NEAR(f.Gamma0.at(ic + a, jc - b) - p.Gamma_star0, S, 1e-14);
    }
}

TEST(InitialFields, ScoreIsLinearInAmplitude) {
  auto g = make_grid(0.4, 1.6, -0.6, 0.6, 129, 129);
  DataParameters p;
  const PacketFrame fr{p.r0, p.lambda0, 0.0};
  const double q1 = full_score(build_initial_fields(p, g).G0, fr);
  p.a0 = 2.0;
  p.A_b = 16.0;  // keeps the swirl inequality satisfied
  const double q2 = full_score(build_initial_fields(p, g).G0, fr);
  EXPECT_NEAR(q2 / q1, 2.0, 1e-13);
}

TEST(InitialFields, NeutralTowerCoefficientVanishes) {
  DataParameters p;
  auto g = node_grid();
  const auto f = build_initial_fields(p, g);
  const PacketFrame fr{p.r0, p.lambda0, 0.0};
  const auto fit = jet_fit(f.Gamma0, fr, p.b0(), p.Gamma_star0);
  EXPECT_LT(fit.scaled[8], 1e-10);  // x y^4
  EXPECT_LT(fit.delta_jet, 1e-9);
}

TEST(SelfEntry, ArithmeticIdentities) {
  DataParameters p;
  p.lambda0 = 0.1;
  p.A_b = 100.0;
  p.epsilon0 = 0.1;
  auto g = make_grid(0.0 + 0.1, 1.9, -0.9, 0.9, 193, 193);
  const auto f = build_initial_fields(p, g);
  DiagnosticsOptions opt;
  opt.exterior = false;
  const auto rep = self_entry_check(p, f.G0, f.Gamma0, opt);
  EXPECT_DOUBLE_EQ(rep.b0, 1.0);
  EXPECT_NEAR(rep.mu0, 1e-3, 1e-18);
  EXPECT_NEAR(rep.rho0, 0.1, 1e-17);
  EXPECT_NEAR(rep.C0, 0.01, 1e-17);
  const double cq = oracle::score_constant_closed_form();
  EXPECT_NEAR(rep.Q0 / (cq * 0.01), 1.0, 1e-9);
  // C0 / Q0^2 = b0 / (c_Q^2 a0^2 lambda0^2)
  EXPECT_NEAR(rep.C0 / (rep.Q0 * rep.Q0), 1.0 / (cq * cq * 0.01), 1e-6);
  EXPECT_TRUE(rep.source_dominance_ok);
  EXPECT_TRUE(rep.ok());
}

TEST(SelfEntry, DefaultDatum) {
  DataParameters p;
  auto g = make_grid(0.4, 1.6, -0.6, 0.6, 257, 257);
  const auto f = build_initial_fields(p, g);
  const auto rep = self_entry_check(p, f.G0, f.Gamma0, DiagnosticsOptions{});
  EXPECT_LE(rep.Dsign0, 1e-8);
  EXPECT_LE(rep.Dang0, 1e-8);
  EXPECT_DOUBLE_EQ(rep.mu0, p.A_b * p.a0 * p.a0 * std::pow(p.lambda0, 5) / p.Gamma_star0);
  EXPECT_LE(rep.rho0, p.epsilon0);
  EXPECT_GE(rep.C0, p.kappa * rep.Q0 * rep.Q0);
  EXPECT_NEAR(rep.Q0 / (oracle::score_constant_closed_form() * p.lambda0 * p.lambda0), 1.0, 1e-9);
  EXPECT_TRUE(std::isfinite(rep.E0));
  EXPECT_DOUBLE_EQ(rep.E0, rep.record.delta_jet + rep.mu0 + rep.record.Rprof + rep.rho0 +
                               rep.record.eps_strain);
  EXPECT_TRUE(rep.ok());
}

TEST(SelfEntry, FlagsForcedViolation) {
  DataParameters p;
  auto g = make_grid(0.4, 1.6, -0.6, 0.6, 129, 129);
  const auto f = build_initial_fields(p, g);
  DataParameters q = p;
  q.epsilon0 = 0.01;  // lambda0/r0 = 0.05 > 0.01
  DiagnosticsOptions opt;
  opt.exterior = false;
  const auto rep = self_entry_check(q, f.G0, f.Gamma0, opt);
  EXPECT_FALSE(rep.violations.empty());
  EXPECT_FALSE(rep.ok());
}
