#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fracfield/model.hpp"
#include "support.hpp"

using namespace fracfield;
using fracfield::testing::noisy_bump;
using fracfield::testing::small_disk_basis;

TEST(PowerNonlinearity, PowerRuleValues) {
  const PowerNonlinearity nl;
  EXPECT_DOUBLE_EQ(nl.h(3.0), 9.0);
  EXPECT_DOUBLE_EQ(nl.H(3.0), 9.0);
  EXPECT_DOUBLE_EQ(nl.dh(3.0), 6.0);
  EXPECT_EQ(nl.h(-1.0), 0.0);
  EXPECT_EQ(nl.H(-1.0), 0.0);
  EXPECT_EQ(nl.dh(-1.0), 0.0);
  EXPECT_EQ(nl.dh(0.0), 0.0);
  for (double s : {1e-2, 1e-4, 1e-6}) EXPECT_NEAR(nl.h(s) / s, s, 1e-15);
  EXPECT_DOUBLE_EQ(nl.two_star_alpha(), 4.0);
}

TEST(Hypotheses, DefaultInstancePassesEverything) {
  const auto rep = check_hypotheses(PowerNonlinearity{});
  EXPECT_TRUE(rep.all_passed());
  for (const char* name : {"H0", "H1", "H2", "H3", "H4", "H1'", "H2'"})
    EXPECT_TRUE(rep[name].passed) << name;
}

TEST(Hypotheses, CubicPotentialHasZeroArMargin) {
  const auto rep = check_hypotheses(PowerNonlinearity{.p = 2.0, .theta = 3.0});
  EXPECT_NEAR(rep["H3"].margin, 0.0, 1e-12);
  EXPECT_TRUE(rep["H3"].passed);
}

TEST(Hypotheses, SublinearPowerFailsMonotonicity) {
  const auto rep = check_hypotheses(PowerNonlinearity{.p = 0.5, .theta = 1.5});
  EXPECT_FALSE(rep["H4"].passed);
  EXPECT_LT(rep["H4"].margin, 0.0);
  EXPECT_FALSE(rep.all_passed());
}

TEST(Hypotheses, SupercriticalGrowthFails) {
  const auto rep = check_hypotheses(PowerNonlinearity{.p = 2.0, .theta = 3.0, .q = 4.5});
  EXPECT_FALSE(rep["H2"].passed);
}

TEST(Energy, ZeroFieldHasZeroValueAndGradient) {
  const auto basis = small_disk_basis();
  const auto rep = energy(basis, PowerNonlinearity{}, Field::zero(basis));
  EXPECT_EQ(rep.value, 0.0);
  EXPECT_EQ(rep.grad_norm, 0.0);
  EXPECT_EQ(rep.nehari, 0.0);
}

TEST(Energy, GradientMatchesCentralDifferences) {
  const auto basis = small_disk_basis();
  const PowerNonlinearity nl;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  const auto u = Field::from_values(basis, noisy_bump(basis.domain(), rng, 0.3));
  const auto rep = energy(basis, nl, u);
  const double step = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd d(u.coeffs().size());
    for (auto& x : d) x = n(rng);
    d /= d.norm();
    const double plus = energy_value(basis, nl, Field::from_coeffs(basis, u.coeffs() + step * d));
    const double minus = energy_value(basis, nl, Field::from_coeffs(basis, u.coeffs() - step * d));
    const double fd = (plus - minus) / (2 * step);
    const double exact = rep.gradient.dot(d);
    EXPECT_LE(std::abs(fd - exact), 1e-6 * rep.grad_norm) << "trial " << trial;
  }
}

TEST(Energy, RayDerivativeIsNehariFunctional) {
  const auto basis = small_disk_basis();
  std::mt19937_64 rng(3);
  for (double p : {2.0, 2.5}) {
    const PowerNonlinearity nl{.p = p, .theta = p + 1, .q = 3.7};
    const auto u = Field::from_values(basis, noisy_bump(basis.domain(), rng, 0.2));
    const auto rep = energy(basis, nl, u);
    // I(tu) = t^2 Q/2 - t^(p+1) P/(p+1) with P = int H(u)(p+1).
    const double Q = 2 * rep.quadratic_part;
    const double P = (p + 1) * rep.potential_part;
    EXPECT_NEAR(rep.nehari, Q - P, 1e-12 * Q);
    const double step = 1e-5;
    const double fd = (energy_value(basis, nl, u.scaled_by(1 + step)) -
                       energy_value(basis, nl, u.scaled_by(1 - step))) /
                      (2 * step);
    EXPECT_NEAR(fd, rep.nehari, 1e-6 * Q);
  }
}

TEST(Energy, ValueIsQuadraticMinusPotential) {
  const auto basis = small_disk_basis();
  std::mt19937_64 rng(5);
  for (int i = 0; i < 10; ++i) {
    const auto u = Field::from_values(basis, noisy_bump(basis.domain(), rng, 0.5));
    const auto rep = energy(basis, PowerNonlinearity{}, u);
    EXPECT_NEAR(rep.value, rep.quadratic_part - rep.potential_part, 1e-12);
    EXPECT_NEAR(rep.value, energy_value(basis, PowerNonlinearity{}, u), 1e-12);
    EXPECT_NEAR(rep.quadratic_part, 0.5 * alpha_norm_sq(basis, u), 1e-12);
  }
}

TEST(Energy, MountainPassGeometryAlongRays) {
  const auto basis = small_disk_basis();
  const PowerNonlinearity nl;
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto u = Field::from_values(basis, noisy_bump(basis.domain(), rng, 0.4));
    const auto rep = energy(basis, nl, u);
    const double Q = 2 * rep.quadratic_part;
    double P = 0.0;
    for (double v : u.values()) P += nl.h(v) * v;
    P *= basis.weight();
    const double t_star = Q / P;
    int rises = 0, falls = 0, switches = 0;
    double prev = 0.0;
    int last = +1;
    for (int i = 1; i <= 4000; ++i) {
      const double t = 4.0 * t_star * i / 4000;
      const double val = energy_value(basis, nl, u.scaled_by(t));
      const int dir = val > prev ? +1 : -1;
      (dir > 0 ? rises : falls)++;
      if (dir != last) ++switches;
      last = dir;
      if (i == 1) EXPECT_GT(val, 0.0);
      prev = val;
    }
    EXPECT_EQ(switches, 1) << "trial " << trial;
    EXPECT_GT(rises, 0);
    EXPECT_GT(falls, 0);
    EXPECT_LT(energy_value(basis, nl, u.scaled_by(50 * t_star)), -1e3 * Q * t_star * t_star);
  }
}

TEST(Energy, InvariantUnderGridSymmetries) {
  const auto basis = small_disk_basis(2.0, 0.25);
  const PowerNonlinearity nl;
  std::mt19937_64 rng(23);
  const Eigen::VectorXd v = noisy_bump(basis.domain(), rng, 0.3);
  const double ref = energy_value(basis, nl, Field::from_values(basis, v));
  const auto perms = basis.domain().symmetry_permutations();
  ASSERT_EQ(perms.size(), 8u);
  for (const auto& perm : perms) {
    Eigen::VectorXd g(v.size());
    for (Eigen::Index k = 0; k < v.size(); ++k) g[k] = v[perm[static_cast<std::size_t>(k)]];
    EXPECT_NEAR(energy_value(basis, nl, Field::from_values(basis, g)), ref,
                1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Energy, RejectsFieldFromAnotherDomain) {
  const auto a = small_disk_basis(1.5, 0.2);
  const auto b = small_disk_basis(1.5, 0.25);
  const auto kind = fracfield::testing::thrown_kind(
      [&] { energy(a, PowerNonlinearity{}, Field::zero(b)); });
  ASSERT_TRUE(kind.has_value());
  EXPECT_EQ(*kind, ErrorKind::DomainMismatch);
}
