#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fracfield/spectral.hpp"

using namespace fracfield;

namespace {

std::vector<double> square_closed_form(int n) {
  const double h = 1.0 / (n + 1);
  std::vector<double> mu;
  for (int j = 1; j <= n; ++j)
    for (int k = 1; k <= n; ++k) {
      const double a = std::sin(j * std::numbers::pi * h / 2), b = std::sin(k * std::numbers::pi * h / 2);
      mu.push_back(4.0 / (h * h) * (a * a + b * b));
    }
  std::sort(mu.begin(), mu.end());
  return mu;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

GridDomain small_disk() { return build_domain(Shape::disk, ShapeParams::disk(1.0), 2.0, 0.2); }

}  // namespace

TEST(Decompose, UnitSquareMatchesDiscreteClosedForm) {
  const int n = 16;
  const auto dom = build_domain(Shape::rectangle, ShapeParams::rectangle(1, 1), 1.0, 1.0 / (n + 1));
  const auto basis = assemble_and_decompose(dom, kFullBasis, 0.5);
  const auto exact = square_closed_form(n);
  ASSERT_EQ(basis.modes(), static_cast<Eigen::Index>(exact.size()));
  for (std::size_t i = 0; i < exact.size(); ++i)
    EXPECT_NEAR(basis.mu()[static_cast<Eigen::Index>(i)] / exact[i], 1.0, 1e-10) << "mode " << i;
}

TEST(Decompose, LowestSquareModeConvergesAtSecondOrder) {
  const double target = 2 * std::numbers::pi * std::numbers::pi;
  std::vector<double> hs{1.0 / 17, 1.0 / 33, 1.0 / 65}, mus;
  for (double h : hs) {
    const auto dom = build_domain(Shape::rectangle, ShapeParams::rectangle(1, 1), 1.0, h);
    // The lowest mode is symmetric, so the invariant-subspace solve returns it.
    const auto basis = assemble_invariant_basis(dom, 1.0);
    const double closed = 8.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2), 2);
    EXPECT_NEAR(basis.mu()[0] / closed, 1.0, 1e-10);
    mus.push_back(basis.mu()[0]);
  }
  for (int i = 0; i < 2; ++i) {
    const double order = std::log((target - mus[i]) / (target - mus[i + 1])) / std::log(hs[i] / hs[i + 1]);
    EXPECT_NEAR(order, 2.0, 0.05);
  }
  // Richardson extrapolation from the two finest grids.
  const double r = hs[1] / hs[2];
  const double extrap = (r * r * mus[2] - mus[1]) / (r * r - 1);
  EXPECT_NEAR(extrap / target, 1.0, 1e-5);
}

TEST(Decompose, ModesAreOrthonormalInWeightedInnerProduct) {
  const auto dom = small_disk();
  const auto basis = assemble_and_decompose(dom, kFullBasis, 0.5);
  const auto n = basis.modes();
  Eigen::MatrixXd gram(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k)
      gram(j, k) = inner_product(dom, basis.mode(j), basis.mode(k));
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(inner_product(dom, basis.mode(0), basis.mode(1)), 0.0, 1e-12);
}

TEST(Decompose, EigenvaluesPositiveAndSorted) {
  const auto basis = assemble_and_decompose(small_disk(), 0, 0.5);
  EXPECT_GT(basis.mu()[0], 0.0);
  for (Eigen::Index k = 1; k < basis.modes(); ++k) EXPECT_LE(basis.mu()[k - 1], basis.mu()[k]);
  EXPECT_LE(static_cast<std::size_t>(basis.modes()), small_disk().size());
}

TEST(Decompose, TruncationWidensToCloseDegenerateClusters) {
  const auto dom = build_domain(Shape::rectangle, ShapeParams::rectangle(1, 1), 1.0, 1.0 / 17);
  // Modes 2 and 3 are the degenerate pair (1,2)/(2,1); asking for two keeps both.
  const auto basis = assemble_and_decompose(dom, 2, 0.5);
  EXPECT_EQ(basis.modes(), 3);
  const auto full = assemble_and_decompose(dom, kFullBasis, 0.5);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(basis.mu()[k] / full.mu()[k], 1.0, 1e-12);
}

TEST(Decompose, TooManyModesIsAnError) {
  const auto dom = small_disk();
  EXPECT_THROW(assemble_and_decompose(dom, dom.size() + 1, 0.5), Error);
}

TEST(Decompose, SignConventionMakesLargestEntryPositive) {
  const auto basis = assemble_and_decompose(small_disk(), kFullBasis, 0.5);
  for (Eigen::Index k = 0; k < basis.modes(); ++k) {
    Eigen::Index arg = 0;
    basis.vectors().col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(basis.vectors()(arg, k), 0.0);
  }
}

TEST(Decompose, InvariantBasisIsSymmetricPartOfFullSpectrum) {
  const auto dom = small_disk();
  const auto full = assemble_and_decompose(dom, kFullBasis, 0.5);
  const auto inv = assemble_invariant_basis(dom, 0.5);
  EXPECT_LT(inv.modes(), full.modes());
  const auto perms = dom.symmetry_permutations();
  for (Eigen::Index k = 0; k < inv.modes(); ++k) {
    const double mu = inv.mu()[k];
    const auto* hit = std::min_element(full.mu().data(), full.mu().data() + full.modes(),
                                       [&](double a, double b) { return std::abs(a - mu) < std::abs(b - mu); });
    EXPECT_NEAR(*hit / mu, 1.0, 1e-10);
    const Eigen::VectorXd v = inv.vectors().col(k);
    const Eigen::VectorXd Lv = apply_laplacian_stencil(dom, v);
    EXPECT_LT((Lv - mu * v).norm(), 1e-9 * mu);
    for (const auto& p : perms)
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(v[p[i]], v[static_cast<Eigen::Index>(i)], 1e-12);
  }
  const Eigen::MatrixXd gram = inv.vectors().transpose() * inv.vectors();
  EXPECT_LT((gram - Eigen::MatrixXd::Identity(inv.modes(), inv.modes())).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(FractionalApply, EigenvectorIsScaled) {
  const auto basis = assemble_and_decompose(small_disk(), kFullBasis, 0.5);
  const Field phi1 = Field::from_values(basis, basis.mode(0));
  const Field out = fractional_apply(basis, phi1);
  const double s = std::pow(basis.mu()[0], 0.5);
  EXPECT_LT((out.values() - s * basis.mode(0)).norm(), 1e-10 * s * basis.mode(0).norm());
}

TEST(FractionalApply, AlphaOneMatchesStencilOnTruncatedSpace) {
  const auto dom = small_disk();
  const auto basis = assemble_and_decompose(dom, 40, 1.0);
  std::mt19937_64 rng(3);
  const Field u = synthesize(basis, random_vector(basis.modes(), rng));
  const Eigen::VectorXd direct = apply_laplacian_stencil(dom, u.values());
  const Field spectral = fractional_apply(basis, u);
  EXPECT_LT((spectral.values() - direct).norm(), 1e-8 * direct.norm());

  const auto full = assemble_and_decompose(dom, kFullBasis, 1.0);
  const Eigen::VectorXd v = random_vector(static_cast<Eigen::Index>(dom.size()), rng);
  const Eigen::VectorXd d2 = apply_laplacian_stencil(dom, v);
  EXPECT_LT((fractional_apply(full, Field::from_values(full, v)).values() - d2).norm(), 1e-8 * d2.norm());
}

TEST(FractionalApply, ZeroMapsToZero) {
  const auto basis = assemble_and_decompose(small_disk(), 0, 0.5);
  const Field z = Field::zero(basis);
  EXPECT_EQ(fractional_apply(basis, z).values().norm(), 0.0);
  EXPECT_EQ(z.coeffs().norm(), 0.0);
}

TEST(FractionalApply, RejectsFieldFromAnotherBasis) {
  const auto a = assemble_and_decompose(small_disk(), 0, 0.5);
  const auto b = assemble_and_decompose(small_disk(), 0, 0.5);
  const Field u = Field::from_values(a, Eigen::VectorXd::Ones(a.nodes()));
  try {
    fractional_apply(b, u);
    FAIL() << "expected DomainMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainMismatch);
  }
  EXPECT_THROW(alpha_norm_sq(b, u), Error);
}

TEST(AlphaNorm, ModeHasNormMuAlphaPlusOne) {
  const auto basis = assemble_and_decompose(small_disk(), kFullBasis, 0.3);
  for (Eigen::Index k : {0, 1, 5, 17}) {
    const Field phi = Field::from_values(basis, basis.mode(k));
    EXPECT_NEAR(alpha_norm_sq(basis, phi), std::pow(basis.mu()[k], 0.3) + 1.0, 1e-10);
  }
}

TEST(AlphaNorm, ZeroAndHomogeneity) {
  const auto basis = assemble_and_decompose(small_disk(), kFullBasis, 0.5);
  EXPECT_EQ(alpha_norm_sq(basis, Field::zero(basis)), 0.0);
  std::mt19937_64 rng(11);
  const Field u = Field::from_values(basis, random_vector(basis.nodes(), rng));
  const double q = alpha_norm_sq(basis, u);
  EXPECT_NEAR(alpha_norm_sq(basis, u.scaled_by(3.0)), 9.0 * q, 1e-12 * 9.0 * q);
}

TEST(AnalysisSynthesis, AnalyzeInvertsSynthesize) {
  const auto basis = assemble_and_decompose(small_disk(), 30, 0.5);
  std::mt19937_64 rng(1);
  const Eigen::VectorXd b = random_vector(basis.modes(), rng);
  const Field u = synthesize(basis, b);
  EXPECT_LT((basis.analyze_values(u.values()) - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AnalysisSynthesis, FirstUnitCoefficientGivesFirstMode) {
  const auto basis = assemble_and_decompose(small_disk(), 30, 0.5);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(1);
  e1[0] = 1.0;
  EXPECT_LT((synthesize(basis, e1).values() - basis.mode(0)).norm(), 1e-13);
}

TEST(AnalysisSynthesis, ProjectionIsIdempotent) {
  const auto basis = assemble_and_decompose(small_disk(), 30, 0.5);
  std::mt19937_64 rng(2);
  const Eigen::VectorXd v = random_vector(basis.nodes(), rng);
  const Field once = analyze(basis, v);
  const Field twice = analyze(basis, once.values());
  EXPECT_LT((twice.coeffs() - once.coeffs()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(once.truncation_error(), 0.0);
  EXPECT_LT(twice.truncation_error(), 1e-12);
}

TEST(AnalysisSynthesis, Parseval) {
  const auto dom = small_disk();
  const auto basis = assemble_and_decompose(dom, 30, 0.5);
  std::mt19937_64 rng(4);
  const Eigen::VectorXd b = random_vector(basis.modes(), rng);
  const Eigen::VectorXd v = synthesize(basis, b).values();
  double quad = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) quad += dom.spacing() * dom.spacing() * v[i] * v[i];
  EXPECT_NEAR(quad, b.squaredNorm(), 1e-12 * b.squaredNorm());
}

TEST(SpectralProperties, PowersMultiplyModewise) {
  const auto basis = assemble_and_decompose(small_disk(), kFullBasis, 0.3);
  const auto other = basis.with_alpha(0.45);
  const auto sum = basis.with_alpha(0.75);
  for (Eigen::Index k = 0; k < basis.modes(); ++k)
    EXPECT_NEAR(basis.mu_alpha()[k] * other.mu_alpha()[k] / sum.mu_alpha()[k], 1.0, 1e-12);
}

TEST(SpectralProperties, FractionalOperatorIsSymmetricAndCoercive) {
  const auto dom = small_disk();
  const auto basis = assemble_and_decompose(dom, kFullBasis, 0.6);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Field u = Field::from_values(basis, random_vector(basis.nodes(), rng));
    const Field w = Field::from_values(basis, random_vector(basis.nodes(), rng));
    const double lhs = inner_product(dom, fractional_apply(basis, u).values(), w.values());
    const double rhs = inner_product(dom, u.values(), fractional_apply(basis, w).values());
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(std::abs(lhs), 1.0));
    const double form = inner_product(dom, fractional_apply(basis, u).values(), u.values());
    EXPECT_GE(form, std::pow(basis.mu()[0], 0.6) * inner_product(dom, u.values(), u.values()) * (1 - 1e-12));
  }
}

TEST(Linalg, LowestEigenpairsAgreeWithFullSolve) {
  std::mt19937_64 rng(21);
  const int n = 120;
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) a(i, j) = a(j, i) = std::normal_distribution<double>()(rng);
  const auto full = linalg::symmetric_eigen(a, true);
  const auto low = linalg::symmetric_eigen_lowest(a, 10);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(low.values[k], full.values[k], 1e-10);
  EXPECT_LT((a * full.vectors - full.vectors * full.values.asDiagonal()).norm(), 1e-9);
  EXPECT_LT((full.vectors.transpose() * full.vectors - Eigen::MatrixXd::Identity(n, n)).norm(), 1e-10);
}

TEST(Dumps, EigenvalueAndFieldDumpsCarryGridHeader) {
  const auto basis = assemble_and_decompose(small_disk(), 10, 0.5);
  std::ostringstream eig, field;
  write_eigenvalues_csv(eig, basis);
  write_field_dump(field, basis, basis.mode(0));
  EXPECT_EQ(eig.str().rfind("nx,ny,h,K,alpha\n", 0), 0u);
  EXPECT_EQ(field.str().rfind("nx,ny,h,K,alpha\n", 0), 0u);
  std::size_t lines = 0;
  for (char c : field.str()) lines += c == '\n';
  EXPECT_EQ(lines, 2u + static_cast<std::size_t>(basis.domain().ny()));
}
