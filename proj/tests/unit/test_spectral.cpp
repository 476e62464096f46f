#include <doctest.h>

#include <cmath>

#include "delaystab/numerics.hpp"
#include "delaystab/spectral.hpp"
#include "fixtures.hpp"

using namespace delaystab;
using namespace delaystab::plant_spectral;
using fixtures::kPi;

namespace {

PlantSpec constant_plant(double theta1, double theta2, double q_tilde = 0.0) {
  PlantSpec spec;
  spec.p = FunctionInput::constant(1.0);
  spec.q_tilde = FunctionInput::constant(q_tilde);
  spec.theta1 = theta1;
  spec.theta2 = theta2;
  return spec;
}

}  // namespace

TEST_CASE("split_reaction applies the stated shift rule") {
  SUBCASE("negative constant reaction") {
    const auto split = split_reaction(FunctionInput::constant(-5.0), 1.0);
    CHECK(split.q_c == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(split.q_min == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("already positive reaction only gains the margin") {
    const auto split = split_reaction(FunctionInput::constant(3.0), 1.0);
    CHECK(split.q_c == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(split.q_min == doctest::Approx(4.0).epsilon(1e-15));
  }
  SUBCASE("variable reaction, minimum at the right end") {
    const Eigen::Vector2d coeffs(0.0, -1.0);  // q~(x) = -x
    const auto split = split_reaction(FunctionInput::polynomial(coeffs), 0.5);
    CHECK(split.q_c == doctest::Approx(1.5).epsilon(1e-12));
  }
  CHECK_THROWS_AS(split_reaction(FunctionInput::constant(0.0), 0.0), Error);
}

TEST_CASE("closed-form eigenpairs, Neumann-Dirichlet") {
  // p = 1, q = 1: lambda_n = 1 + pi^2 (n - 1/2)^2, phi_n = sqrt
  // (2) cos((n-1/2) pi x)
  const auto plant = constant_plant(kPi / 2.0, 0.0);
  const ShiftSplit split{1.0, 1.0};
  const auto basis = solve_eigen(plant, split, 20, 2001);
  for (int n = 1; n <= 20; ++n) {
    const double exact = 1.0 + kPi * kPi * (n - 0.5) * (n - 0.5);
    CHECK(std::abs(basis.lambda(n) - exact) / exact < 1e-6);
    CHECK(std::abs(std::abs(basis.mode(n).phi0) - std::sqrt(2.0)) < 1e-6);
    CHECK(std::abs(basis.mode(n).dphi0) < 1e-5 * std::sqrt(basis.lambda(n)));
    CHECK(std::abs(basis.mode(n).phi1) < 1e-8);
  }
  // L2 normalization within quadrature tolerance
  const double dx = basis.dx();
  for (int n : {1, 5, 20}) {
    const auto& phi = basis.mode(n).phi;
    CHECK(simpson((phi.array() * phi.array()).matrix(), dx) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("closed-form eigenpairs, Dirichlet-Dirichlet") {
  const auto plant = constant_plant(0.0, 0.0);
  const ShiftSplit split{1.0, 1.0};
  const auto basis = solve_eigen(plant, split, 20, 2001);
  for (int n = 1; n <= 20; ++n) {
    const double exact = 1.0 + kPi * kPi * n * n;
    CHECK(std::abs(basis.lambda(n) - exact) / exact < 1e-6);
    CHECK(basis.mode(n).phi0 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(basis.mode(n).dphi0) - std::sqrt(2.0) * n * kPi) <
          1e-5 * std::sqrt(2.0) * n * kPi);
  }
}

TEST_CASE("closed-form eigenpairs, Neumann-Neumann") {
  const auto plant = constant_plant(kPi / 2.0, kPi / 2.0);
  const ShiftSplit split{1.0, 1.0};
  const auto basis = solve_eigen(plant, split, 8, 2001);
  CHECK(std::abs(basis.lambda(1) - 1.0) < 1e-9);
  // constant first eigenfunction
  CHECK(basis.mode(1).phi.maxCoeff() == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(basis.mode(1).phi.minCoeff() == doctest::Approx(1.0).epsilon(1e-7));
  for (int n = 2; n <= 8; ++n) {
    const double exact = 1.0 + kPi * kPi * (n - 1) * (n - 1);
    CHECK(std::abs(basis.lambda(n) - exact) / exact < 1e-6);
  }
}

TEST_CASE("eigenvalue ordering, bounds and growth orders") {
  const auto& art = fixtures::reference_plant();
  const double q_sup = art.split.q_min;  // constant q: inf = sup
  for (int n = 1; n <= art.basis.size(); ++n) {
    const double lam = art.basis.lambda(n);
    CHECK(lam >= kPi * kPi * (n - 1) * (n - 1) * (1.0 - 1e-9));
    CHECK(lam <= kPi * kPi * n * n + q_sup + 1e-9);
    if (n > 1) CHECK(lam > art.basis.lambda(n - 1));
  }
  // lambda_n / (pi^2 n^2) -> p and |phi_n'(0)| = O(sqrt(lambda_n))
  const int m = art.basis.size();
  CHECK(art.basis.lambda(m) / (kPi * kPi * m * m) == doctest::Approx(1.0).epsilon(0.02));
  double worst_ratio = 0.0;
  for (int n = 1; n <= m; ++n) {
    worst_ratio = std::max(worst_ratio,
                           std::abs(art.basis.mode(n).dphi0) / std::sqrt(art.basis.lambda(n)));
  }
  CHECK(worst_ratio < 2.0);
}

TEST_CASE("shape functions follow the printed formulas") {
  const Eigen::VectorXd grid = uniform_grid(101);
  SUBCASE("reference plant") {
    auto [a, b] = shape_functions(fixtures::reference_plant().spec, grid);
    for (int i = 0; i < grid.size(); ++i) {
      const double x = grid(i);
      CHECK(a(i) == doctest::Approx(2.0 + 5.0 * x * x).epsilon(1e-13));
      CHECK(b(i) == doctest::Approx(-x * x).epsilon(1e-13));
    }
  }
  SUBCASE("x = 0 kills the x terms") {
    PlantSpec spec = constant_plant(0.3, 0.7, 2.0);
    spec.p = FunctionInput::polynomial(Eigen::Vector3d(1.5, 0.4, 0.2));
    auto [a, b] = shape_functions(spec, grid);
    CHECK(a(0) == doctest::Approx(2.0 * 1.5 / (std::cos(0.7) + 2.0 * std::sin(0.7))).epsilon(1e-13));
    CHECK(b(0) == doctest::Approx(0.0).epsilon(1e-15));
  }
  SUBCASE("pure Neumann control side") {
    const auto plant = constant_plant(0.0, kPi / 2.0);
    auto [a, b] = shape_functions(plant, grid);
    CHECK(a(50) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(b(grid.size() - 1) == doctest::Approx(-0.5).epsilon(1e-13));
  }
}

TEST_CASE("projection coefficients against closed-form integrals") {
  const auto plant = constant_plant(0.0, 0.0);
  const ShiftSplit split{1.0, 1.0};
  const auto basis = solve_eigen(plant, split, 10, 2001);
  auto [a, b] = shape_functions(plant, basis.grid);
  auto [a_n, b_n] = project_coefficients(basis, a, b);

  // b(x) = -x^2 against sqrt(2) sin(n pi x):
  // integral x^2 sin(pi x) dx = (pi^2 - 4)/pi^3
  const double b1_exact = -std::sqrt(2.0) * (kPi * kPi - 4.0) / (kPi * kPi * kPi);
  CHECK(std::abs(std::abs(b_n(0)) - std::abs(b1_exact)) < 1e-8);
  CHECK(std::abs(b1_exact) == doctest::Approx(0.2666).epsilon(1e-3));

  SUBCASE("zero shape projects to zero") {
    auto [za, zb] = project_coefficients(basis, Eigen::VectorXd::Zero(basis.grid.size()),
                                         Eigen::VectorXd::Zero(basis.grid.size()));
    CHECK(za.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zb.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("orthonormality: a = phi_1") {
    auto [pa, pb] = project_coefficients(basis, basis.mode(1).phi, basis.mode(1).phi);
    CHECK(pa(0) == doctest::Approx(1.0).epsilon(1e-9));
    for (int n = 2; n <= 10; ++n) CHECK(std::abs(pa(n - 1)) < 1e-9);
  }
  SUBCASE("grid mismatch rejected") {
    CHECK_THROWS_AS(project_coefficients(basis, a.head(100), b), Error);
  }
}

TEST_CASE("dual input-coefficient routes agree") {
  auto check_plant = [](const PlantSpec& spec, double margin) {
    const auto art = build_plant(spec, margin, 40, 2001);
    CHECK(art.coeffs.beta.discrepancy.head(20).maxCoeff() < 1e-6);
  };
  SUBCASE("constant coefficients") { check_plant(constant_plant(kPi / 2.0, 0.0), 1.0); }
  SUBCASE("polynomial diffusion") {
    PlantSpec spec = constant_plant(kPi / 3.0, kPi / 4.0, -1.0);
    spec.p = FunctionInput::polynomial(Eigen::Vector3d(1.0, 0.3, 0.2));
    check_plant(spec, 1.0);
  }
  SUBCASE("reference plant") {
    CHECK(fixtures::reference_plant().coeffs.beta.discrepancy.head(20).maxCoeff() < 1e-6);
  }
  SUBCASE("closed-form magnitudes, Dirichlet-Dirichlet") {
    const auto art = build_plant(constant_plant(0.0, 0.0, 0.0), 1.0, 20, 2001);
    for (int n = 1; n <= 10; ++n) {
      CHECK(std::abs(art.coeffs.beta.trace(n - 1)) ==
            doctest::Approx(std::sqrt(2.0) * n * kPi).epsilon(1e-6));
    }
  }
  SUBCASE("Neumann-Neumann first mode") {
    const auto art = build_plant(constant_plant(kPi / 2.0, kPi / 2.0, 0.0), 1.0, 8, 2001);
    CHECK(art.coeffs.beta.trace(0) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("perturbed projections are rejected") {
    const auto& art = fixtures::reference_plant();
    Eigen::VectorXd bad = art.coeffs.a_n;
    bad(3) += 1e-3;
    CHECK_THROWS_AS(
        boundary_input_coefficients(art.basis, art.split, bad, art.coeffs.b_n, art.spec), Error);
  }
}

TEST_CASE("parseval consistency and tail quantities") {
  const auto& art = fixtures::reference_plant();

  SUBCASE("partial sums stay below the full norm and approach it") {
    double partial = 0.0, partial_100 = 0.0;
    for (int n = 0; n < art.basis.size(); ++n) {
      partial += art.coeffs.a_n(n) * art.coeffs.a_n(n);
      if (n == 99) partial_100 = partial;
      CHECK(partial <= art.coeffs.a_norm_sq + 1e-9);
    }
    // the gap shrinks monotonically with the mode count (slow 1/n decay of
    // the coefficients keeps it finite at 400 modes)
    CHECK(art.coeffs.a_norm_sq - partial < art.coeffs.a_norm_sq - partial_100);
    CHECK(partial == doctest::Approx(art.coeffs.a_norm_sq).epsilon(5e-3));
  }

  SUBCASE("tails are nonnegative and shrink with N") {
    const auto t3 = tail_quantities(art.basis, art.coeffs, 3, 0.125, art.spec);
    const auto t10 = tail_quantities(art.basis, art.coeffs, 10, 0.125, art.spec);
    CHECK(t3.tail_a >= 0.0);
    CHECK(t3.tail_b >= 0.0);
    CHECK(t10.tail_a <= t3.tail_a);
    CHECK(t10.m_phi <= t3.m_phi);
    CHECK(t3.m_phi > 0.0);
    CHECK(std::isfinite(t3.m_phi_eps));
  }

  SUBCASE("Dirichlet basis has vanishing trace tail") {
    const auto art_dd = build_plant(constant_plant(0.0, 0.0, 0.0), 1.0, 40, 2001);
    const auto tails = tail_quantities(art_dd.basis, art_dd.coeffs, 3, 0.125, art_dd.spec, false);
    CHECK(tails.m_phi < 1e-18);
  }

  SUBCASE("closed-form trace tail, Neumann-Dirichlet") {
    // sum over n >= 4 of 2 / (1 + pi^2 (n - 1/2)^2)
    const auto plant = constant_plant(kPi / 2.0, 0.0);
    const auto art_nd = build_plant(plant, 1.0, 400, 2001);
    const auto tails = tail_quantities(art_nd.basis, art_nd.coeffs, 3, 0.125, art_nd.spec);
    double exact = 0.0;
    for (long n = 4; n <= 40000000L; ++n) exact += 2.0 / (1.0 + kPi * kPi * (n - 0.5) * (n - 0.5));
    CHECK(tails.m_phi == doctest::Approx(exact).epsilon(2e-3));
  }

  SUBCASE("single surviving synthetic coefficient") {
    // extreme truncation N = M - 1; the Dirichlet basis keeps the trace-tail
    // remainder guard silent
    const auto art_dd = build_plant(constant_plant(0.0, 0.0, 0.0), 1.0, 40, 2001);
    const int m = art_dd.basis.size();
    SpectralCoefficients synth = art_dd.coeffs;
    synth.a_n.setZero();
    synth.a_n(m - 1) = 1.0;
    synth.a_norm_sq = 1.0;
    const auto tails = tail_quantities(art_dd.basis, synth, m - 1, 0.125, art_dd.spec);
    CHECK(tails.tail_a == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("remainder bound escalation is detected") {
    const auto plant = constant_plant(kPi / 2.0, 0.0);
    const auto small = build_plant(plant, 1.0, 6, 2001);
    CHECK_THROWS_AS(tail_quantities(small.basis, small.coeffs, 5, 0.125, small.spec), Error);
  }
}

TEST_CASE("modal energy identity for finite mode combinations") {
  auto check_identity = [](const PlantArtifacts& art) {
    const auto& basis = art.basis;
    Eigen::VectorXd f = 0.8 * basis.mode(1).phi + 0.5 * basis.mode(3).phi - 0.2 * basis.mode(5).phi;
    double modal = 0.0;
    const double dx = basis.dx();
    for (int n = 1; n <= basis.size(); ++n) {
      const double c = l2_inner(f, basis.mode(n).phi, dx);
      modal += basis.lambda(n) * c * c;
    }
    const double quad = operator_energy(f, art.spec, art.split, basis.grid);
    CHECK(modal == doctest::Approx(quad).epsilon(1e-4));
  };
  SUBCASE("reference plant") { check_identity(fixtures::reference_plant()); }
  SUBCASE("Dirichlet-Dirichlet") { check_identity(build_plant(constant_plant(0.0, 0.0), 1.0, 40, 2001)); }
}

TEST_CASE("invalid plants are rejected") {
  PlantSpec bad = constant_plant(0.1, 0.1);
  bad.p = FunctionInput::polynomial(Eigen::Vector2d(0.5, -1.0));  // negative past x = 0.5
  CHECK_THROWS_AS(bad.validate(), Error);
  const ShiftSplit split{1.0, 1.0};
  CHECK_THROWS_AS(solve_eigen(bad, split, 8, 801), Error);
  CHECK_THROWS_AS(solve_eigen(constant_plant(0.1, 0.1), ShiftSplit{0.0, -1.0}, 8, 801), Error);
}
