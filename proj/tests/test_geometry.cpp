#include <doctest.h>

#include <random>
#include <set>

#include "nashflow/geometry.hpp"

using namespace nashflow;

TEST_CASE("base family matches the printed vectors") {
  auto fams = default_direction_families();
  REQUIRE(fams.size() == 27);
  const auto& f0 = family_for_class(fams, {0, 0, 0});
  CHECK(f0.phi == std::vector<IntVec>{{1, 1, 0}, {1, -1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1}});
  CHECK(f0.r == std::vector<IntVec>{{1, 2, 0}, {-2, 1, 0}, {0, 0, 1}, {1, -3, -1}});
}

TEST_CASE("base Phi family sums to 4 Id") {
  auto fams = default_direction_families();
  const auto rep = verify_family(family_for_class(fams, {0, 0, 0}));
  CHECK(rep.pass());
  CHECK(rep.phi_constant == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("base R family: orthogonality and closing vector") {
  // (1,2,0).(-2,1,0) = 0 and h4 = -(h1+h2+h3)
  const IntVec h1{1, 2, 0}, h2{-2, 1, 0}, h3{0, 0, 1}, h4{1, -3, -1};
  CHECK(h1[0] * h2[0] + h1[1] * h2[1] + h1[2] * h2[2] == 0);
  for (int a = 0; a < 3; ++a) CHECK(h4[a] == -(h1[a] + h2[a] + h3[a]));
}

TEST_CASE("all 27 families verify and are pairwise disjoint") {
  auto fams = default_direction_families();
  std::set<IntVec> all;
  std::size_t count = 0;
  for (const auto& f : fams) {
    CHECK(verify_family(f).pass());
    for (const auto* sub : {&f.r, &f.phi, &f.s}) {
      for (const auto& h : *sub) {
        all.insert(h);
        ++count;
      }
    }
  }
  CHECK(all.size() == count);  // no vector repeats anywhere
  CHECK(count == 27 * 16);
}

TEST_CASE("verify_family detects a repeated vector") {
  DirectionFamily f;
  f.phi = {{1, 1, 0}, {1, 1, 0}, {1, 0, 1}, {1, 0, -1}, {0, 1, 1}, {0, 1, -1}};
  f.r = {{1, 2, 0}, {-2, 1, 0}, {0, 0, 1}, {1, -3, -1}};
  f.s = f.phi;
  const auto rep = verify_family(f);
  CHECK_FALSE(rep.phi_basis);
}

TEST_CASE("verify_family detects a broken closing vector") {
  DirectionFamily f;
  f.r = {{1, 2, 0}, {-2, 1, 0}, {0, 0, 1}, {1, -3, 0}};
  const auto rep = verify_family(f);
  CHECK_FALSE(rep.r_frame_sum);
}

TEST_CASE("conformal solve at the identity gives gamma = 1/2") {
  auto fams = default_direction_families();
  ConformalFrameSolver solver(family_for_class(fams, {0, 0, 0}).phi);
  const auto g = solver.gammas(Eigen::Matrix3d::Identity());
  for (double v : g) CHECK(v == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("conformal solve reconstruction on random small perturbations") {
  auto fams = default_direction_families();
  ConformalFrameSolver solver(family_for_class(fams, {0, 0, 0}).phi);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> uni(-0.1, 0.1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Matrix3d K;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const double v = uni(rng);
        K(i, j) = v;
        K(j, i) = v;
      }
    const Eigen::Matrix3d A = Eigen::Matrix3d::Identity() - K;
    const auto c = solver.coefficients(A);
    Eigen::Matrix3d rec = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 6; ++i) {
      const auto& h = solver.family()[i];
      const Eigen::Vector3d hv(h[0], h[1], h[2]);
      rec += c[i] * hv * hv.transpose();
    }
    CHECK((rec - A).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("conformal solve rejects matrices outside the positivity domain") {
  auto fams = default_direction_families();
  ConformalFrameSolver solver(family_for_class(fams, {0, 0, 0}).phi);
  Eigen::Matrix3d K = Eigen::Matrix3d::Zero();
  K(0, 0) = 10.0;
  CHECK_THROWS_AS(solver.coefficients(Eigen::Matrix3d::Identity() - K), std::domain_error);
}

TEST_CASE("conformal solve depends continuously on the matrix") {
  auto fams = default_direction_families();
  ConformalFrameSolver solver(family_for_class(fams, {0, 0, 0}).phi);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double eps = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d E;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) {
        const double v = uni(rng);
        E(i, j) = v;
        E(j, i) = v;
      }
    E /= E.cwiseAbs().maxCoeff();
    const auto g0 = solver.gammas(Eigen::Matrix3d::Identity());
    const auto g1 = solver.gammas(Eigen::Matrix3d::Identity() + eps * E);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(g1[i] - g0[i]) < 10.0 * eps);
  }
}

TEST_CASE("positivity radius is reported and positive") {
  auto fams = default_direction_families();
  ConformalFrameSolver solver(family_for_class(fams, {0, 0, 0}).phi);
  const double r = solver.positivity_radius();
  MESSAGE("measured positivity radius of the base Phi family: ", r);
  CHECK(r > 0.05);
}

TEST_CASE("orthogonal frame: zero input reconstructs zero") {
  auto fams = default_direction_families();
  OrthogonalFrameSolver solver(family_for_class(fams, {0, 0, 0}).r, 0.5);
  const auto g = solver.gammas(Eigen::Vector3d::Zero());
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (int i = 0; i < 4; ++i) {
    const auto& h = solver.family()[i];
    sum += g[i] * Eigen::Vector3d(h[0], h[1], h[2]);
  }
  CHECK(sum.norm() < 1e-14);
}

TEST_CASE("orthogonal frame: exact affine reconstruction and floor") {
  auto fams = default_direction_families();
  const double n0 = 0.5;
  OrthogonalFrameSolver solver(family_for_class(fams, {0, 0, 0}).r, n0);
  std::mt19937 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::Vector3d w(gauss(rng), gauss(rng), gauss(rng));
    w *= n0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng) / w.norm();
    const auto g = solver.gammas(w);
    Eigen::Vector3d rec = Eigen::Vector3d::Zero();
    for (int i = 0; i < 4; ++i) {
      const auto& h = solver.family()[i];
      rec += g[i] * Eigen::Vector3d(h[0], h[1], h[2]);
    }
    CHECK((rec - w).norm() < 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(g[i] >= n0 - 1e-12);
  }
  // h1 reconstructs exactly by orthogonality
  const auto& h1 = solver.family()[0];
  const auto g = solver.gammas(Eigen::Vector3d(h1[0], h1[1], h1[2]) * (n0 / std::sqrt(5.0)));
  (void)g;
}

TEST_CASE("orthogonal frame is affine") {
  auto fams = default_direction_families();
  OrthogonalFrameSolver solver(family_for_class(fams, {0, 0, 0}).r, 1.0);
  const Eigen::Vector3d w1(0.3, -0.2, 0.1), w2(-0.5, 0.4, 0.2);
  const double a = 0.37;
  const auto g1 = solver.gammas(w1);
  const auto g2 = solver.gammas(w2);
  const auto gm = solver.gammas(a * w1 + (1.0 - a) * w2);
  for (int i = 0; i < 4; ++i)
    CHECK(std::abs(gm[i] - (a * g1[i] + (1.0 - a) * g2[i])) < 1e-13);
}

TEST_CASE("orthogonal frame rejects vectors outside the ball") {
  auto fams = default_direction_families();
  OrthogonalFrameSolver solver(family_for_class(fams, {0, 0, 0}).r, 0.1);
  CHECK_THROWS_AS(solver.gammas(Eigen::Vector3d(1.0, 0.0, 0.0)), std::domain_error);
}

TEST_CASE("families serialize to JSON") {
  auto fams = default_direction_families();
  const std::string js = families_to_json(fams);
  CHECK(js.find("\"R\"") != std::string::npos);
  CHECK(js.find("\"Phi\"") != std::string::npos);
  CHECK(js.find("\"class\"") != std::string::npos);
}
