#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include <Eigen/Eigenvalues>

#include "sparkle/topology.hpp"

using namespace sparkle;

namespace {

const double kPi = 3.14159265358979323846;

bool check_passed(const Eigen::MatrixXd& w, const std::string& name) {
  for (const auto& c : validate_mixing(w)) {
    if (c.name == name) return c.pass;
  }
  return false;
}

std::filesystem::path tmp_file(const std::string& stem) {
  return std::filesystem::temp_directory_path() / stem;
}

}  // namespace

TEST_CASE("adjusted ring spectral radius matches the closed form") {
  // lambda_k = a + (1-a) cos(2 pi k / n); the second eigenvalue dominates
  // for a >= the crossover, giving rho(10, 0.4) below.
  MixingMatrix m = ring_adjusted(10, 0.4);
  CHECK(m.rho == doctest::Approx(0.8854101966249685).epsilon(1e-12));
  CHECK(m.gap == doctest::Approx(1.0 - 0.8854101966249685).epsilon(1e-10));

  // formula vs dense eigensolve across the whole spectrum
  for (int n : {4, 10, 16, 33}) {
    MixingMatrix r = ring_adjusted(n, 1.0 / 3.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r.w);
    Eigen::VectorXd predicted(n);
    for (int k = 0; k < n; ++k)
      predicted[k] = ring_adjusted_eigenvalue(n, 1.0 / 3.0, k);
    std::sort(predicted.data(), predicted.data() + n);
    for (int k = 0; k < n; ++k)
      CHECK(std::abs(es.eigenvalues()[k] - predicted[k]) < 1e-10);
  }
}

TEST_CASE("five peer ring radius") {
  // circulant with 5 equal weights: rho(10) = (1 + sqrt 5) / 5
  MixingMatrix m = five_peer(10);
  CHECK(m.rho == doctest::Approx(0.647213595499958).epsilon(1e-12));
  CHECK(m.w(0, 0) == doctest::Approx(0.2));
  CHECK(m.w(0, 2) == doctest::Approx(0.2));
  CHECK(m.w(0, 3) == 0.0);
}

TEST_CASE("gap ratio across a doubling is independent of the self weight") {
  double expect = (1.0 - std::cos(2.0 * kPi / 16)) /
                  (1.0 - std::cos(2.0 * kPi / 32));
  CHECK(expect == doctest::Approx(3.961570560806458).epsilon(1e-12));
  for (double a : {0.2, 1.0 / 3.0, 0.7}) {
    double ratio = (1.0 - ring_adjusted_rho(16, a)) /
                   (1.0 - ring_adjusted_rho(32, a));
    CHECK(ratio == doctest::Approx(expect).epsilon(1e-9));
  }
  CHECK(ring_adjusted(16, 1.0 / 3.0).gap / ring_adjusted(32, 1.0 / 3.0).gap ==
        doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("complete graph mixes in one round") {
  MixingMatrix m = complete_graph(8);
  CHECK(m.rho < 1e-12);
  CHECK(m.w(3, 5) == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(m.lambda_min > -1e-12);
}

TEST_CASE("torus passes all structural checks") {
  MixingMatrix m = torus(3, 4);
  CHECK(m.n == 12);
  for (const auto& c : validate_mixing(m.w)) {
    if (c.name != "positive_definite") CHECK(c.pass);
  }
  CHECK(m.rho < 1.0);
  // 2x2 wraps both directions onto the same neighbor; weights accumulate
  MixingMatrix tiny = torus(2, 2);
  CHECK(tiny.w(0, 0) == doctest::Approx(0.2));
  CHECK(tiny.w(0, 1) == doctest::Approx(0.4));
}

TEST_CASE("solving the ring weight for a target radius") {
  for (double target : {0.83, 0.8854101966249685, 0.924, 0.99}) {
    double a = ring_a_for_rho(10, target);
    CHECK(a > 0.0);
    CHECK(a < 1.0);
    CHECK(ring_adjusted_rho(10, a) == doctest::Approx(target).epsilon(1e-9));
  }
  // below the feasibility floor every weight gives a larger radius
  CHECK_THROWS_WITH_AS(ring_a_for_rho(10, 0.5),
                       doctest::Contains("achievable targets"), TopologyError);
  CHECK_THROWS_AS(ring_a_for_rho(10, 1.5), TopologyError);
}

TEST_CASE("validation names the failed property") {
  Eigen::MatrixXd w = ring_adjusted(6, 0.5).w;
  CHECK(check_passed(w, "symmetric"));
  CHECK(check_passed(w, "row_stochastic"));
  CHECK(check_passed(w, "connectivity"));

  Eigen::MatrixXd asym = w;
  asym(0, 1) += 1e-6;
  CHECK_FALSE(check_passed(asym, "symmetric"));

  Eigen::MatrixXd neg = w;
  double shift = neg(0, 1) + 0.1;
  neg(0, 1) = -0.1;
  neg(1, 0) = -0.1;
  neg(0, 0) += shift;
  neg(1, 1) += shift;
  CHECK_FALSE(check_passed(neg, "nonnegative"));

  // two disconnected blocks keep a doubled unit eigenvalue
  Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(4, 4);
  blocks.topLeftCorner(2, 2).setConstant(0.5);
  blocks.bottomRightCorner(2, 2).setConstant(0.5);
  CHECK_FALSE(check_passed(blocks, "connectivity"));
  CHECK_THROWS_AS(MixingMatrix::from_matrix(blocks), TopologyError);
}

TEST_CASE("indefinite rings are detected and the blend repairs them") {
  MixingMatrix ring = ring_adjusted(16, 1.0 / 3.0);
  CHECK(ring.lambda_min == doctest::Approx(-1.0 / 3.0).epsilon(1e-10));
  CHECK_FALSE(check_passed(ring.w, "positive_definite"));

  MixingMatrix shifted = half_shift(ring);
  CHECK(shifted.lambda_min == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(check_passed(shifted.w, "positive_definite"));
  // eigenvalues map through (1 + lambda) / 2, so the radius does too
  CHECK(shifted.rho == doctest::Approx((1.0 + ring.rho) / 2.0).epsilon(1e-10));
}

TEST_CASE("row sum sharpening pins sums at working precision") {
  MixingMatrix m = ring_adjusted(12, 0.3);
  Eigen::MatrixXd w = m.w;
  for (int i = 0; i < w.rows(); ++i) {
    w.row(i) *= 1.0 + 3e-14 * (i % 3 - 1);
  }
  sharpen_row_sums(w, 1.0);
  CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("custom matrices load but are never repaired") {
  auto good = tmp_file("mix_good.txt");
  {
    std::ofstream out(good);
    out << std::setprecision(17);
    MixingMatrix m = ring_adjusted(4, 0.5);
    out << 4 << "\n" << m.w << "\n";
  }
  MixingMatrix loaded = custom_from_file(good.string());
  CHECK(loaded.n == 4);
  CHECK(loaded.rho == doctest::Approx(ring_adjusted(4, 0.5).rho).epsilon(1e-9));

  auto bad = tmp_file("mix_bad.txt");
  {
    std::ofstream out(bad);
    out << std::setprecision(17);
    out << 2 << "\n0.9 0.1\n0.2 0.8\n";  // not symmetric
  }
  CHECK_THROWS_AS(custom_from_file(bad.string()), TopologyError);

  std::filesystem::remove(good);
  std::filesystem::remove(bad);
}
