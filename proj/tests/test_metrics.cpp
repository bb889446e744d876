#include "cfd/metrics.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace cfd;

namespace {

DensityGrid gaussian_pair_grid(double shift) {
  DensityGrid g = make_grid(-8, 8.5, 401, -8, 8, 401);
  for (Eigen::Index i = 0; i < g.x_nodes.size(); ++i)
    for (Eigen::Index j = 0; j < g.y_nodes.size(); ++j) {
      const double x = g.x_nodes[i] - shift, y = g.y_nodes[j];
      g.values(i, j) = std::exp(-0.5 * (x * x + y * y)) / (2 * std::numbers::pi);
    }
  return g;
}

DensityGrid random_grid(std::mt19937_64& rng) {
  DensityGrid g = make_grid(0, 1, 7, 0, 2, 9);
  std::uniform_real_distribution<double> u(0, 3);
  for (Eigen::Index i = 0; i < g.values.size(); ++i) g.values.data()[i] = u(rng);
  return g;
}

}  // namespace

TEST_CASE("pairwise sum") {
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  std::vector<double> v(10001, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(1000.1).epsilon(1e-14));
  std::vector<double> ints(5000);
  for (int i = 0; i < 5000; ++i) ints[i] = i;
  CHECK(pairwise_sum(ints) == 5000.0 * 4999.0 / 2.0);
}

TEST_CASE("error grid basics") {
  std::mt19937_64 rng(1);
  const DensityGrid a = random_grid(rng);
  CHECK(abs_error_grid(a, a).values.isZero());
  DensityGrid zero = a;
  zero.values.setZero();
  CHECK(abs_error_grid(a, zero).values == a.values);
  CHECK(l1_error(abs_error_grid(a, a)) == 0.0);
  DensityGrid c = a;
  c.values.setConstant(0.25);
  CHECK(l1_error(c) == doctest::Approx(0.25 * a.cell_area * 63));
  DensityGrid other = make_grid(0, 1, 7, 0, 2.5, 9);
  CHECK_THROWS_AS(abs_error_grid(a, other), InputError);
}

TEST_CASE("l1 of two shifted gaussians is twice their total variation") {
  const double l1 = l1_error(abs_error_grid(gaussian_pair_grid(0.0), gaussian_pair_grid(0.5)));
  const double tv = 2 * (0.5 * std::erfc(-0.25 / std::sqrt(2.0))) - 1;
  CHECK(l1 == doctest::Approx(2 * tv).epsilon(0.01));
  CHECK(2 * tv == doctest::Approx(0.3948).epsilon(1e-3));
}

TEST_CASE("normalization") {
  DensityGrid g = make_grid(-5, 5, 201, -5, 5, 201);
  g.values.setZero();
  CHECK(normalization_check(g) == 0.0);
  for (Eigen::Index i = 0; i < 201; ++i)
    for (Eigen::Index j = 0; j < 201; ++j) {
      const double x = g.x_nodes[i], y = g.y_nodes[j];
      g.values(i, j) = std::exp(-0.5 * (x * x + y * y)) / (2 * std::numbers::pi);
    }
  CHECK(normalization_check(g) > 0.9999);
  g.values.setConstant(1.0 / (g.cell_area * 201 * 201));
  CHECK(normalization_check(g) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("l1 is a metric on grids") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 200; ++k) {
    const DensityGrid a = random_grid(rng), b = random_grid(rng), c = random_grid(rng);
    const double ab = l1_error(abs_error_grid(a, b));
    const double bc = l1_error(abs_error_grid(b, c));
    const double ac = l1_error(abs_error_grid(a, c));
    CHECK(ac <= ab + bc + 1e-14);
    CHECK(ab == l1_error(abs_error_grid(b, a)));
    CHECK(ab > 1e-14);
  }
}

TEST_CASE("error report json") {
  ErrorReport r;
  r.abs_error_grid = make_grid(0, 1, 3, 0, 1, 3);
  r.l1 = 0.5;
  r.negative_raw_count = 7;
  const auto j = nlohmann::json::parse(error_report_json(r));
  CHECK(j["l1"] == 0.5);
  CHECK(j["negative_raw_count"] == 7);
  CHECK(j["nx"] == 3);
}
