#include "doctest.h"

#include <cmath>
#include <vector>

#include "conformal_kit/random.hpp"
#include "conformal_kit/types.hpp"

using namespace conformal;

TEST_CASE("dataset basics and feature dimension checks") {
  DataSet data(2);
  data.add(Observation{1.0, {0.0, 1.0}});
  data.add(Observation{2.0, {3.0, 4.0}});
  CHECK(data.size() == 2);
  CHECK(data.dim() == 2);
  CHECK(data[1].y == 2.0);
  CHECK_THROWS_AS(data.add(Observation{0.0, {1.0}}), argument_error);

  const DataSet rest = data.without(0);
  CHECK(rest.size() == 1);
  CHECK(rest[0].y == 2.0);
  CHECK(data.size() == 2);

  const DataSet more = data.augmented(Observation{5.0, {6.0, 7.0}});
  CHECK(more.size() == 3);
  CHECK(more[2].y == 5.0);
  CHECK(more[2].x[1] == 7.0);

  data.set_response(0, -1.0);
  CHECK(data[0].y == -1.0);
  const std::vector<double> nx{8.0, 9.0};
  data.set_observation(1, 4.0, nx);
  CHECK(data[1].y == 4.0);
  CHECK(data[1].x[0] == 8.0);
  CHECK_THROWS_AS(data.set_observation(1, 4.0, std::vector<double>{1.0}), argument_error);

  const std::vector<double> ys = data.responses();
  CHECK(ys.size() == 2);
  CHECK(ys[0] == -1.0);
}

TEST_CASE("feature equality is exact") {
  const std::vector<double> a{1.0, 2.0};
  const std::vector<double> b{1.0, 2.0};
  const std::vector<double> c{1.0, 2.0 + 1e-16};
  const std::vector<double> d{1.0};
  CHECK(features_equal(a, b));
  CHECK(features_equal(a, c));  // 2.0 + 1e-16 rounds back to 2.0
  CHECK_FALSE(features_equal(a, std::vector<double>{1.0, 2.5}));
  CHECK_FALSE(features_equal(a, d));
}

TEST_CASE("rng streams are deterministic and decorrelated") {
  Rng a({42, 0});
  Rng b({42, 0});
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  Rng c({42, 1});
  Rng d({43, 0});
  int same_c = 0;
  int same_d = 0;
  Rng base({42, 0});
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t v = base.next_u64();
    if (v == c.next_u64()) ++same_c;
    if (v == d.next_u64()) ++same_d;
  }
  CHECK(same_c == 0);
  CHECK(same_d == 0);
}

TEST_CASE("rng draws land in range and are finite") {
  Rng rng({7, 3});
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.uniform(-2.0, 5.0);
    CHECK(v >= -2.0);
    CHECK(v < 5.0);
  }
  for (int i = 0; i < 2000; ++i) CHECK(std::isfinite(rng.normal()));
  for (int i = 0; i < 2000; ++i) CHECK(std::isfinite(rng.student_t(3.0)));
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng({99, 0});
  double sum = 0.0;
  double sum_sq = 0.0;
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / reps;
  const double var = sum_sq / reps - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("grid spec endpoints and step") {
  const GridSpec grid{-1.0, 1.0, 9};
  grid.validate();
  CHECK(grid.at(0) == -1.0);
  CHECK(grid.at(8) == 1.0);
  CHECK(grid.step() == doctest::Approx(0.25).epsilon(1e-15));

  CHECK_THROWS_AS((GridSpec{1.0, -1.0, 5}.validate()), argument_error);
  CHECK_THROWS_AS((GridSpec{0.0, 1.0, 1}.validate()), argument_error);
}
