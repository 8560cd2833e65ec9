#include "doctest.h"

#include <vector>

#include "conformal_kit/step_function.hpp"
#include "conformal_kit/types.hpp"

using namespace conformal;

namespace {
StepFunction ecdf_of(std::vector<double> sample) { return build_ecdf(sample); }
}  // namespace

TEST_CASE("ecdf handles ties by keeping the last cumulative value") {
  const StepFunction f = ecdf_of({1.0, 1.0, 2.0});
  REQUIRE(f.breakpoints().size() == 2);
  CHECK(f.breakpoints()[0] == 1.0);
  CHECK(f.breakpoints()[1] == 2.0);
  CHECK(f.values()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(f.values()[1] == 1.0);
}

TEST_CASE("step function evaluation is right-continuous with left limits") {
  const StepFunction f = ecdf_of({0.0, 1.0});
  CHECK(f(-0.5) == 0.0);
  CHECK(f(0.0) == 0.5);
  CHECK(f(0.5) == 0.5);
  CHECK(f(1.0) == 1.0);
  CHECK(f(2.0) == 1.0);
  CHECK(f.left_limit(0.0) == 0.0);
  CHECK(f.left_limit(1.0) == 0.5);
  CHECK(f.left_limit(1.5) == 1.0);
}

TEST_CASE("quantile follows the generalized inverse with extended conventions") {
  const StepFunction f = ecdf_of({1.0, 2.0, 3.0});
  CHECK(quantile(f, 0.0) == neg_inf);
  CHECK(quantile(f, -0.5) == neg_inf);
  CHECK(quantile(f, 1.0 / 3.0) == 1.0);
  CHECK(quantile(f, 1.0 / 3.0 + 1e-12) == 2.0);
  CHECK(quantile(f, 0.5) == 2.0);
  CHECK(quantile(f, 2.0 / 3.0) == 2.0);
  CHECK(quantile(f, 0.99) == 3.0);
  CHECK(quantile(f, 1.0) == 3.0);
  CHECK(quantile(f, 1.0 + 1e-12) == pos_inf);
}

TEST_CASE("quantile of a point mass") {
  const StepFunction f = ecdf_of({0.3});
  CHECK(quantile(f, 0.5) == 0.3);
  CHECK(quantile(f, 1.0) == 0.3);
  CHECK(quantile(f, 1e-9) == 0.3);
  CHECK(quantile(f, 0.0) == neg_inf);
}

TEST_CASE("step function construction validates its inputs") {
  CHECK_THROWS_AS(StepFunction({2.0, 1.0}, {0.5, 1.0}), argument_error);
  CHECK_THROWS_AS(StepFunction({1.0, 1.0}, {0.5, 1.0}), argument_error);
  CHECK_THROWS_AS(StepFunction({1.0, 2.0}, {0.8, 0.5}), argument_error);
  CHECK_THROWS_AS(StepFunction({1.0, 2.0}, {0.5, 1.5}), argument_error);
  CHECK_THROWS_AS(StepFunction({1.0}, {0.5, 1.0}), argument_error);
  CHECK_THROWS_AS(ecdf_of({}), argument_error);
  CHECK_NOTHROW(StepFunction({1.0, 2.0}, {0.5, 0.5}));
}

TEST_CASE("ieee comparisons against extended thresholds") {
  CHECK(1.0 <= pos_inf);
  CHECK_FALSE(1.0 <= neg_inf);
  CHECK(neg_inf + 0.5 == neg_inf);
  CHECK(pos_inf + 0.5 == pos_inf);
}
