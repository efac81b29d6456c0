#include <set>
#include <string>

#include "doctest.h"
#include "interlat/gradcheck.hpp"

using namespace interlat;

TEST_CASE("every gradient check passes") {
  const auto results = run_grad_checks();
  REQUIRE(results.size() >= 14);
  std::set<std::string> names;
  for (const auto& row : results) {
    CAPTURE(row.name);
    CAPTURE(row.max_rel_err);
    CHECK(row.passed);
    CHECK(row.max_rel_err < row.tolerance);
    names.insert(row.name);
  }
  // the battery must reach from single ops to the full objective
  CHECK(names.count("matmul"));
  CHECK(names.count("softmax"));
  CHECK(names.count("softquant"));
  CHECK(names.count("spatial_attention"));
  CHECK(names.count("temporal_attention"));
  CHECK(names.count("mixer"));
  CHECK(names.count("region_mask"));
  CHECK(names.count("region_block"));
  CHECK(names.count("id_path"));
  CHECK(names.count("diffusion_loss"));
  CHECK(names.count("ortho_loss"));
  CHECK(names.count("total_objective"));
}

TEST_CASE("the name filter narrows the battery") {
  const auto results = run_grad_checks("attention");
  REQUIRE(results.size() == 2);
  for (const auto& row : results)
    CHECK(row.name.find("attention") != std::string::npos);
  CHECK(run_grad_checks("no_such_case").empty());
}

TEST_CASE("a sabotaged gradient is detected as a failure") {
  const auto results = run_grad_checks("negative_control", true);
  REQUIRE(results.size() == 1);
  CHECK(results[0].name == "negative_control");
  CHECK_FALSE(results[0].passed);
  CHECK(results[0].max_rel_err > 0.1);
}
