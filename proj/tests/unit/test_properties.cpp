#include <doctest.h>

#include "properties.hpp"

TEST_CASE("property suites") {
  for (const auto& property : props::all()) {
    const auto outcome = props::run(property);
    INFO(outcome.module << ": " << outcome.name << " " << outcome.first_failure);
    CHECK(outcome.cases >= props::kMinCases);
    CHECK(outcome.failures == 0);
  }
}
