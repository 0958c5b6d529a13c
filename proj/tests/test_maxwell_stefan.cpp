#include "test_helpers.hpp"

TEST_CASE("placeholder test_maxwell_stefan") { REQUIRE(true); }
