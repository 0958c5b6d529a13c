#include "test_helpers.hpp"

TEST_CASE("placeholder test_carleman") { REQUIRE(true); }
