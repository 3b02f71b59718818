#include <doctest.h>
TEST_CASE("placeholder test_gd") { CHECK(true); }
