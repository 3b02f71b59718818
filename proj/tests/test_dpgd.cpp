#include <doctest.h>
TEST_CASE("placeholder test_dpgd") { CHECK(true); }
