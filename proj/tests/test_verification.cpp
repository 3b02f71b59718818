#include <doctest.h>
TEST_CASE("placeholder test_verification") { CHECK(true); }
