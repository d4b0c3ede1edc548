#include <catch2/catch_amalgamated.hpp>
#include "advaudio/advaudio.hpp"
TEST_CASE("placeholder test_attack") { SUCCEED(); }
