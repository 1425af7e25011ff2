#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <doctest.h>

#include "arena/rng.hpp"
#include "arena/text.hpp"

using namespace arena;

TEST_CASE("format_double round-trips random doubles exactly") {
    RandomStream rng(201);
    for (int i = 0; i < 20000; ++i) {
        double v = rng.uniform(-1e6, 1e6);
        if (i % 3 == 0) v = rng.lognormal(0.0, 10.0);  // exercise wide exponents
        double back = 0.0;
        REQUIRE(parse_double(format_double(v), back));
        CHECK(back == v);
    }
}

TEST_CASE("format_double picks the shortest form for simple values") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(10000.0) == "10000");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.5) == "-2.5");
}

TEST_CASE("format_int handles the extremes") {
    CHECK(format_int(0) == "0");
    CHECK(format_int(-1) == "-1");
    CHECK(format_int(std::numeric_limits<std::int64_t>::max()) == "9223372036854775807");
    CHECK(format_int(std::numeric_limits<std::int64_t>::min()) == "-9223372036854775808");
}

TEST_CASE("parse_double rejects partial and malformed fields") {
    double v = 0.0;
    CHECK_FALSE(parse_double("", v));
    CHECK_FALSE(parse_double("1.5x", v));
    CHECK_FALSE(parse_double("1.5 ", v));
    CHECK_FALSE(parse_double(" 1.5", v));
    CHECK_FALSE(parse_double("--2", v));
    CHECK(parse_double("1e-3", v));
    CHECK(v == 1e-3);
    CHECK(parse_double("-0.25", v));
    CHECK(v == -0.25);
}

TEST_CASE("parse_int64 rejects floats, garbage, and overflow") {
    std::int64_t v = 0;
    CHECK_FALSE(parse_int64("", v));
    CHECK_FALSE(parse_int64("12.5", v));
    CHECK_FALSE(parse_int64("12x", v));
    CHECK_FALSE(parse_int64("99999999999999999999", v));
    CHECK(parse_int64("-42", v));
    CHECK(v == -42);
}
