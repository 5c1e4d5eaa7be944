#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "choreo/rational.hpp"

using namespace choreo;

TEST_CASE("rational literal parsing") {
  CHECK(*rat_from_literal("3") == Rat(3));
  CHECK(*rat_from_literal("0.25") == make_rat(1, 4));
  CHECK(*rat_from_literal("12.5") == make_rat(25, 2));
  CHECK(*rat_from_literal("0.2") == make_rat(1, 5));
  CHECK(!rat_from_literal("abc").has_value());
  CHECK(!rat_from_literal("").has_value());
}

TEST_CASE("rational rendering") {
  CHECK(rat_str(make_rat(3)) == "3");
  CHECK(rat_str(make_rat(-7, 2)) == "-7/2");
  CHECK(rat_decimal_str(make_rat(1, 4)) == "0.25");
  CHECK(rat_decimal_str(make_rat(25, 2)) == "12.5");
  CHECK(rat_decimal_str(make_rat(1, 3)) == "1/3");
  CHECK(rat_decimal_str(make_rat(-3, 4)) == "-0.75");
  CHECK(rat_decimal_str(make_rat(4)) == "4");
}

TEST_CASE("integer square root") {
  CHECK(isqrt_floor(Int(0)) == 0);
  CHECK(isqrt_floor(Int(1)) == 1);
  CHECK(isqrt_floor(Int(15)) == 3);
  CHECK(isqrt_floor(Int(16)) == 4);
  CHECK(isqrt_floor(Int(17)) == 4);
  Int big = Int("123456789123456789123456789");
  Int r = isqrt_floor(big);
  CHECK(r * r <= big);
  CHECK((r + 1) * (r + 1) > big);
}

TEST_CASE("exact rational square roots") {
  CHECK(*rat_sqrt_exact(make_rat(9, 4)) == make_rat(3, 2));
  CHECK(*rat_sqrt_exact(Rat(625)) == Rat(25));
  CHECK(*rat_sqrt_exact(make_rat(625, 100)) == make_rat(5, 2));
  CHECK(!rat_sqrt_exact(Rat(2)).has_value());
  CHECK(*rat_sqrt_exact(Rat(0)) == Rat(0));
}

TEST_CASE("square root enclosures") {
  Rat lo, hi;
  rat_sqrt_bounds(Rat(2), 40, lo, hi);
  CHECK(lo * lo <= Rat(2));
  CHECK(hi * hi >= Rat(2));
  CHECK(hi - lo <= Rat(Int(1), Int(Int(1) << 40)));
  rat_sqrt_bounds(make_rat(9, 4), 20, lo, hi);
  CHECK(lo <= make_rat(3, 2));
  CHECK(hi >= make_rat(3, 2));
}

TEST_CASE("floor and ceil") {
  CHECK(rat_floor(make_rat(7, 2)) == 3);
  CHECK(rat_ceil(make_rat(7, 2)) == 4);
  CHECK(rat_floor(make_rat(-7, 2)) == -4);
  CHECK(rat_ceil(make_rat(-7, 2)) == -3);
  CHECK(rat_floor(Rat(5)) == 5);
  CHECK(rat_ceil(Rat(5)) == 5);
}
