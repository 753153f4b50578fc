#include <set>

#include "doctest.h"
#include "mismed/rng.hpp"

using mismed::Philox4x32;

TEST_SUITE("rng") {
  TEST_CASE("Philox4x32-10 known-answer vectors") {
    using B = Philox4x32::Block;
    CHECK(Philox4x32::generate_block({0, 0, 0, 0}, {0, 0}) ==
          B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::generate_block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                     {0xffffffffu, 0xffffffffu}) ==
          B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::generate_block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     {0xa4093822u, 0x299f31d0u}) ==
          B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("same seed and stream reproduce, other streams differ") {
    Philox4x32 a(42, 3), b(42, 3), c(42, 4), d(43, 3);
    bool differ_c = false, differ_d = false;
    for (int k = 0; k < 64; ++k) {
      const auto va = a();
      CHECK(va == b());
      differ_c |= va != c();
      differ_d |= va != d();
    }
    CHECK(differ_c);
    CHECK(differ_d);
  }

  TEST_CASE("uniform01 stays in [0, 1) and looks uniform") {
    Philox4x32 g(7, 0);
    double sum = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
      const double u = mismed::uniform01(g);
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
  }
}
