#include <gtest/gtest.h>

#include <cmath>

#include "qtsm/random.hpp"

namespace qtsm {
namespace {

using Counter = Philox4x32::Counter;

TEST(Philox, KnownAnswers) {
  EXPECT_EQ(Philox4x32::generate({0, 0, 0, 0}, {0, 0}), (Counter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::generate({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (Counter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::generate({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (Counter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalStream, SequentialMatchesRandomAccess) {
  NormalStream stream(42, 7);
  const NormalStream ref(42, 7);
  for (std::uint64_t q = 0; q < 1001; ++q) EXPECT_EQ(stream.next(), ref.at(q));
}

TEST(NormalStream, DeterministicInSeedAndPath) {
  EXPECT_EQ(NormalStream(5, 3).at(17), NormalStream(5, 3).at(17));
  EXPECT_NE(NormalStream(5, 3).at(17), NormalStream(6, 3).at(17));
  EXPECT_NE(NormalStream(5, 3).at(17), NormalStream(5, 4).at(17));
  EXPECT_NE(NormalStream(5, 1ull << 40).at(0), NormalStream(5, 0).at(0));
}

TEST(NormalStream, Moments) {
  const int n = 200000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0, cross = 0;
  NormalStream stream(2024, 0);
  double prev = stream.next();
  for (int i = 0; i < n; ++i) {
    const double z = stream.next();
    s1 += z;
    s2 += z * z;
    s3 += z * z * z;
    s4 += z * z * z * z;
    cross += z * prev;
    prev = z;
  }
  EXPECT_NEAR(s1 / n, 0.0, 5 * std::sqrt(1.0 / n));
  EXPECT_NEAR(s2 / n, 1.0, 5 * std::sqrt(2.0 / n));
  EXPECT_NEAR(s3 / n, 0.0, 5 * std::sqrt(15.0 / n));
  EXPECT_NEAR(s4 / n, 3.0, 5 * std::sqrt(96.0 / n));
  EXPECT_NEAR(cross / n, 0.0, 5 * std::sqrt(1.0 / n));
}

TEST(NormalStream, Tails) {
  NormalStream stream(9, 2);
  int beyond = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = stream.next();
    ASSERT_TRUE(std::isfinite(z));
    if (std::abs(z) > 1.959963985) ++beyond;
  }
  EXPECT_NEAR(beyond / double(n), 0.05, 5 * std::sqrt(0.05 * 0.95 / n));
}

}  // namespace
}  // namespace qtsm
