#include <gtest/gtest.h>

#include <cmath>

#include <set>

#include "mcmcdegen/rng.hpp"

using namespace mcmcdegen;

namespace {

void expect_block(Philox4x32::Counter ctr, Philox4x32::Key key, Philox4x32::Counter want) {
    const auto got = Philox4x32::apply(ctr, key);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(got[i], want[i]) << "word " << i;
}

} // namespace

TEST(Philox, KnownAnswerZeros) {
    expect_block({0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
}

TEST(Philox, KnownAnswerOnes) {
    expect_block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff},
                 {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
}

TEST(Philox, KnownAnswerPi) {
    expect_block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0},
                 {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST(RngStream, SameKeyAndStreamReproduce) {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RngStream, DistinctStreamsDiffer) {
    std::set<std::uint64_t> firsts;
    for (std::uint64_t s = 0; s < 200; ++s) firsts.insert(RngStream(1, s)());
    EXPECT_EQ(firsts.size(), 200u);
    RngStream a(1, 0), b(2, 0);
    int equal = 0;
    for (int i = 0; i < 100; ++i) equal += a() == b();
    EXPECT_EQ(equal, 0);
}

TEST(RngStream, DeriveIsDeterministicAndOrderSensitive) {
    const RngStream root(9, 3);
    RngStream x = root.derive({1, 2});
    RngStream y = root.derive({1, 2});
    RngStream z = root.derive({2, 1});
    EXPECT_EQ(x.stream_id(), y.stream_id());
    EXPECT_NE(x.stream_id(), z.stream_id());
    EXPECT_EQ(x(), y());
    EXPECT_EQ(derive_stream_id(5, {1, 2}), derive_stream_id(5, {1, 2}));
    EXPECT_NE(derive_stream_id(5, {1, 2}), derive_stream_id(6, {1, 2}));
}

TEST(RngStream, UniformIsOpenAndCentered) {
    RngStream r(123, 0);
    const int N = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < N; ++i) {
        const double u = r.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sum2 += u * u;
    }
    const double mean = sum / N;
    EXPECT_NEAR(mean, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / N));
    EXPECT_NEAR(sum2 / N - mean * mean, 1.0 / 12.0, 2e-3);
}
