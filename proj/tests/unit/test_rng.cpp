#include <gtest/gtest.h>

#include <random>
#include <set>

#include "lpplscan/rng.hpp"

using lppl::Philox4x32;

// Known-answer vectors of the Random123 reference implementation (philox4x32, 10 rounds).
TEST(Philox, KnownAnswerZero) {
    const auto out = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                                       {0xffffffff, 0xffffffff});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
    const auto out = Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                                       {0xa4093822, 0x299f31d0});
    EXPECT_EQ(out, (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, DeterministicPerSeedAndStream) {
    Philox4x32 a(42, 0), b(42, 0), c(42, 1), d(43, 0);
    std::vector<std::uint64_t> va, vb, vc, vd;
    for (int i = 0; i < 64; ++i) {
        va.push_back(a());
        vb.push_back(b());
        vc.push_back(c());
        vd.push_back(d());
    }
    EXPECT_EQ(va, vb);
    EXPECT_NE(va, vc);
    EXPECT_NE(va, vd);
}

TEST(Philox, WorksWithStandardDistributions) {
    Philox4x32 g(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) sum += u(g);
    // Mean of U(0,1) has sd 1/sqrt(12 n).
    EXPECT_NEAR(sum / n, 0.5, 4.0 / std::sqrt(12.0 * n));
}

TEST(DeriveSeed, DistinctChildren) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t parent = 0; parent < 20; ++parent) {
        for (std::uint64_t i = 0; i < 500; ++i) seen.insert(lppl::derive_seed(parent, i));
    }
    EXPECT_EQ(seen.size(), 20u * 500u);
    EXPECT_EQ(lppl::derive_seed(5, 3), lppl::derive_seed(5, 3));
}
