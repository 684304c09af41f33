#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "straem/drift.hpp"

using namespace straem;

TEST(MwuTest, SeparatedSamples) {
    const auto r = mwu_test(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
    EXPECT_DOUBLE_EQ(r.r_ref, 6.0);
    EXPECT_DOUBLE_EQ(r.u_ref, 9.0);
    EXPECT_DOUBLE_EQ(r.u_mov, 0.0);
    EXPECT_DOUBLE_EQ(r.u, 0.0);
    EXPECT_DOUBLE_EQ(r.mu, 4.5);
    // frozen from scipy.stats.mannwhitneyu(method="asymptotic", use_continuity=False)
    EXPECT_NEAR(r.sigma, 2.29128784747792, 1e-12);
    EXPECT_NEAR(r.z, -1.9639610121239315, 1e-12);
    EXPECT_NEAR(r.p_value, 0.049534613435626706, 1e-12);
}

TEST(MwuTest, IdenticalSamplesGivePOne) {
    const std::vector<double> a{0.3, 0.1, 0.7, 0.2};
    const auto r = mwu_test(a, a);
    EXPECT_DOUBLE_EQ(r.u_ref, 8.0);
    EXPECT_DOUBLE_EQ(r.u_mov, 8.0);
    EXPECT_DOUBLE_EQ(r.z, 0.0);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(MwuTest, FullTiesUseMidpointRanks) {
    const std::vector<double> ones{1, 1};
    const auto ranks = midpoint_ranks(std::vector<double>{1, 1, 1, 1});
    for (double rk : ranks) EXPECT_DOUBLE_EQ(rk, 2.5);
    const auto r = mwu_test(ones, ones);
    EXPECT_DOUBLE_EQ(r.u, 2.0);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(MwuTest, EmptySampleIsAnError) {
    EXPECT_THROW((void)mwu_test(std::vector<double>{}, std::vector<double>{1.0}), PreconditionError);
}

TEST(MwuTest, TieCorrectionDegeneratesToPOne) {
    const std::vector<double> a(5, 2.0);
    const auto r = mwu_test(a, a, true);
    EXPECT_DOUBLE_EQ(r.sigma, 0.0);
    EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(MwuTest, TieCorrectionShrinksSigmaWithTies) {
    const std::vector<double> a{1, 1, 2, 3}, b{1, 2, 2, 4};
    EXPECT_LT(mwu_test(a, b, true).sigma, mwu_test(a, b, false).sigma);
    const std::vector<double> c{1, 2, 3}, d{4, 5, 6};
    EXPECT_NEAR(mwu_test(c, d, true).sigma, mwu_test(c, d, false).sigma, 1e-12);
}

TEST(MwuTest, AgreesWithOracleAndSymmetry) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::uniform_int_distribution<std::size_t> size(3, 50);
        std::uniform_int_distribution<int> coarse(0, 15);
        std::vector<double> ref(size(rng)), mov(size(rng));
        const double shift = (trial % 3) * 0.1;
        for (auto& v : ref) v = coarse(rng) * 0.1;
        for (auto& v : mov) v = coarse(rng) * 0.1 + shift;
        const auto r = mwu_test(ref, mov);
        const auto o = oracle::mwu(ref, mov);
        EXPECT_NEAR(r.u_ref, o.u_ref, 1e-9);
        EXPECT_NEAR(r.u_mov, o.u_mov, 1e-9);
        EXPECT_NEAR(r.z, o.z, 1e-9);
        EXPECT_NEAR(r.p_value, o.p, 1e-9);
        EXPECT_NEAR(r.u_ref, oracle::pairwise_u_ref(ref, mov), 1e-9);
        EXPECT_NEAR(r.u_ref + r.u_mov, static_cast<double>(ref.size() * mov.size()), 1e-9);
        EXPECT_GE(r.p_value, 0.0);
        EXPECT_LE(r.p_value, 1.0);
        const auto s = mwu_test(mov, ref);
        EXPECT_NEAR(s.u, r.u, 1e-9);
        EXPECT_NEAR(std::fabs(s.z), std::fabs(r.z), 1e-12);
        EXPECT_NEAR(s.p_value, r.p_value, 1e-12);
    }
}

TEST(DriftStateTest, ValidatesThresholds) {
    EXPECT_THROW((DriftState{.p_warn = 0.001, .p_alarm = 0.01}.validate()), ConfigError);
    EXPECT_NO_THROW((DriftState{.p_warn = 0.01, .p_alarm = 0.01}.validate()));
}

TEST(DriftStateTest, FlagRules) {
    DriftState s{.p_warn = 0.01, .p_alarm = 0.001};
    s.update_flags(0.5);
    EXPECT_FALSE(s.flag_warn);
    EXPECT_FALSE(s.flag_alarm);
    s.update_flags(0.005);
    EXPECT_TRUE(s.flag_warn);
    EXPECT_FALSE(s.flag_alarm);

    DriftState t{.p_warn = 0.01, .p_alarm = 0.001};
    t.update_flags(0.0005);
    EXPECT_TRUE(t.flag_warn);
    EXPECT_TRUE(t.flag_alarm);

    DriftState edge{.p_warn = 0.01, .p_alarm = 0.001};
    edge.update_flags(0.001);  // inclusive
    EXPECT_TRUE(edge.flag_alarm);
}

TEST(DriftStateTest, WarningAgeIsNotResetWhileRaised) {
    DriftState s{.p_warn = 0.01, .p_alarm = 0.001, .expiry_time = 100};
    s.update_flags(0.005);
    for (int i = 0; i < 50; ++i) s.tick_warning();
    s.update_flags(0.002);
    EXPECT_EQ(s.warn_age, 50u);
}

TEST(DriftStateTest, WarningExpiresAfterExpiryTime) {
    DriftState s{.p_warn = 0.01, .p_alarm = 0.001, .expiry_time = 100};
    s.update_flags(0.005);
    for (int i = 0; i < 100; ++i) EXPECT_FALSE(s.tick_warning());
    EXPECT_TRUE(s.flag_warn);
    EXPECT_TRUE(s.tick_warning());
    EXPECT_FALSE(s.flag_warn);
}

TEST(DriftStateTest, AlarmStopsWarningClock) {
    DriftState s{.p_warn = 0.01, .p_alarm = 0.001, .expiry_time = 5};
    s.update_flags(0.005);
    for (int i = 0; i < 3; ++i) s.tick_warning();
    s.update_flags(0.0001);
    for (int i = 0; i < 10; ++i) EXPECT_FALSE(s.tick_warning());
    EXPECT_TRUE(s.flag_alarm);
    EXPECT_EQ(s.warn_age, 3u);
    s.reset();
    EXPECT_FALSE(s.flag_warn);
    EXPECT_FALSE(s.flag_alarm);
}
