#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "epochsim/engine.hpp"

using namespace epochsim;

TEST(SimTime, RejectsNonFiniteAndNegative)
{
    EXPECT_THROW(SimTime(-1.0), ConfigError);
    EXPECT_THROW(SimTime(std::nan("")), ConfigError);
    EXPECT_THROW(SimTime(std::numeric_limits<double>::infinity()), ConfigError);
    EXPECT_EQ(SimTime(0.0).value(), 0.0);
    EXPECT_LT(SimTime(1.0), SimTime(2.0));
}

TEST(EpochOf, Boundaries)
{
    EXPECT_EQ(epoch_of(0.0, 1.0).i, 0u);
    EXPECT_EQ(epoch_of(3.0, 1.0).i, 3u);
    EXPECT_EQ(epoch_of(2.999999, 1.0).i, 2u);
}

TEST(EpochOf, RejectsBadArguments)
{
    EXPECT_THROW(epoch_of(1.0, 0.0), ConfigError);
    EXPECT_THROW(epoch_of(1.0, -1.0), ConfigError);
    EXPECT_THROW(epoch_of(std::nan(""), 1.0), ConfigError);
    EXPECT_THROW(epoch_of(std::numeric_limits<double>::infinity(), 1.0), ConfigError);
}

TEST(EpochOf, HalfOpenMembershipHoldsInFloatingPoint)
{
    std::mt19937_64 rng(42);
    const double widths[] = {1.0, 0.1, 0.05, 1.0 / 3.0, 0.025, 7.5};
    for (double w : widths) {
        std::uniform_real_distribution<double> t(0.0, 1e5 * w);
        for (int k = 0; k < 20000; ++k) {
            const double x = k % 3 == 0 ? std::floor(t(rng) / w) * w : t(rng);
            const auto i = epoch_of(x, w).i;
            EXPECT_LE(static_cast<double>(i) * w, x);
            EXPECT_LT(x, static_cast<double>(i + 1) * w);
        }
    }
}

TEST(EngineConfig, WidthDefaultsToLookahead)
{
    EngineConfig c;
    c.lookahead = SimTime(0.25);
    EXPECT_EQ(c.width(), 0.25);
    c.epoch_width = SimTime(0.125);
    EXPECT_EQ(c.width(), 0.125);
}

TEST(EngineConfig, RejectsWidthAboveLookahead)
{
    EngineConfig c;
    c.lookahead = SimTime(0.1);
    c.epoch_width = SimTime(0.2);
    EXPECT_THROW(c.validate(), ConfigError);
    c.epoch_width = SimTime(0.1);
    EXPECT_NO_THROW(c.validate());
    c.epoch_width = SimTime(0.0);
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(EngineConfig, RejectsShallowCalendar)
{
    EngineConfig c;
    c.calendar_depth = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c.calendar_depth = 2;
    EXPECT_NO_THROW(c.validate());
}

TEST(EngineConfig, ThreadsBeyondCpusNeedOptIn)
{
    EngineConfig c;
    c.num_threads = available_cpus() + 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c.allow_oversubscription = true;
    EXPECT_NO_THROW(c.validate());
    c.pin = PinMode::always;
    EXPECT_THROW(c.validate(), ConfigError);
    c.num_threads = 0;
    c.pin = PinMode::automatic;
    EXPECT_THROW(c.validate(), ConfigError);
}
