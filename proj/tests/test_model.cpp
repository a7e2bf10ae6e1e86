#include <memory>
#include <set>

#include <gtest/gtest.h>

#include "epochsim/model.hpp"
#include "support.hpp"

using namespace epochsim;
using epochsim::testing::CollectingSink;
using epochsim::testing::make_event;

namespace {

struct Fixture {
    explicit Fixture(std::uint32_t objects = 4, double lookahead = 1.0)
    {
        for (ObjectId o = 0; o < objects; ++o) {
            allocs.emplace_back(o, 0, AllocatorOptions{2, 256});
            rngs.push_back(make_object_rng(9, o));
        }
        ctx = std::make_unique<WorkerContext>(
            3, 0, WorkerContext::Services{&sink, allocs, rngs, lookahead, objects});
    }

    CollectingSink sink;
    std::vector<ObjectAllocator> allocs;
    std::vector<ObjectRng> rngs;
    std::unique_ptr<WorkerContext> ctx;
};

} // namespace

TEST(Schedule, LookaheadBoundaryIsInclusive)
{
    Fixture f;
    f.ctx->begin_event(1, SimTime(2.0));
    EXPECT_NO_THROW(f.ctx->schedule_new_event(2, SimTime(3.0)));
    EXPECT_THROW(f.ctx->schedule_new_event(2, SimTime(2.5)), LookaheadViolation);
    EXPECT_THROW(f.ctx->schedule_new_event(4, SimTime(5.0)), InvalidObject);
    f.ctx->end_callback();
    ASSERT_EQ(f.sink.scheduled_.size(), 1u);
    const auto& e = f.sink.scheduled_[0];
    EXPECT_EQ(e.dest_object, 2u);
    EXPECT_EQ(e.parent_ts, 2.0);
    EXPECT_EQ(e.seq >> 48, 3u);
}

TEST(Schedule, ViolationMessageNamesObjectAndTimes)
{
    Fixture f;
    f.ctx->begin_event(1, SimTime(2.0));
    try {
        f.ctx->schedule_new_event(3, SimTime(2.5));
        FAIL();
    } catch (const LookaheadViolation& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("object 1"), std::string::npos) << msg;
        EXPECT_NE(msg.find("2.5"), std::string::npos) << msg;
    }
}

TEST(Schedule, EachCallProducesOneDeliveryWithFreshSeq)
{
    Fixture f;
    f.sink.epoch_ = EpochIndex{7};
    f.ctx->begin_event(0, SimTime(7.5));
    const std::byte payload[3] = {std::byte{1}, std::byte{2}, std::byte{3}};
    for (int k = 0; k < 10; ++k)
        f.ctx->schedule_new_event(static_cast<ObjectId>(k % 4), SimTime(9.0 + k), payload);
    f.ctx->end_callback();
    ASSERT_EQ(f.sink.scheduled_.size(), 10u);
    EXPECT_EQ(f.ctx->scheduled_count(), 10u);
    std::set<std::uint64_t> seqs;
    for (const auto& e : f.sink.scheduled_) {
        seqs.insert(e.seq);
        EXPECT_EQ(e.emit_epoch.i, 7u);
        EXPECT_EQ(e.payload.size(), 3u);
    }
    EXPECT_EQ(seqs.size(), 10u);
}

TEST(Schedule, OnlyInsideProcessing)
{
    Fixture f;
    EXPECT_THROW(f.ctx->schedule_new_event(0, SimTime(5.0)), Error);
    f.ctx->begin_init(0);
    EXPECT_THROW(f.ctx->schedule_new_event(0, SimTime(5.0)), Error);
    f.ctx->end_callback();
}

TEST(Payload, RejectsOversizedPayload)
{
    std::vector<std::byte> big(kMaxPayload + 1);
    EXPECT_THROW(Payload{big}, ConfigError);
    std::vector<std::byte> ok(kMaxPayload, std::byte{7});
    EXPECT_EQ(Payload{ok}.size(), kMaxPayload);
}

TEST(InjectInitial, NoLookaheadCheckButRangeChecked)
{
    Fixture f;
    f.ctx->begin_init(2);
    EXPECT_NO_THROW(f.ctx->inject_initial(2, SimTime(0.0)));
    EXPECT_NO_THROW(f.ctx->inject_initial(0, SimTime(0.1)));
    EXPECT_THROW(f.ctx->inject_initial(4, SimTime(0.0)), InvalidObject);
    f.ctx->end_callback();
    ASSERT_EQ(f.sink.initial_.size(), 2u);
    EXPECT_EQ(f.sink.initial_[0].parent_ts, kNoParent);
    EXPECT_THROW(f.ctx->inject_initial(0, SimTime(0.0)), Error);
}

TEST(Context, CurrentObjectOnlyInsideCallbacks)
{
    Fixture f;
    EXPECT_FALSE(f.ctx->has_current_object());
    EXPECT_THROW(f.ctx->current_object(), Error);
    EXPECT_THROW(f.ctx->obj_alloc(8), Error);
    f.ctx->begin_event(3, SimTime(1.0));
    EXPECT_EQ(f.ctx->current_object(), 3u);
    f.ctx->end_callback();
}

TEST(Dispatch, ContextVisibleToAllocator)
{
    Fixture f;
    ModelBinding m;
    m.object_count = 4;
    void* got = nullptr;
    ObjectId seen = 99;
    m.process_event = [&](ObjectId obj, SimTime, std::span<const std::byte>, WorkerContext& ctx) {
        seen = ctx.current_object();
        EXPECT_EQ(seen, obj);
        got = ctx.obj_alloc(40);
    };
    dispatch(make_event(2, 1.0), *f.ctx, m);
    EXPECT_EQ(seen, 2u);
    EXPECT_EQ(f.allocs[2].chunk_capacity(got), 64u);
    EXPECT_EQ(f.allocs[1].chunk_capacity(got), 0u);
    EXPECT_FALSE(f.ctx->has_current_object());
}

TEST(Dispatch, RngIsPerObject)
{
    Fixture f;
    ModelBinding m;
    m.object_count = 4;
    std::vector<std::uint64_t> draws;
    m.process_event = [&](ObjectId, SimTime, std::span<const std::byte>, WorkerContext& ctx) {
        draws.push_back(ctx.rng()());
    };
    dispatch(make_event(1, 1.0), *f.ctx, m);
    dispatch(make_event(2, 1.0), *f.ctx, m);
    dispatch(make_event(1, 2.0), *f.ctx, m);
    auto r1 = make_object_rng(9, 1);
    auto r2 = make_object_rng(9, 2);
    EXPECT_EQ(draws[0], r1());
    EXPECT_EQ(draws[1], r2());
    EXPECT_EQ(draws[2], r1());
    EXPECT_NE(make_object_rng(9, 1)(), make_object_rng(10, 1)());
}

TEST(Dispatch, CausalityCheckerTripsOnDecrease)
{
    Fixture f;
    ModelBinding m;
    m.object_count = 4;
    m.process_event = [](ObjectId, SimTime, std::span<const std::byte>, WorkerContext&) {};
    CausalityChecker checker(4);
    dispatch(make_event(1, 5.0), *f.ctx, m, &checker);
    EXPECT_THROW(dispatch(make_event(1, 4.0), *f.ctx, m, &checker), CausalityViolation);
    EXPECT_FALSE(f.ctx->has_current_object());
}

TEST(Dispatch, EqualTimestampIsAccepted)
{
    Fixture f;
    ModelBinding m;
    m.object_count = 4;
    m.process_event = [](ObjectId, SimTime, std::span<const std::byte>, WorkerContext&) {};
    CausalityChecker checker(4);
    dispatch(make_event(0, 5.0), *f.ctx, m, &checker);
    EXPECT_NO_THROW(dispatch(make_event(0, 5.0), *f.ctx, m, &checker));
    EXPECT_EQ(checker.watermark(0), 5.0);
    // Objects are independent.
    EXPECT_NO_THROW(dispatch(make_event(1, 1.0), *f.ctx, m, &checker));
}

TEST(Dispatch, ModelFailureCarriesObjectAndTime)
{
    Fixture f;
    ModelBinding m;
    m.object_count = 4;
    m.process_event = [](ObjectId, SimTime, std::span<const std::byte>, WorkerContext&) {
        throw std::runtime_error("boom");
    };
    try {
        dispatch(make_event(3, 1.25), *f.ctx, m);
        FAIL();
    } catch (const ModelError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("object 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("1.25"), std::string::npos) << msg;
        EXPECT_NE(msg.find("boom"), std::string::npos) << msg;
    }
    EXPECT_FALSE(f.ctx->has_current_object());
}

TEST(Dispatch, EngineErrorsPassThroughUnwrapped)
{
    Fixture f;
    ModelBinding m;
    m.object_count = 4;
    m.process_event = [](ObjectId, SimTime now, std::span<const std::byte>, WorkerContext& ctx) {
        ctx.schedule_new_event(0, SimTime(now.value() + 0.5));
    };
    EXPECT_THROW(dispatch(make_event(0, 1.0), *f.ctx, m), LookaheadViolation);
}
