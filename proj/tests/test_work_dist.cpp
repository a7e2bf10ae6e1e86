#include <algorithm>
#include <random>
#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "epochsim/work_dist.hpp"

using namespace epochsim;

namespace {

std::vector<NodePartition> ranges(std::initializer_list<std::pair<std::int64_t, std::int64_t>> rs)
{
    std::vector<NodePartition> p;
    NodeId n = 0;
    for (auto [lo, hi] : rs)
        p.emplace_back(n++, lo, hi);
    return p;
}

} // namespace

TEST(AcquireNext, SingleNodeHandsOutEachIdOnce)
{
    auto p = ranges({{0, 3}});
    std::vector<ObjectId> got;
    for (int k = 0; k < 4; ++k) {
        auto a = acquire_next(NodeId{0}, p);
        ASSERT_TRUE(a);
        EXPECT_FALSE(a->remote);
        got.push_back(a->object);
    }
    EXPECT_EQ(got, (std::vector<ObjectId>{0, 1, 2, 3}));
    EXPECT_FALSE(acquire_next(NodeId{0}, p));
}

TEST(AcquireNext, StealsFromRemoteNodeWhenLocalIsDone)
{
    auto p = ranges({{0, 1}, {2, 3}});
    p[1].counter_c = 2;
    AcquisitionStats stats;
    auto a = acquire_next(NodeId{1}, p, &stats);
    ASSERT_TRUE(a);
    EXPECT_TRUE(a->object == 0 || a->object == 1);
    EXPECT_TRUE(a->remote);
    EXPECT_EQ(a->from_node, 0u);
    EXPECT_EQ(stats.remote_steals, 1u);
    EXPECT_EQ(stats.local_hits, 0u);
}

TEST(AcquireNext, EmptyLocalRangeMovesOn)
{
    auto p = ranges({{0, 0}, {1, 1}, {2, 1}});
    auto a = acquire_next(NodeId{2}, p);
    ASSERT_TRUE(a);
    EXPECT_EQ(a->object, 0u);
    EXPECT_EQ(p[2].counter_c.load(), 1u);
}

TEST(AcquireNext, CursorNeverRevisitsANodeItLeft)
{
    auto p = ranges({{0, 1}, {2, 3}});
    AcquisitionCursor cur(0, 2);
    ASSERT_EQ(acquire_next(cur, p)->object, 0u);
    ASSERT_EQ(acquire_next(cur, p)->object, 1u);
    ASSERT_EQ(acquire_next(cur, p)->object, 2u);
    // A counter rewound behind the cursor is not seen again this epoch.
    p[0].counter_c = 0;
    ASSERT_EQ(acquire_next(cur, p)->object, 3u);
    EXPECT_FALSE(acquire_next(cur, p));
    EXPECT_TRUE(cur.exhausted());
}

// Brute-force sequential dispenser: from the local node, walk nodes in
// ascending order modulo the node count; each node yields the identifiers
// left above its counter.
std::vector<ObjectId> dispenser(const std::vector<std::pair<std::int64_t, std::int64_t>>& rs,
                                const std::vector<std::uint64_t>& counters, NodeId local)
{
    std::vector<ObjectId> out;
    const auto n = rs.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto node = (local + k) % n;
        const auto [lo, hi] = rs[node];
        for (std::int64_t v = static_cast<std::int64_t>(counters[node]); lo + v <= hi; ++v)
            out.push_back(static_cast<ObjectId>(lo + v));
    }
    return out;
}

TEST(AcquireNext, MatchesSequentialDispenserOverAllCounterStates)
{
    std::size_t states = 0;
    for (std::uint32_t nodes = 1; nodes <= 3; ++nodes) {
        for (std::uint32_t objects = 1; objects <= 4; ++objects) {
            const auto base = partition_objects(objects, emulated_topology(nodes, 1));
            std::vector<std::pair<std::int64_t, std::int64_t>> rs;
            for (const auto& b : base)
                rs.emplace_back(b.min_id, b.max_id);

            // Every counter ranges over 0..size+1, including overshoot.
            std::vector<std::uint64_t> counters(nodes, 0);
            while (true) {
                for (NodeId local = 0; local < nodes; ++local) {
                    auto p = base;
                    for (std::uint32_t n = 0; n < nodes; ++n)
                        p[n].counter_c = counters[n];
                    AcquisitionCursor cur(local, nodes);
                    std::vector<ObjectId> got;
                    std::vector<std::uint64_t> per_node(nodes, 0);
                    while (auto a = acquire_next(cur, p)) {
                        got.push_back(a->object);
                        EXPECT_EQ(a->remote, a->from_node != local);
                        EXPECT_TRUE(p[a->from_node].contains(a->object));
                        ++per_node[a->from_node];
                    }
                    ASSERT_EQ(got, dispenser(rs, counters, local));
                    // One extra failing probe per node ends its turn.
                    for (std::uint32_t n = 0; n < nodes; ++n)
                        ASSERT_EQ(p[n].counter_c.load(), counters[n] + per_node[n] + 1);
                    ++states;
                }
                std::uint32_t k = 0;
                for (; k < nodes; ++k) {
                    if (++counters[k] <= base[k].size() + 1)
                        break;
                    counters[k] = 0;
                }
                if (k == nodes)
                    break;
            }
        }
    }
    EXPECT_GT(states, 100u);
}

TEST(AcquireNext, StepPerformsOneFetchAddPerProbe)
{
    auto p = ranges({{0, 2}, {3, 5}, {6, 5}});
    AcquisitionCursor cur(1, 3);
    const auto before = this_thread_sync_counters().atomic_rmw;
    const auto locks = this_thread_sync_counters().lock_acquisitions;
    std::uint64_t steps = 0;
    Acquisition a;
    while (cur.step(p, a) != AcquisitionCursor::Step::exhausted)
        ++steps;
    // Exhausting the cursor: 6 hits and one failed probe per node.
    EXPECT_EQ(steps + 1, 6u + 3u);
    EXPECT_EQ(this_thread_sync_counters().atomic_rmw - before, 9u);
    EXPECT_EQ(this_thread_sync_counters().lock_acquisitions, locks);
}

TEST(AcquireNext, LocalPriorityBeforeFirstSteal)
{
    auto p = ranges({{0, 9}, {10, 19}});
    AcquisitionCursor cur(1, 2);
    bool stole = false;
    while (auto a = acquire_next(cur, p)) {
        if (a->remote) {
            EXPECT_GT(p[1].counter_c.load(), static_cast<std::uint64_t>(p[1].max_id - p[1].min_id));
            stole = true;
        } else {
            EXPECT_FALSE(stole);
        }
    }
    EXPECT_TRUE(stole);
}

TEST(AcquireNext, ConcurrentWorkersPartitionEveryEpoch)
{
    std::mt19937 rng(5);
    for (int round = 0; round < 20; ++round) {
        const std::uint32_t threads = std::uniform_int_distribution<std::uint32_t>(1, 8)(rng);
        const std::uint32_t objects = std::uniform_int_distribution<std::uint32_t>(1, 64)(rng);
        const std::uint32_t nodes = std::uniform_int_distribution<std::uint32_t>(1, 3)(rng);
        auto p = partition_objects(objects, emulated_topology(nodes, 1));
        for (int epoch = 0; epoch < 50; ++epoch) {
            reset_counters(p);
            std::vector<std::vector<ObjectId>> got(threads);
            std::vector<std::thread> ts;
            for (std::uint32_t w = 0; w < threads; ++w)
                ts.emplace_back([&, w] {
                    AcquisitionCursor cur(w % nodes, nodes);
                    while (auto a = acquire_next(cur, p))
                        got[w].push_back(a->object);
                });
            for (auto& t : ts)
                t.join();
            std::vector<ObjectId> all;
            for (auto& g : got)
                all.insert(all.end(), g.begin(), g.end());
            std::sort(all.begin(), all.end());
            ASSERT_EQ(all.size(), objects);
            for (ObjectId o = 0; o < objects; ++o)
                ASSERT_EQ(all[o], o);
        }
    }
}

TEST(AcquireNext, SingleNodeEqualsPlainSharedCounter)
{
    auto p = ranges({{0, 6}});
    std::uint64_t plain = 0;
    while (true) {
        const auto a = acquire_next(NodeId{0}, p);
        const auto v = plain++;
        if (v > 6) {
            EXPECT_FALSE(a);
            break;
        }
        ASSERT_TRUE(a);
        EXPECT_EQ(a->object, v);
    }
    EXPECT_EQ(p[0].counter_c.load(), plain);
}

TEST(AcquisitionStats, AccumulateAndSum)
{
    AcquisitionStats a{3, 2, 1}, b{1, 1, 1};
    a += b;
    EXPECT_EQ(a.acquired(), 7u);
    EXPECT_EQ(a.exhausted_probes, 2u);
}
