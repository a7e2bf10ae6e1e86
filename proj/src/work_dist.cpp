#include "epochsim/work_dist.hpp"

namespace epochsim {

AcquisitionCursor::Step AcquisitionCursor::step(std::span<NodePartition> partitions,
                                                Acquisition& out) noexcept
{
    if (exhausted())
        return Step::exhausted;
    const auto idx = static_cast<std::size_t>(node_ % nodes_);
    NodePartition& p = partitions[idx];
    // Counters are 64-bit and only advance by one per probe, so overshoot
    // past max_id cannot wrap within a run.
    const auto target = static_cast<std::int64_t>(counted_fetch_add<std::uint64_t>(p.counter_c, 1));
    if (target + p.min_id <= p.max_id) {
        out.object = static_cast<ObjectId>(target + p.min_id);
        out.from_node = p.node;
        out.remote = p.node != local_;
        return Step::acquired;
    }
    ++node_;
    ++probed_;
    return exhausted() ? Step::exhausted : Step::moved_on;
}

std::optional<Acquisition> acquire_next(AcquisitionCursor& cursor,
                                        std::span<NodePartition> partitions,
                                        AcquisitionStats* stats) noexcept
{
    Acquisition a;
    for (;;) {
        switch (cursor.step(partitions, a)) {
        case AcquisitionCursor::Step::acquired:
            if (stats)
                ++(a.remote ? stats->remote_steals : stats->local_hits);
            return a;
        case AcquisitionCursor::Step::moved_on:
            if (stats)
                ++stats->exhausted_probes;
            break;
        case AcquisitionCursor::Step::exhausted:
            if (stats)
                ++stats->exhausted_probes;
            return std::nullopt;
        }
    }
}

std::optional<Acquisition> acquire_next(NodeId worker_local_node,
                                        std::span<NodePartition> partitions,
                                        AcquisitionStats* stats) noexcept
{
    AcquisitionCursor cursor(worker_local_node, static_cast<std::uint32_t>(partitions.size()));
    return acquire_next(cursor, partitions, stats);
}

void reset_counters(std::span<NodePartition> partitions) noexcept
{
    for (auto& p : partitions)
        p.counter_c.store(0, std::memory_order_relaxed);
}

} // namespace epochsim
