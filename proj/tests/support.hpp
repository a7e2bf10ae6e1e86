#pragma once

#include <vector>

#include "epochsim/model.hpp"

namespace epochsim::testing {

// Collects delivered events instead of routing them to a pool.
class CollectingSink final : public EventSink {
public:
    void deliver(WorkerContext&, EventRecord&& e, bool initial) override
    {
        (initial ? initial_ : scheduled_).push_back(std::move(e));
    }
    EpochIndex current_epoch() const noexcept override { return epoch_; }

    std::vector<EventRecord> initial_;
    std::vector<EventRecord> scheduled_;
    EpochIndex epoch_{};
};

inline EventRecord make_event(ObjectId dest, double ts, std::uint64_t seq = 0)
{
    EventRecord e;
    e.dest_object = dest;
    e.timestamp = SimTime(ts);
    e.seq = seq;
    return e;
}

} // namespace epochsim::testing
