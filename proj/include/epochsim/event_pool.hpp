#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "epochsim/event.hpp"
#include "epochsim/sync.hpp"

namespace epochsim {

enum class Placement { calendar, fallback };

/// Counters kept by each worker for its own pool operations.
struct PoolCounters {
    std::uint64_t inserts = 0;
    std::uint64_t extractions = 0;
    std::uint64_t calendar_inserts = 0;
    std::uint64_t fallback_inserts = 0;
    std::uint64_t drained = 0;
    std::uint64_t insert_lock_contended = 0;
    // Synchronization performed inside extract_epoch_batch. Expected zero.
    std::uint64_t extract_lock_acquisitions = 0;
    std::uint64_t extract_atomic_rmw = 0;

    PoolCounters& operator+=(const PoolCounters& o) noexcept;
};

/// Pending-event set: for each object a calendar of N epoch buckets used as
/// a circular array, plus one unsynchronized fallback list per worker for
/// events beyond the calendar horizon.
///
/// The horizon is [base, base + N) where base is the epoch being processed.
/// Epoch e lives in slot e mod N. Inserts take the target bucket's spin lock;
/// the current-epoch bucket is only ever touched by the worker that acquired
/// the object, so extraction takes no lock.
class EventPool {
public:
    EventPool(std::uint32_t objects, std::uint32_t depth, double epoch_width, std::uint32_t workers);

    EventPool(const EventPool&) = delete;
    EventPool& operator=(const EventPool&) = delete;

    /// Insert an event generated during the current epoch. Its epoch must be
    /// strictly later than the current one; otherwise LookaheadViolation.
    Placement insert(WorkerId worker, EventRecord e);

    /// Insert before epoch 0 opens; the current epoch is accepted.
    Placement insert_initial(WorkerId worker, EventRecord e);

    /// Moves every current-epoch event of `obj` with timestamp < ts_limit
    /// into `out` (cleared first), sorted by (timestamp, seq). Events at or
    /// beyond the limit stay in the bucket.
    void extract_epoch_batch(WorkerId worker, ObjectId obj, std::vector<EventRecord>& out,
                             double ts_limit = std::numeric_limits<double>::infinity());

    std::vector<EventRecord> extract_epoch_batch(WorkerId worker, ObjectId obj);

    /// Advances the horizon by one epoch. Called by a single worker while all
    /// others wait. Throws std::logic_error in debug builds when the
    /// departing bucket of any object still holds events.
    void advance_base();

    /// Moves the worker's fallback events that now fit the horizon into the
    /// calendar. Only the owning worker may call this. Returns events moved.
    std::size_t drain_fallback(WorkerId worker);

    /// advance_base() followed by every worker's drain, for single-threaded
    /// callers.
    void rollover();

    EpochIndex current_epoch() const noexcept { return EpochIndex{base_}; }
    std::uint32_t depth() const noexcept { return depth_; }
    double epoch_width() const noexcept { return width_; }
    std::uint32_t objects() const noexcept { return objects_; }
    std::uint32_t workers() const noexcept { return static_cast<std::uint32_t>(slots_.size()); }

    /// Events across all buckets and fallback lists. Only meaningful at a
    /// quiescent point.
    std::uint64_t total_pending() const noexcept;

    /// Events stored in the slot currently assigned to epoch `e` of `obj`.
    std::size_t bucket_size(ObjectId obj, EpochIndex e) const;
    std::size_t fallback_size(WorkerId worker) const { return slots_.at(worker).fallback.size(); }

    const PoolCounters& counters(WorkerId worker) const { return slots_.at(worker).counters; }
    PoolCounters total_counters() const;

    /// Full structural check: every calendar event sits in the slot of its
    /// epoch inside the horizon and every fallback event lies beyond it.
    /// Returns an empty string when sound, otherwise the first problem.
    std::string check_horizon() const;

private:
    struct alignas(kCacheLine) Bucket {
        SpinLock lock;
        std::vector<EventRecord> events;
    };

    struct alignas(kCacheLine) WorkerSlot {
        std::vector<EventRecord> fallback;
        PoolCounters counters;
    };

    Placement place(WorkerId worker, EventRecord&& e, std::uint64_t epoch);
    Bucket& bucket(ObjectId obj, std::uint64_t epoch) noexcept
    {
        return buckets_[static_cast<std::size_t>(obj) * depth_ + epoch % depth_];
    }
    const Bucket& bucket(ObjectId obj, std::uint64_t epoch) const noexcept
    {
        return buckets_[static_cast<std::size_t>(obj) * depth_ + epoch % depth_];
    }

    std::uint32_t objects_;
    std::uint32_t depth_;
    double width_;
    std::uint64_t base_ = 0;
    std::unique_ptr<Bucket[]> buckets_;
    std::vector<WorkerSlot> slots_;
};

} // namespace epochsim
