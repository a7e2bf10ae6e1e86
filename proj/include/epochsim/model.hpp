#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "epochsim/event.hpp"
#include "epochsim/object_alloc.hpp"

namespace epochsim {

class WorkerContext;

/// Per-object random stream. Seeded from the global seed and the object id
/// only, so a model draws the same numbers regardless of which worker runs it.
using ObjectRng = std::mt19937_64;

ObjectRng make_object_rng(std::uint64_t seed, ObjectId obj);

using InitFn = std::function<void(ObjectId obj, WorkerContext& ctx)>;
using ProcessEventFn =
    std::function<void(ObjectId obj, SimTime now, std::span<const std::byte> payload, WorkerContext& ctx)>;

/// What a model hands to the engine.
struct ModelBinding {
    std::uint32_t object_count = 0;
    InitFn init;
    ProcessEventFn process_event;
};

/// Receives events a context produces. Implemented by the parallel engine
/// and by the sequential oracle.
class EventSink {
public:
    virtual ~EventSink() = default;
    virtual void deliver(WorkerContext& ctx, EventRecord&& e, bool initial) = 0;
    virtual EpochIndex current_epoch() const noexcept = 0;
};

/// Services available to model callbacks, confined to one worker.
class WorkerContext {
public:
    enum class Phase { idle, init, processing };

    struct Services {
        EventSink* sink = nullptr;
        std::span<ObjectAllocator> allocators;
        std::span<ObjectRng> rngs;
        double lookahead = 0.0;
        std::uint32_t object_count = 0;
    };

    WorkerContext(WorkerId worker, NodeId local_node, Services services)
        : worker_(worker), local_node_(local_node), services_(services)
    {
    }

    WorkerId worker_id() const noexcept { return worker_; }
    NodeId local_node() const noexcept { return local_node_; }
    Phase phase() const noexcept { return phase_; }

    /// Object whose callback is running. Throws outside a callback.
    ObjectId current_object() const;
    bool has_current_object() const noexcept { return phase_ != Phase::idle; }

    /// Timestamp of the event being processed.
    SimTime now() const noexcept { return now_; }
    EpochIndex current_epoch() const noexcept { return services_.sink->current_epoch(); }
    double lookahead() const noexcept { return services_.lookahead; }
    std::uint32_t object_count() const noexcept { return services_.object_count; }

    /// Schedules an event at `dest` with timestamp `ts`. Requires
    /// ts >= now + lookahead; otherwise LookaheadViolation.
    void schedule_new_event(ObjectId dest, SimTime ts, std::span<const std::byte> payload = {});

    /// Bootstrap injection, only valid from an init callback.
    void inject_initial(ObjectId dest, SimTime ts, std::span<const std::byte> payload = {});

    /// Chunk from the current object's allocator.
    void* obj_alloc(std::size_t size);
    void obj_free(void* handle);

    /// Random stream of the current object.
    ObjectRng& rng();

    std::uint64_t scheduled_count() const noexcept { return scheduled_; }

    // Engine side.
    void begin_init(ObjectId obj) noexcept;
    void begin_event(ObjectId obj, SimTime now) noexcept;
    void end_callback() noexcept;

private:
    void check_dest(ObjectId dest) const;

    WorkerId worker_;
    NodeId local_node_;
    Services services_;
    Phase phase_ = Phase::idle;
    ObjectId current_ = 0;
    SimTime now_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t scheduled_ = 0;
};

/// Per-object high-water mark of processed timestamps.
class CausalityChecker {
public:
    explicit CausalityChecker(std::uint32_t objects)
        : watermark_(objects, -std::numeric_limits<double>::infinity())
    {
    }

    /// Accepts equal timestamps; throws CausalityViolation on a decrease.
    void observe(ObjectId obj, SimTime ts);
    double watermark(ObjectId obj) const { return watermark_.at(obj); }

private:
    std::vector<double> watermark_;
};

/// Runs the model callback for `e` with the context bound to its object.
/// Engine errors propagate unchanged; anything else the callback throws is
/// rethrown as ModelError naming the object and time.
void dispatch(const EventRecord& e, WorkerContext& ctx, const ModelBinding& model,
              CausalityChecker* checker = nullptr);

} // namespace epochsim
