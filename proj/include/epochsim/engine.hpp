#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "epochsim/event_pool.hpp"
#include "epochsim/model.hpp"
#include "epochsim/object_alloc.hpp"
#include "epochsim/topology.hpp"
#include "epochsim/trace.hpp"
#include "epochsim/work_dist.hpp"

namespace epochsim {

enum class PinMode {
    automatic,  // pin when every worker gets its own allowed CPU
    always,     // pin; more workers than CPUs is a configuration error
    never
};

/// Handed to EngineConfig::epoch_observer by the rollover worker once every
/// worker has finished the epoch and before the next one opens.
struct EpochSummary {
    EpochIndex epoch;
    std::uint64_t pending = 0;
    std::uint64_t events = 0;
    std::vector<AcquisitionStats> per_worker;
};

/// Approximate progress snapshot, sampled from the controlling thread.
struct ProgressSample {
    double elapsed_seconds = 0.0;
    std::uint64_t events = 0;
    std::uint64_t epoch = 0;
    std::vector<std::uint64_t> per_node_local;
    std::vector<std::uint64_t> per_node_stolen;
};

struct EngineConfig {
    std::uint32_t num_threads = 1;
    SimTime lookahead{1.0};
    /// Defaults to the lookahead. Must satisfy 0 < W <= L.
    std::optional<SimTime> epoch_width;
    std::uint32_t calendar_depth = 16;
    /// Events at or after end_time are not processed. Unbounded when unset.
    std::optional<SimTime> end_time;
    std::optional<double> wall_clock_limit_seconds;
    std::uint64_t rng_seed = 1;
    /// Defaults to detect_topology().
    std::optional<TopologyDescriptor> topology;
    bool causality_check = false;
    PinMode pin = PinMode::automatic;
    /// Permit more workers than available CPUs (workers are then not pinned).
    bool allow_oversubscription = false;
    bool capture_trace = false;
    AllocatorOptions allocator;

    std::function<void(const EpochSummary&)> epoch_observer;
    std::function<void(const ProgressSample&)> progress_observer;
    double progress_interval_seconds = 0.1;

    double width() const noexcept { return (epoch_width ? *epoch_width : lookahead).value(); }

    /// Throws ConfigError on any violated constraint.
    void validate() const;
};

struct RunReport {
    std::uint64_t events_processed = 0;
    std::uint64_t epochs_completed = 0;
    double wall_clock_seconds = 0.0;
    std::vector<std::uint64_t> per_thread_events;
    /// Indexed by the node hosting the acquired object: acquisitions by a
    /// worker local to that node, and by remote workers.
    std::vector<std::uint64_t> per_node_local_acquisitions;
    std::vector<std::uint64_t> per_node_stolen_acquisitions;
    std::vector<WorkerPlacement> placements;
    std::uint64_t final_pending = 0;
    PoolCounters pool;

    enum class StopReason { end_time, empty_pool, wall_clock, error };
    StopReason stop_reason = StopReason::empty_pool;

    /// Sorted by processing order when capture_trace was set.
    std::vector<TraceEntry> trace;

    std::uint64_t local_acquisitions() const noexcept;
    std::uint64_t stolen_acquisitions() const noexcept;
};

/// Epoch-synchronized parallel executor. One instance runs one model once.
class Engine {
public:
    Engine(EngineConfig config, ModelBinding model);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    RunReport run();

    /// Epoch all workers are processing; stable between barriers.
    EpochIndex current_epoch() const noexcept;

    const EventPool& pool() const noexcept;
    const std::vector<NodePartition>& partitions() const noexcept;
    const std::vector<ObjectAllocator>& allocators() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: constructs an Engine and runs it.
RunReport run(const EngineConfig& config, const ModelBinding& model);

} // namespace epochsim
