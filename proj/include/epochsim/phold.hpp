#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "epochsim/engine.hpp"
#include "epochsim/model.hpp"

namespace epochsim {

/// Extended PHOLD parameters. Each object's state is two linked lists of S
/// nodes in total (32- and 64-byte chunks); each event touches ceil(S/32)
/// nodes and reallocates ceil(P*S) of them, then schedules one successor.
struct PholdConfig {
    std::uint32_t objects = 1024;
    std::uint32_t initial_events = 10;  // M
    std::uint32_t state_size = 4000;    // S
    double realloc_fraction = 0.001;    // P
    double lookahead = 0.1;             // L
    double mean_increment = 1.0;        // TA
    bool initial_at_zero = false;

    void validate() const;

    /// Whether every parameter lies in the ranges the benchmark was
    /// characterized over (O in [1024, 8192], M in [10, 1000],
    /// S in [4000, 16000], P in [0.1%, 0.4%], L in [TA/10, TA]).
    bool within_reference_ranges() const;
};

/// Timestamp increment: L plus an exponential with mean TA - L, so the mean
/// is TA and no increment is below L. Degenerates to exactly L when TA <= L.
class IncrementSampler {
public:
    IncrementSampler(double lookahead, double mean);
    double operator()(ObjectRng& rng);

private:
    double lookahead_;
    std::exponential_distribution<double> tail_;
    bool degenerate_;
};

/// ceil(S / 32).
std::uint32_t phold_touch_count(std::uint32_t state_size) noexcept;
/// ceil(P * S), tolerant of representation error in P (0.001 * 16000 is 16).
std::uint32_t phold_realloc_count(std::uint32_t state_size, double fraction) noexcept;

/// The benchmark model. Owns the per-object state directory; the state
/// itself lives in the objects' allocators.
class PholdModel {
public:
    explicit PholdModel(PholdConfig cfg);
    ~PholdModel();

    PholdModel(const PholdModel&) = delete;
    PholdModel& operator=(const PholdModel&) = delete;

    /// Callbacks bound to this model; it must outlive every run using them.
    ModelBinding binding();

    /// Allocator classes and initial reservation sized for S list nodes.
    AllocatorOptions allocator_options() const;

    const PholdConfig& config() const noexcept { return cfg_; }

    void init(ObjectId obj, WorkerContext& ctx);
    void process_event(ObjectId obj, SimTime now, WorkerContext& ctx);

    /// Node counts of both lists, found by walking them.
    std::pair<std::uint32_t, std::uint32_t> list_lengths(ObjectId obj) const;

    /// Drops the state directory before the allocators backing it go away.
    void reset();

private:
    struct State;
    PholdConfig cfg_;
    std::uint32_t touch_;
    std::uint32_t realloc_;
    std::vector<State*> states_;
};

/// Engine configuration matching a PHOLD configuration.
EngineConfig phold_engine_config(const PholdModel& model, std::uint32_t threads);

} // namespace epochsim
