#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "epochsim/engine.hpp"
#include "epochsim/phold.hpp"
#include "epochsim/trace.hpp"

namespace epochsim {

struct OracleOptions {
    double lookahead = 1.0;
    /// Only used to label trace entries with their epoch.
    double epoch_width = 1.0;
    std::optional<double> end_time;
    std::uint64_t rng_seed = 1;
    AllocatorOptions allocator;
    /// Guard against runaway models.
    std::uint64_t max_events = 10'000'000;

    static OracleOptions from(const EngineConfig& cfg);
};

/// Runs `model` on one thread with a single global queue in (timestamp, seq)
/// order. Returns the trace in processing order.
std::vector<TraceEntry> sequential_oracle(const OracleOptions& opts, const ModelBinding& model);

/// Convenience: builds a fresh PHOLD instance for `cfg` and runs it under the
/// oracle with the same seed and end time as `engine`.
std::vector<TraceEntry> phold_oracle(const PholdConfig& cfg, const EngineConfig& engine);

/// Empty when `parallel` and `reference` hold the same multiset of
/// (object, timestamp) pairs and every object's timestamp subsequence
/// matches in order; otherwise a description of the first difference.
std::optional<std::string> compare_traces(const std::vector<TraceEntry>& parallel,
                                          const std::vector<TraceEntry>& reference);

struct MetricsRow {
    double elapsed_seconds = 0.0;
    std::uint64_t events = 0;
    double throughput = 0.0;
    std::uint64_t epoch = 0;
    std::vector<std::uint64_t> per_node_local;
    std::vector<std::uint64_t> per_node_stolen;
};

/// Turns cumulative progress samples into rows with the throughput over
/// each sampling interval.
std::vector<MetricsRow> metrics_from_samples(const std::vector<ProgressSample>& samples);

/// Header `elapsed_s,events,throughput_eps,epoch` followed by `local_n<k>`
/// and `stolen_n<k>` per node.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows, std::size_t nodes);

/// Mean and sample variance of a set of throughput measurements.
struct SampleStats {
    double mean = 0.0;
    double variance = 0.0;
};
SampleStats sample_stats(const std::vector<double>& xs);

/// Command-line entry point. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace epochsim
