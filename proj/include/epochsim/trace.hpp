#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "epochsim/event.hpp"

namespace epochsim {

/// One processed event. parent_ts is the timestamp of the event that
/// scheduled it, or kNoParent for initial events.
struct TraceEntry {
    ObjectId object = 0;
    double timestamp = 0.0;
    std::uint64_t seq = 0;
    std::uint64_t order = 0;
    WorkerId worker = 0;
    std::uint64_t epoch = 0;
    double parent_ts = kNoParent;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

/// One tab-separated line per entry: object, timestamp, seq, order, worker,
/// epoch, parent timestamp ("-" for initial events). Timestamps are written
/// with full round-trip precision.
void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace);
std::vector<TraceEntry> read_trace(std::istream& in);

struct TraceVerdict {
    enum class Check { none, malformed, monotonicity, epoch_membership, barrier_order, lookahead };

    bool ok = true;
    Check failed = Check::none;
    std::string message;
};

const char* to_string(TraceVerdict::Check c) noexcept;

/// Checks, in order: order indices dense and unique; per-object timestamps
/// non-decreasing in processing order; every entry's epoch equals
/// epoch_of(timestamp, width); no entry of a later epoch precedes an entry
/// of an earlier one; every non-initial entry is at least `lookahead` after
/// its parent. Stops at the first violation.
TraceVerdict verify_trace(const std::vector<TraceEntry>& trace, double epoch_width, double lookahead);

} // namespace epochsim
