#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "epochsim/topology.hpp"

namespace epochsim {

/// Per-worker, per-epoch acquisition tallies.
struct AcquisitionStats {
    std::uint64_t local_hits = 0;
    std::uint64_t remote_steals = 0;
    std::uint64_t exhausted_probes = 0;

    std::uint64_t acquired() const noexcept { return local_hits + remote_steals; }

    AcquisitionStats& operator+=(const AcquisitionStats& o) noexcept
    {
        local_hits += o.local_hits;
        remote_steals += o.remote_steals;
        exhausted_probes += o.exhausted_probes;
        return *this;
    }
};

struct Acquisition {
    ObjectId object = 0;
    NodeId from_node = 0;
    bool remote = false;
};

/// The acquisition loop as a resumable cursor: every step() performs exactly
/// one fetch-and-add on one node counter. Starting at the local node, a
/// failed probe moves to the next node modulo the node count; after every
/// node has been probed once without success the cursor is exhausted.
class AcquisitionCursor {
public:
    AcquisitionCursor(NodeId local_node, std::uint32_t num_nodes) noexcept
        : local_(local_node), node_(local_node), nodes_(num_nodes)
    {
    }

    enum class Step { acquired, moved_on, exhausted };

    /// One probe. On `acquired`, `out` holds the object.
    Step step(std::span<NodePartition> partitions, Acquisition& out) noexcept;

    bool exhausted() const noexcept { return probed_ >= nodes_; }
    NodeId current_node() const noexcept { return node_ % nodes_; }
    std::uint32_t nodes_probed() const noexcept { return probed_; }

    friend bool operator==(const AcquisitionCursor&, const AcquisitionCursor&) = default;

private:
    NodeId local_;
    std::uint64_t node_;
    std::uint32_t nodes_;
    std::uint32_t probed_ = 0;
};

/// Hands out the next object of the current epoch, continuing from where
/// `cursor` stopped. A worker keeps one cursor per epoch, so once it has
/// moved past a node it never probes that node again. Lock-free; safe for
/// any number of concurrent callers. Each identifier is returned to exactly
/// one caller per epoch.
std::optional<Acquisition> acquire_next(AcquisitionCursor& cursor,
                                        std::span<NodePartition> partitions,
                                        AcquisitionStats* stats = nullptr) noexcept;

/// Single-shot form with a fresh cursor at `worker_local_node`.
std::optional<Acquisition> acquire_next(NodeId worker_local_node,
                                        std::span<NodePartition> partitions,
                                        AcquisitionStats* stats = nullptr) noexcept;

/// Resets every node counter. Only valid while no worker is acquiring.
void reset_counters(std::span<NodePartition> partitions) noexcept;

} // namespace epochsim
