#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epochsim/sim_time.hpp"
#include "epochsim/sync.hpp"

namespace epochsim {

enum class TopologyMode { detected, emulated };

/// Memory nodes and the CPUs attached to each one.
struct TopologyDescriptor {
    std::uint32_t num_nodes = 1;
    std::vector<std::vector<int>> cpus_per_node;
    TopologyMode mode = TopologyMode::emulated;

    /// Node owning `cpu`, if any.
    std::optional<NodeId> node_of_cpu(int cpu) const;

    /// All CPUs, node by node, in the order workers are assigned to them.
    std::vector<int> worker_cpu_order() const;

    std::size_t cpu_count() const;

    /// Throws ConfigError when a CPU is listed twice or the node count does
    /// not match the list.
    void validate() const;
};

/// A layout of `nodes` nodes with `cpus_per_node` consecutive CPU ids each.
TopologyDescriptor emulated_topology(std::uint32_t nodes, std::uint32_t cpus_per_node);

/// Splits `total_cpus` CPU ids 0..total_cpus-1 over `nodes` nodes, remainder
/// to the lowest nodes. Nodes may end up with no CPU when nodes > total_cpus.
TopologyDescriptor emulated_topology_split(std::uint32_t nodes, std::uint32_t total_cpus);

/// Reads the platform node map restricted to the CPUs this process may run
/// on. Falls back to a single emulated node. The EPOCHSIM_EMULATE_NODES
/// environment variable forces an emulated layout with that many nodes.
TopologyDescriptor detect_topology();

/// Same as detect_topology() but reading node directories under `sysfs_root`
/// (normally /sys/devices/system/node). `allowed_cpus` replaces the process
/// affinity mask when given.
TopologyDescriptor detect_topology_from(const std::string& sysfs_root,
                                        std::optional<std::vector<int>> allowed_cpus = std::nullopt);

/// Number of CPUs this process is allowed to run on.
unsigned available_cpus();

/// Per-node object range [min_id, max_id] plus the per-epoch acquisition
/// counter. Ranges are inclusive; min_id > max_id denotes an empty range.
struct alignas(kCacheLine) NodePartition {
    NodeId node = 0;
    std::int64_t min_id = 0;
    std::int64_t max_id = -1;
    std::atomic<std::uint64_t> counter_c{0};

    NodePartition() = default;
    NodePartition(NodeId n, std::int64_t lo, std::int64_t hi) : node(n), min_id(lo), max_id(hi) {}
    NodePartition(const NodePartition& o)
        : node(o.node), min_id(o.min_id), max_id(o.max_id),
          counter_c(o.counter_c.load(std::memory_order_relaxed))
    {
    }
    NodePartition& operator=(const NodePartition& o)
    {
        node = o.node;
        min_id = o.min_id;
        max_id = o.max_id;
        counter_c.store(o.counter_c.load(std::memory_order_relaxed), std::memory_order_relaxed);
        return *this;
    }

    bool empty() const noexcept { return min_id > max_id; }
    std::uint64_t size() const noexcept { return empty() ? 0 : static_cast<std::uint64_t>(max_id - min_id + 1); }
    bool contains(ObjectId o) const noexcept
    {
        return static_cast<std::int64_t>(o) >= min_id && static_cast<std::int64_t>(o) <= max_id;
    }
};

/// Contiguous near-equal split of [0, objects) over the topology's nodes,
/// lower identifiers to lower nodes, remainder to the first nodes.
std::vector<NodePartition> partition_objects(std::uint32_t objects, const TopologyDescriptor& topo);

/// Node hosting object `o`.
NodeId node_of_object(ObjectId o, const std::vector<NodePartition>& partitions);

/// Restricts the calling thread to `cpu`. On failure prints a warning and
/// leaves the thread unpinned. Returns whether pinning took effect.
bool pin_current_thread(int cpu);

struct WorkerPlacement {
    WorkerId worker = 0;
    int cpu = 0;
    NodeId local_node = 0;
    bool pinned = false;
};

/// CPU intended for `worker`: node 0's CPUs first, then node 1's, and so on,
/// wrapping when there are more workers than listed CPUs.
int cpu_for_worker(WorkerId worker, const TopologyDescriptor& topo);

/// Pins the calling thread (when `pin` is set) and resolves the local node
/// from the intended CPU, whether or not pinning succeeded.
WorkerPlacement pin_worker(WorkerId worker, int cpu, const TopologyDescriptor& topo, bool pin);

} // namespace epochsim
