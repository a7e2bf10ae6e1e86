#include "epochsim/topology.hpp"

#include <pthread.h>
#include <sched.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace epochsim {

std::optional<NodeId> TopologyDescriptor::node_of_cpu(int cpu) const
{
    for (std::size_t n = 0; n < cpus_per_node.size(); ++n)
        if (std::find(cpus_per_node[n].begin(), cpus_per_node[n].end(), cpu) != cpus_per_node[n].end())
            return static_cast<NodeId>(n);
    return std::nullopt;
}

std::vector<int> TopologyDescriptor::worker_cpu_order() const
{
    std::vector<int> out;
    for (const auto& cpus : cpus_per_node)
        out.insert(out.end(), cpus.begin(), cpus.end());
    return out;
}

std::size_t TopologyDescriptor::cpu_count() const
{
    std::size_t n = 0;
    for (const auto& cpus : cpus_per_node)
        n += cpus.size();
    return n;
}

void TopologyDescriptor::validate() const
{
    if (num_nodes == 0 || cpus_per_node.size() != num_nodes)
        throw ConfigError("topology: node count does not match the CPU lists");
    std::set<int> seen;
    for (const auto& cpus : cpus_per_node)
        for (int c : cpus)
            if (!seen.insert(c).second)
                throw ConfigError("topology: CPU " + std::to_string(c) + " listed in more than one node");
    if (seen.empty())
        throw ConfigError("topology: no CPU listed");
}

TopologyDescriptor emulated_topology(std::uint32_t nodes, std::uint32_t cpus_per_node)
{
    if (nodes == 0 || cpus_per_node == 0)
        throw ConfigError("emulated topology needs at least one node and one CPU per node");
    TopologyDescriptor t;
    t.num_nodes = nodes;
    t.mode = TopologyMode::emulated;
    t.cpus_per_node.resize(nodes);
    int cpu = 0;
    for (auto& list : t.cpus_per_node)
        for (std::uint32_t k = 0; k < cpus_per_node; ++k)
            list.push_back(cpu++);
    return t;
}

TopologyDescriptor emulated_topology_split(std::uint32_t nodes, std::uint32_t total_cpus)
{
    if (nodes == 0 || total_cpus == 0)
        throw ConfigError("emulated topology needs at least one node and one CPU");
    TopologyDescriptor t;
    t.num_nodes = nodes;
    t.mode = TopologyMode::emulated;
    t.cpus_per_node.resize(nodes);
    const std::uint32_t base = total_cpus / nodes;
    const std::uint32_t extra = total_cpus % nodes;
    int cpu = 0;
    for (std::uint32_t n = 0; n < nodes; ++n)
        for (std::uint32_t k = 0; k < base + (n < extra ? 1 : 0); ++k)
            t.cpus_per_node[n].push_back(cpu++);
    return t;
}

namespace {

std::vector<int> allowed_cpu_list()
{
    std::vector<int> out;
    cpu_set_t set;
    CPU_ZERO(&set);
    if (sched_getaffinity(0, sizeof(set), &set) == 0) {
        for (int c = 0; c < CPU_SETSIZE; ++c)
            if (CPU_ISSET(c, &set))
                out.push_back(c);
    }
    if (out.empty()) {
        const unsigned n = std::max(1u, std::thread::hardware_concurrency());
        for (unsigned c = 0; c < n; ++c)
            out.push_back(static_cast<int>(c));
    }
    return out;
}

// Parses the kernel's cpulist format, e.g. "0-3,8,10-11".
std::vector<int> parse_cpulist(const std::string& text)
{
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), ::isspace), item.end());
        if (item.empty())
            continue;
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            out.push_back(std::stoi(item));
        } else {
            const int lo = std::stoi(item.substr(0, dash));
            const int hi = std::stoi(item.substr(dash + 1));
            for (int c = lo; c <= hi; ++c)
                out.push_back(c);
        }
    }
    return out;
}

TopologyDescriptor single_node(const std::vector<int>& cpus)
{
    TopologyDescriptor t;
    t.num_nodes = 1;
    t.mode = TopologyMode::emulated;
    t.cpus_per_node = {cpus};
    return t;
}

} // namespace

unsigned available_cpus()
{
    return static_cast<unsigned>(allowed_cpu_list().size());
}

TopologyDescriptor detect_topology_from(const std::string& sysfs_root,
                                        std::optional<std::vector<int>> allowed_cpus)
{
    namespace fs = std::filesystem;
    const auto allowed = allowed_cpus ? *allowed_cpus : allowed_cpu_list();
    const std::set<int> allowed_set(allowed.begin(), allowed.end());

    std::vector<std::pair<int, std::vector<int>>> nodes;
    std::error_code ec;
    if (fs::is_directory(sysfs_root, ec)) {
        for (const auto& entry : fs::directory_iterator(sysfs_root, ec)) {
            const auto name = entry.path().filename().string();
            if (name.rfind("node", 0) != 0 || name.size() == 4
                || !std::all_of(name.begin() + 4, name.end(), ::isdigit))
                continue;
            std::ifstream in(entry.path() / "cpulist");
            std::string line;
            if (!in || !std::getline(in, line))
                continue;
            std::vector<int> cpus;
            try {
                for (int c : parse_cpulist(line))
                    if (allowed_set.count(c))
                        cpus.push_back(c);
            } catch (const std::exception&) {
                continue;
            }
            // Memory-only nodes host no workers.
            if (!cpus.empty())
                nodes.emplace_back(std::stoi(name.substr(4)), std::move(cpus));
        }
    }
    if (nodes.empty())
        return single_node(allowed);

    std::sort(nodes.begin(), nodes.end());
    TopologyDescriptor t;
    t.mode = TopologyMode::detected;
    t.num_nodes = static_cast<std::uint32_t>(nodes.size());
    for (auto& n : nodes)
        t.cpus_per_node.push_back(std::move(n.second));
    return t;
}

TopologyDescriptor detect_topology()
{
    if (const char* env = std::getenv("EPOCHSIM_EMULATE_NODES")) {
        const int nodes = std::atoi(env);
        if (nodes > 0)
            return emulated_topology_split(static_cast<std::uint32_t>(nodes), available_cpus());
    }
    return detect_topology_from("/sys/devices/system/node");
}

std::vector<NodePartition> partition_objects(std::uint32_t objects, const TopologyDescriptor& topo)
{
    if (objects == 0)
        throw ConfigError("partition_objects: at least one object is required");
    if (topo.num_nodes == 0)
        throw ConfigError("partition_objects: topology has no node");
    std::vector<NodePartition> parts(topo.num_nodes);
    const std::uint32_t base = objects / topo.num_nodes;
    const std::uint32_t extra = objects % topo.num_nodes;
    std::int64_t next = 0;
    for (std::uint32_t n = 0; n < topo.num_nodes; ++n) {
        const std::int64_t len = base + (n < extra ? 1 : 0);
        parts[n].node = n;
        parts[n].min_id = next;
        parts[n].max_id = next + len - 1;
        next += len;
    }
    return parts;
}

NodeId node_of_object(ObjectId o, const std::vector<NodePartition>& partitions)
{
    for (const auto& p : partitions)
        if (p.contains(o))
            return p.node;
    throw ConfigError("object " + std::to_string(o) + " is outside every partition");
}

bool pin_current_thread(int cpu)
{
    cpu_set_t set;
    CPU_ZERO(&set);
    int rc = EINVAL;
    if (cpu >= 0 && cpu < CPU_SETSIZE) {
        CPU_SET(cpu, &set);
        rc = pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
    }
    if (rc != 0) {
        static std::once_flag warned;
        std::call_once(warned, [cpu] {
            std::cerr << "epochsim: warning: could not pin worker to CPU " << cpu
                      << "; continuing unpinned\n";
        });
        return false;
    }
    return true;
}

int cpu_for_worker(WorkerId worker, const TopologyDescriptor& topo)
{
    const auto order = topo.worker_cpu_order();
    if (order.empty())
        throw ConfigError("topology lists no CPU");
    return order[worker % order.size()];
}

WorkerPlacement pin_worker(WorkerId worker, int cpu, const TopologyDescriptor& topo, bool pin)
{
    WorkerPlacement p;
    p.worker = worker;
    p.cpu = cpu;
    const auto node = topo.node_of_cpu(cpu);
    if (!node)
        throw ConfigError("CPU " + std::to_string(cpu) + " is not part of the topology");
    p.local_node = *node;
    p.pinned = pin && pin_current_thread(cpu);
    return p;
}

} // namespace epochsim
