#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "epochsim/topology.hpp"

namespace epochsim {

inline constexpr std::size_t kMinChunk = 32;

/// Anonymous memory mapping, released on destruction. When node binding is
/// available the whole range is bound to the requested node before any page
/// is touched.
class Reservation {
public:
    Reservation(std::size_t bytes, NodeId node);
    ~Reservation();

    Reservation(Reservation&& o) noexcept;
    Reservation& operator=(Reservation&& o) noexcept;
    Reservation(const Reservation&) = delete;
    Reservation& operator=(const Reservation&) = delete;

    std::byte* base() const noexcept { return base_; }
    std::size_t length() const noexcept { return length_; }
    NodeId node() const noexcept { return node_; }
    /// Whether the node hint was applied by the platform.
    bool bound() const noexcept { return bound_; }

private:
    std::byte* base_ = nullptr;
    std::size_t length_ = 0;
    NodeId node_ = 0;
    bool bound_ = false;
};

/// Whether the platform can bind memory to nodes at all.
bool node_binding_supported();

/// Metadata of one backing range of an area.
struct ReservationRange {
    const std::byte* base = nullptr;
    std::size_t length = 0;
    NodeId node = 0;
    bool bound = false;
};

/// One size class of one object: a stack of chunk addresses. Handles at
/// indices >= top_elem are the free chunks.
struct AreaDescriptor {
    std::vector<void*> addresses;
    std::size_t top_elem = 0;
    std::size_t chunk_size = kMinChunk;
    NodeId node = 0;
    std::vector<ReservationRange> reservation_ranges;

    std::size_t count() const noexcept { return addresses.size(); }
};

/// Maps a request size to its class index: sizes up to 32 go to class 0,
/// otherwise the smallest k with 32 * 2^k >= size.
std::size_t size_class_of(std::size_t size) noexcept;

inline constexpr std::size_t class_chunk_size(std::size_t k) noexcept { return kMinChunk << k; }

struct AllocatorOptions {
    /// Number of power-of-two classes, starting at 32 bytes. Default covers 32..4096.
    std::size_t num_classes = 8;
    /// Bytes reserved per class at setup.
    std::size_t initial_bytes_per_class = 4096;
};

/// Stack allocator for one simulation object. Not thread-safe; the engine
/// guarantees one user at a time.
class ObjectAllocator {
public:
    ObjectAllocator(ObjectId object, NodeId node, const AllocatorOptions& opts);

    ObjectAllocator(ObjectAllocator&&) noexcept = default;
    ObjectAllocator& operator=(ObjectAllocator&&) noexcept = default;

    /// Returns a chunk of at least `size` bytes (size 0 is served from the
    /// 32-byte class). Requests above the largest class get a dedicated
    /// mapping.
    void* allocate(std::size_t size);

    /// Returns `handle` to its class. Throws AllocError when the handle does
    /// not belong to this object.
    void release(void* handle);

    /// Doubles the capacity of class `k` with a new node-bound mapping.
    void grow_area(std::size_t k);

    ObjectId object() const noexcept { return object_; }
    NodeId node() const noexcept { return node_; }
    std::size_t num_classes() const noexcept { return areas_.size(); }
    const AreaDescriptor& area(std::size_t k) const { return areas_.at(k); }
    std::size_t oversize_outstanding() const noexcept { return oversize_.size(); }

    /// Size of the chunk behind `handle`, or 0 when it is not ours.
    std::size_t chunk_capacity(const void* handle) const noexcept;

private:
    struct Range {
        const std::byte* base;
        std::size_t length;
        std::size_t klass;  // == kOversize for dedicated mappings
    };
    static constexpr std::size_t kOversize = static_cast<std::size_t>(-1);

    const Range* find_range(const void* p) const noexcept;
    void add_range(const std::byte* base, std::size_t length, std::size_t klass);
    void carve(std::size_t k, const std::byte* base, std::size_t chunks, const Reservation& r);

    ObjectId object_;
    NodeId node_;
    std::vector<AreaDescriptor> areas_;
    std::vector<Reservation> reservations_;
    std::vector<Range> ranges_;  // sorted by base
    std::vector<Reservation> oversize_;
};

/// One allocator per object, each tagged with the node of its partition.
std::vector<ObjectAllocator> setup_allocators(const std::vector<NodePartition>& partitions,
                                              const AllocatorOptions& opts);

} // namespace epochsim
