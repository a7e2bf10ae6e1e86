#include "epochsim/object_alloc.hpp"

#include <numa.h>
#include <numaif.h>
#include <sys/mman.h>
#include <unistd.h>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>

namespace epochsim {

namespace {

std::size_t page_size()
{
    static const std::size_t ps = static_cast<std::size_t>(::sysconf(_SC_PAGESIZE));
    return ps;
}

std::size_t round_up(std::size_t n, std::size_t to)
{
    return (n + to - 1) / to * to;
}

std::string hex(const void* p)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%p", p);
    return buf;
}

} // namespace

bool node_binding_supported()
{
    static const bool supported = ::numa_available() != -1;
    return supported;
}

Reservation::Reservation(std::size_t bytes, NodeId node) : node_(node)
{
    if (bytes == 0 || bytes > std::numeric_limits<std::size_t>::max() - page_size())
        throw AllocError("invalid reservation size " + std::to_string(bytes));
    length_ = round_up(bytes, page_size());
    void* p = ::mmap(nullptr, length_, PROT_READ | PROT_WRITE,
                     MAP_PRIVATE | MAP_ANONYMOUS | MAP_NORESERVE, -1, 0);
    if (p == MAP_FAILED)
        throw AllocError("cannot reserve " + std::to_string(length_) + " bytes");
    base_ = static_cast<std::byte*>(p);

    if (node_binding_supported() && static_cast<int>(node) <= ::numa_max_node()) {
        unsigned long mask[16] = {};
        constexpr unsigned long bits = 8 * sizeof(unsigned long);
        if (node < 16 * bits) {
            mask[node / bits] = 1UL << (node % bits);
            bound_ = ::mbind(base_, length_, MPOL_BIND, mask, 16 * bits, 0) == 0;
        }
    }
}

Reservation::~Reservation()
{
    if (base_)
        ::munmap(base_, length_);
}

Reservation::Reservation(Reservation&& o) noexcept
    : base_(std::exchange(o.base_, nullptr)), length_(std::exchange(o.length_, 0)), node_(o.node_),
      bound_(o.bound_)
{
}

Reservation& Reservation::operator=(Reservation&& o) noexcept
{
    if (this != &o) {
        if (base_)
            ::munmap(base_, length_);
        base_ = std::exchange(o.base_, nullptr);
        length_ = std::exchange(o.length_, 0);
        node_ = o.node_;
        bound_ = o.bound_;
    }
    return *this;
}

std::size_t size_class_of(std::size_t size) noexcept
{
    if (size <= kMinChunk)
        return 0;
    return static_cast<std::size_t>(std::bit_width(size - 1)) - 5;
}

ObjectAllocator::ObjectAllocator(ObjectId object, NodeId node, const AllocatorOptions& opts)
    : object_(object), node_(node)
{
    if (opts.num_classes == 0 || opts.num_classes > 40)
        throw ConfigError("allocator needs between 1 and 40 size classes");

    // All classes share one initial mapping, carved into per-class ranges.
    std::vector<std::size_t> chunks(opts.num_classes);
    std::size_t total = 0;
    for (std::size_t k = 0; k < opts.num_classes; ++k) {
        const std::size_t cs = class_chunk_size(k);
        chunks[k] = std::max<std::size_t>(1, (opts.initial_bytes_per_class + cs - 1) / cs);
        if (chunks[k] > (std::numeric_limits<std::size_t>::max() - total) / cs)
            throw AllocError("object " + std::to_string(object) + ", size class "
                             + std::to_string(cs) + " B: initial reservation size overflows");
        total += chunks[k] * cs;
    }

    try {
        reservations_.emplace_back(total, node);
    } catch (const AllocError&) {
        throw AllocError("object " + std::to_string(object) + ", size class "
                         + std::to_string(class_chunk_size(0)) + " B: cannot reserve "
                         + std::to_string(opts.initial_bytes_per_class) + " bytes per class ("
                         + std::to_string(total) + " bytes over " + std::to_string(opts.num_classes)
                         + " classes)");
    }

    areas_.resize(opts.num_classes);
    const Reservation& r = reservations_.back();
    const std::byte* cursor = r.base();
    for (std::size_t k = 0; k < opts.num_classes; ++k) {
        areas_[k].chunk_size = class_chunk_size(k);
        areas_[k].node = node;
        carve(k, cursor, chunks[k], r);
        cursor += chunks[k] * class_chunk_size(k);
    }
}

void ObjectAllocator::carve(std::size_t k, const std::byte* base, std::size_t chunks, const Reservation& r)
{
    auto& a = areas_[k];
    a.addresses.reserve(a.addresses.size() + chunks);
    for (std::size_t i = 0; i < chunks; ++i)
        a.addresses.push_back(const_cast<std::byte*>(base + i * a.chunk_size));
    a.reservation_ranges.push_back({base, chunks * a.chunk_size, r.node(), r.bound()});
    add_range(base, chunks * a.chunk_size, k);
}

void ObjectAllocator::add_range(const std::byte* base, std::size_t length, std::size_t klass)
{
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), base,
                               [](const std::byte* b, const Range& r) { return b < r.base; });
    ranges_.insert(it, Range{base, length, klass});
}

const ObjectAllocator::Range* ObjectAllocator::find_range(const void* p) const noexcept
{
    const auto* b = static_cast<const std::byte*>(p);
    auto it = std::upper_bound(ranges_.begin(), ranges_.end(), b,
                               [](const std::byte* x, const Range& r) { return x < r.base; });
    if (it == ranges_.begin())
        return nullptr;
    --it;
    if (b >= it->base + it->length)
        return nullptr;
    return &*it;
}

void ObjectAllocator::grow_area(std::size_t k)
{
    auto& a = areas_.at(k);
    const std::size_t extra = std::max<std::size_t>(1, a.count());
    try {
        reservations_.emplace_back(extra * a.chunk_size, node_);
    } catch (const AllocError&) {
        throw AllocError("object " + std::to_string(object_) + ", size class " + std::to_string(a.chunk_size)
                         + " B: cannot grow area to " + std::to_string(a.count() + extra) + " chunks");
    }
    carve(k, reservations_.back().base(), extra, reservations_.back());
}

void* ObjectAllocator::allocate(std::size_t size)
{
    const std::size_t k = size_class_of(size);
    if (k >= areas_.size()) {
        try {
            oversize_.emplace_back(size, node_);
        } catch (const AllocError&) {
            throw AllocError("object " + std::to_string(object_) + ": cannot reserve " + std::to_string(size)
                             + " bytes for an oversize chunk");
        }
        add_range(oversize_.back().base(), oversize_.back().length(), kOversize);
        return oversize_.back().base();
    }
    auto& a = areas_[k];
    if (a.top_elem == a.count())
        grow_area(k);
    return a.addresses[a.top_elem++];
}

void ObjectAllocator::release(void* handle)
{
    const Range* r = find_range(handle);
    if (!r)
        throw AllocError("release of " + hex(handle) + ": not a chunk of object " + std::to_string(object_));

    if (r->klass == kOversize) {
        if (static_cast<const std::byte*>(handle) != r->base)
            throw AllocError("release of " + hex(handle) + ": not the start of an oversize chunk");
        ranges_.erase(ranges_.begin() + (r - ranges_.data()));
        auto it = std::find_if(oversize_.begin(), oversize_.end(),
                               [handle](const Reservation& res) { return res.base() == handle; });
        oversize_.erase(it);
        return;
    }

    auto& a = areas_[r->klass];
    if (static_cast<std::size_t>(static_cast<const std::byte*>(handle) - r->base) % a.chunk_size != 0)
        throw AllocError("release of " + hex(handle) + ": not aligned to a " + std::to_string(a.chunk_size)
                         + "-byte chunk");
    if (a.top_elem == 0)
        throw AllocError("release of " + hex(handle) + ": class " + std::to_string(a.chunk_size)
                         + " B has no outstanding chunk (double free?)");
#ifndef NDEBUG
    if (std::find(a.addresses.begin() + static_cast<std::ptrdiff_t>(a.top_elem), a.addresses.end(), handle)
        != a.addresses.end())
        throw AllocError("release of " + hex(handle) + ": chunk is already free");
#endif
    a.addresses[--a.top_elem] = handle;
}

std::size_t ObjectAllocator::chunk_capacity(const void* handle) const noexcept
{
    const Range* r = find_range(handle);
    if (!r)
        return 0;
    if (r->klass == kOversize)
        return r->length;
    return areas_[r->klass].chunk_size;
}

std::vector<ObjectAllocator> setup_allocators(const std::vector<NodePartition>& partitions,
                                              const AllocatorOptions& opts)
{
    std::vector<ObjectAllocator> out;
    std::int64_t total = 0;
    for (const auto& p : partitions)
        total += static_cast<std::int64_t>(p.size());
    out.reserve(static_cast<std::size_t>(total));
    for (std::int64_t o = 0; o < total; ++o) {
        const auto id = static_cast<ObjectId>(o);
        out.emplace_back(id, node_of_object(id, partitions), opts);
    }
    return out;
}

} // namespace epochsim
