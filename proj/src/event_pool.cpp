#include "epochsim/event_pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace epochsim {

PoolCounters& PoolCounters::operator+=(const PoolCounters& o) noexcept
{
    inserts += o.inserts;
    extractions += o.extractions;
    calendar_inserts += o.calendar_inserts;
    fallback_inserts += o.fallback_inserts;
    drained += o.drained;
    insert_lock_contended += o.insert_lock_contended;
    extract_lock_acquisitions += o.extract_lock_acquisitions;
    extract_atomic_rmw += o.extract_atomic_rmw;
    return *this;
}

EventPool::EventPool(std::uint32_t objects, std::uint32_t depth, double epoch_width,
                     std::uint32_t workers)
    : objects_(objects), depth_(depth), width_(epoch_width)
{
    if (objects == 0)
        throw ConfigError("event pool needs at least one object");
    if (depth < 2)
        throw ConfigError("calendar depth must be at least 2");
    if (!(epoch_width > 0.0) || !std::isfinite(epoch_width))
        throw ConfigError("epoch width must be finite and positive");
    if (workers == 0)
        throw ConfigError("event pool needs at least one worker");
    buckets_ = std::make_unique<Bucket[]>(static_cast<std::size_t>(objects) * depth);
    slots_ = std::vector<WorkerSlot>(workers);
}

Placement EventPool::place(WorkerId worker, EventRecord&& e, std::uint64_t epoch)
{
    auto& slot = slots_[worker];
    if (epoch >= base_ + depth_) {
        slot.fallback.push_back(std::move(e));
        ++slot.counters.fallback_inserts;
        return Placement::fallback;
    }
    Bucket& b = bucket(e.dest_object, epoch);
    const auto contended = this_thread_sync_counters().lock_contended;
    b.lock.lock();
    b.events.push_back(std::move(e));
    b.lock.unlock();
    slot.counters.insert_lock_contended += this_thread_sync_counters().lock_contended - contended;
    ++slot.counters.calendar_inserts;
    return Placement::calendar;
}

Placement EventPool::insert(WorkerId worker, EventRecord e)
{
    if (e.dest_object >= objects_)
        throw InvalidObject("event destination " + std::to_string(e.dest_object) + " out of range");
    const auto epoch = epoch_of(e.timestamp.value(), width_).i;
    if (epoch <= base_)
        throw LookaheadViolation("event for object " + std::to_string(e.dest_object) + " at t="
                                 + std::to_string(e.timestamp.value()) + " falls in epoch "
                                 + std::to_string(epoch) + ", not after the current epoch "
                                 + std::to_string(base_));
    auto& counters = slots_.at(worker).counters;
    const auto p = place(worker, std::move(e), epoch);
    ++counters.inserts;
    return p;
}

Placement EventPool::insert_initial(WorkerId worker, EventRecord e)
{
    if (e.dest_object >= objects_)
        throw InvalidObject("event destination " + std::to_string(e.dest_object) + " out of range");
    const auto epoch = epoch_of(e.timestamp.value(), width_).i;
    if (epoch < base_)
        throw LookaheadViolation("initial event at t=" + std::to_string(e.timestamp.value())
                                 + " precedes the current epoch");
    auto& counters = slots_.at(worker).counters;
    const auto p = place(worker, std::move(e), epoch);
    ++counters.inserts;
    return p;
}

void EventPool::extract_epoch_batch(WorkerId worker, ObjectId obj, std::vector<EventRecord>& out,
                                    double ts_limit)
{
    const SyncCounters before = this_thread_sync_counters();
    out.clear();
    Bucket& b = bucket(obj, base_);
    if (ts_limit == std::numeric_limits<double>::infinity()) {
        out.swap(b.events);
    } else {
        auto keep = std::partition(b.events.begin(), b.events.end(),
                                   [ts_limit](const EventRecord& e) { return e.timestamp.value() >= ts_limit; });
        out.assign(std::make_move_iterator(keep), std::make_move_iterator(b.events.end()));
        b.events.erase(keep, b.events.end());
    }
    std::sort(out.begin(), out.end(), event_order);

    const SyncCounters& after = this_thread_sync_counters();
    auto& c = slots_[worker].counters;
    c.extractions += out.size();
    c.extract_lock_acquisitions += after.lock_acquisitions - before.lock_acquisitions;
    c.extract_atomic_rmw += after.atomic_rmw - before.atomic_rmw;
}

std::vector<EventRecord> EventPool::extract_epoch_batch(WorkerId worker, ObjectId obj)
{
    std::vector<EventRecord> out;
    extract_epoch_batch(worker, obj, out);
    return out;
}

void EventPool::advance_base()
{
#ifndef NDEBUG
    for (ObjectId o = 0; o < objects_; ++o)
        if (!bucket(o, base_).events.empty())
            throw std::logic_error("rollover: bucket of epoch " + std::to_string(base_) + " for object "
                                   + std::to_string(o) + " still holds events");
#endif
    ++base_;
}

std::size_t EventPool::drain_fallback(WorkerId worker)
{
    auto& slot = slots_.at(worker);
    auto& list = slot.fallback;
    std::size_t moved = 0;
    std::size_t kept = 0;
    for (std::size_t k = 0; k < list.size(); ++k) {
        const auto epoch = epoch_of(list[k].timestamp.value(), width_).i;
        if (epoch < base_ + depth_) {
            Bucket& b = bucket(list[k].dest_object, epoch);
            b.lock.lock();
            b.events.push_back(std::move(list[k]));
            b.lock.unlock();
            ++moved;
        } else {
            if (kept != k)
                list[kept] = std::move(list[k]);
            ++kept;
        }
    }
    list.resize(kept);
    slot.counters.drained += moved;
    return moved;
}

void EventPool::rollover()
{
    advance_base();
    for (WorkerId w = 0; w < slots_.size(); ++w)
        drain_fallback(w);
}

std::uint64_t EventPool::total_pending() const noexcept
{
    std::uint64_t in = 0;
    std::uint64_t out = 0;
    for (const auto& s : slots_) {
        in += s.counters.inserts;
        out += s.counters.extractions;
    }
    return in - out;
}

std::size_t EventPool::bucket_size(ObjectId obj, EpochIndex e) const
{
    if (obj >= objects_)
        throw ConfigError("object out of range");
    return bucket(obj, e.i).events.size();
}

PoolCounters EventPool::total_counters() const
{
    PoolCounters total;
    for (const auto& s : slots_)
        total += s.counters;
    return total;
}

std::string EventPool::check_horizon() const
{
    for (ObjectId o = 0; o < objects_; ++o) {
        for (std::uint32_t slot = 0; slot < depth_; ++slot) {
            const auto& b = buckets_[static_cast<std::size_t>(o) * depth_ + slot];
            for (const auto& e : b.events) {
                const auto epoch = epoch_of(e.timestamp.value(), width_).i;
                if (epoch < base_ || epoch >= base_ + depth_ || epoch % depth_ != slot || e.dest_object != o)
                    return "object " + std::to_string(o) + " slot " + std::to_string(slot)
                           + " holds an event of epoch " + std::to_string(epoch) + " (base "
                           + std::to_string(base_) + ")";
            }
        }
    }
    for (std::size_t w = 0; w < slots_.size(); ++w)
        for (const auto& e : slots_[w].fallback)
            if (epoch_of(e.timestamp.value(), width_).i < base_ + depth_)
                return "fallback list of worker " + std::to_string(w) + " holds an event inside the horizon";
    return {};
}

} // namespace epochsim
