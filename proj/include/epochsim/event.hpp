#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string>

#include "epochsim/sim_time.hpp"

namespace epochsim {

inline constexpr std::size_t kMaxPayload = 64;

/// Fixed-capacity copy of a model payload.
class Payload {
public:
    Payload() = default;

    explicit Payload(std::span<const std::byte> bytes)
    {
        if (bytes.size() > kMaxPayload)
            throw ConfigError("event payload exceeds " + std::to_string(kMaxPayload) + " bytes");
        size_ = static_cast<std::uint8_t>(bytes.size());
        if (!bytes.empty())
            std::memcpy(data_.data(), bytes.data(), bytes.size());
    }

    std::span<const std::byte> bytes() const noexcept { return {data_.data(), size_}; }
    std::size_t size() const noexcept { return size_; }

    friend bool operator==(const Payload& a, const Payload& b) noexcept
    {
        return a.size_ == b.size_ && std::memcmp(a.data_.data(), b.data_.data(), a.size_) == 0;
    }

private:
    std::array<std::byte, kMaxPayload> data_{};
    std::uint8_t size_ = 0;
};

/// Timestamp of the event's parent when there is none (initial events).
inline constexpr double kNoParent = -1.0;

struct EventRecord {
    ObjectId dest_object = 0;
    SimTime timestamp;
    std::uint64_t seq = 0;
    EpochIndex emit_epoch;
    double parent_ts = kNoParent;
    Payload payload;
};

/// Processing order within one object's batch: timestamp, then seq.
inline bool event_order(const EventRecord& a, const EventRecord& b) noexcept
{
    if (a.timestamp != b.timestamp)
        return a.timestamp < b.timestamp;
    return a.seq < b.seq;
}

/// seq values are worker id in the top 16 bits over a per-worker counter.
inline constexpr std::uint64_t make_seq(WorkerId worker, std::uint64_t counter) noexcept
{
    return (static_cast<std::uint64_t>(worker) << 48) | (counter & ((std::uint64_t{1} << 48) - 1));
}

} // namespace epochsim
