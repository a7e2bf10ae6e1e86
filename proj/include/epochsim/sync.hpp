#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <thread>

namespace epochsim {

inline constexpr std::size_t kCacheLine = 64;

// Per-thread tally of synchronization operations. Plain increments on
// thread-local storage, so reading them never perturbs the code measured.
struct SyncCounters {
    std::uint64_t lock_acquisitions = 0;
    std::uint64_t lock_contended = 0;
    std::uint64_t atomic_rmw = 0;
};

SyncCounters& this_thread_sync_counters() noexcept;

namespace detail {

inline void cpu_relax() noexcept
{
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#elif defined(__aarch64__)
    asm volatile("yield");
#endif
}

} // namespace detail

/// fetch_add that is visible to the RMW instrumentation.
template <class T>
T counted_fetch_add(std::atomic<T>& a, T delta,
                    std::memory_order order = std::memory_order_acq_rel) noexcept
{
    ++this_thread_sync_counters().atomic_rmw;
    return a.fetch_add(delta, order);
}

/// Test-and-test-and-set lock. Yields after a short spin so that runs with
/// more workers than CPUs still make progress.
class SpinLock {
public:
    void lock() noexcept
    {
        auto& c = this_thread_sync_counters();
        ++c.lock_acquisitions;
        for (unsigned spins = 0;; ++spins) {
            ++c.atomic_rmw;
            if (!flag_.exchange(true, std::memory_order_acquire))
                return;
            if (spins == 0)
                ++c.lock_contended;
            while (flag_.load(std::memory_order_relaxed)) {
                if (++spins < 128)
                    detail::cpu_relax();
                else
                    std::this_thread::yield();
            }
        }
    }

    void unlock() noexcept { flag_.store(false, std::memory_order_release); }

private:
    std::atomic<bool> flag_{false};
};

/// Sense-reversing barrier over one shared counter. Each participant keeps
/// its own sense flag and passes it in.
class SenseBarrier {
public:
    explicit SenseBarrier(unsigned participants) noexcept
        : participants_(participants), remaining_(participants)
    {
    }

    SenseBarrier(const SenseBarrier&) = delete;
    SenseBarrier& operator=(const SenseBarrier&) = delete;

    void arrive_and_wait(bool& local_sense) noexcept
    {
        local_sense = !local_sense;
        if (counted_fetch_add(remaining_, -1) == 1) {
            remaining_.store(static_cast<int>(participants_), std::memory_order_relaxed);
            sense_.store(local_sense, std::memory_order_release);
            sense_.notify_all();
            return;
        }
        for (unsigned spins = 0; spins < 256; ++spins) {
            if (sense_.load(std::memory_order_acquire) == local_sense)
                return;
            detail::cpu_relax();
        }
        while (sense_.load(std::memory_order_acquire) != local_sense)
            sense_.wait(!local_sense, std::memory_order_acquire);
    }

    unsigned participants() const noexcept { return participants_; }

private:
    const unsigned participants_;
    alignas(kCacheLine) std::atomic<int> remaining_;
    alignas(kCacheLine) std::atomic<bool> sense_{false};
};

} // namespace epochsim
