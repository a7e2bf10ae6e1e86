#include "epochsim/sync.hpp"

namespace epochsim {

SyncCounters& this_thread_sync_counters() noexcept
{
    thread_local SyncCounters counters;
    return counters;
}

} // namespace epochsim
