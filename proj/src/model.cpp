#include "epochsim/model.hpp"

#include <string>

namespace epochsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

ObjectRng make_object_rng(std::uint64_t seed, ObjectId obj)
{
    return ObjectRng(splitmix64(seed ^ static_cast<std::uint64_t>(obj)));
}

ObjectId WorkerContext::current_object() const
{
    if (phase_ == Phase::idle)
        throw Error("no simulation object is active on worker " + std::to_string(worker_));
    return current_;
}

void WorkerContext::check_dest(ObjectId dest) const
{
    if (dest >= services_.object_count)
        throw InvalidObject("destination object " + std::to_string(dest) + " outside [0, "
                            + std::to_string(services_.object_count) + ")");
}

void WorkerContext::schedule_new_event(ObjectId dest, SimTime ts, std::span<const std::byte> payload)
{
    if (phase_ != Phase::processing)
        throw Error("schedule_new_event is only available while processing an event");
    check_dest(dest);
    if (ts.value() < now_.value() + services_.lookahead)
        throw LookaheadViolation("object " + std::to_string(current_) + " at t=" + std::to_string(now_.value())
                                 + " scheduled t=" + std::to_string(ts.value()) + " for object "
                                 + std::to_string(dest) + ", closer than lookahead "
                                 + std::to_string(services_.lookahead));
    EventRecord e;
    e.dest_object = dest;
    e.timestamp = ts;
    e.seq = make_seq(worker_, next_seq_++);
    e.emit_epoch = services_.sink->current_epoch();
    e.parent_ts = now_.value();
    e.payload = Payload(payload);
    services_.sink->deliver(*this, std::move(e), false);
    ++scheduled_;
}

void WorkerContext::inject_initial(ObjectId dest, SimTime ts, std::span<const std::byte> payload)
{
    if (phase_ != Phase::init)
        throw Error("inject_initial is only available from an init callback");
    check_dest(dest);
    EventRecord e;
    e.dest_object = dest;
    e.timestamp = ts;
    e.seq = make_seq(worker_, next_seq_++);
    e.emit_epoch = services_.sink->current_epoch();
    e.parent_ts = kNoParent;
    e.payload = Payload(payload);
    services_.sink->deliver(*this, std::move(e), true);
    ++scheduled_;
}

void* WorkerContext::obj_alloc(std::size_t size)
{
    return services_.allocators[current_object()].allocate(size);
}

void WorkerContext::obj_free(void* handle)
{
    services_.allocators[current_object()].release(handle);
}

ObjectRng& WorkerContext::rng()
{
    return services_.rngs[current_object()];
}

void WorkerContext::begin_init(ObjectId obj) noexcept
{
    phase_ = Phase::init;
    current_ = obj;
    now_ = SimTime{};
}

void WorkerContext::begin_event(ObjectId obj, SimTime now) noexcept
{
    phase_ = Phase::processing;
    current_ = obj;
    now_ = now;
}

void WorkerContext::end_callback() noexcept
{
    phase_ = Phase::idle;
}

void CausalityChecker::observe(ObjectId obj, SimTime ts)
{
    double& wm = watermark_.at(obj);
    if (ts.value() < wm)
        throw CausalityViolation("object " + std::to_string(obj) + " processed t=" + std::to_string(ts.value())
                                 + " after t=" + std::to_string(wm));
    wm = ts.value();
}

void dispatch(const EventRecord& e, WorkerContext& ctx, const ModelBinding& model, CausalityChecker* checker)
{
    if (checker)
        checker->observe(e.dest_object, e.timestamp);
    struct Guard {
        WorkerContext& c;
        ~Guard() { c.end_callback(); }
    } guard{ctx};
    ctx.begin_event(e.dest_object, e.timestamp);
    try {
        model.process_event(e.dest_object, e.timestamp, e.payload.bytes(), ctx);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& ex) {
        throw ModelError("model failed at object " + std::to_string(e.dest_object) + ", t="
                         + std::to_string(e.timestamp.value()) + ": " + ex.what());
    }
}

} // namespace epochsim
