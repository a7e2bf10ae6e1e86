#include "epochsim/engine.hpp"

#include <sched.h>

#include <algorithm>
#include <chrono>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace epochsim {

void EngineConfig::validate() const
{
    if (num_threads == 0)
        throw ConfigError("at least one worker thread is required");
    if (!(lookahead.value() > 0.0))
        throw ConfigError("lookahead must be strictly positive");
    const double w = width();
    if (!(w > 0.0))
        throw ConfigError("epoch width must be strictly positive");
    if (w > lookahead.value())
        throw ConfigError("epoch width " + std::to_string(w) + " exceeds the lookahead "
                          + std::to_string(lookahead.value()));
    if (calendar_depth < 2)
        throw ConfigError("calendar depth must be at least 2");
    if (wall_clock_limit_seconds && !(*wall_clock_limit_seconds > 0.0))
        throw ConfigError("wall-clock limit must be positive");
    if (!(progress_interval_seconds > 0.0))
        throw ConfigError("progress interval must be positive");
    const unsigned cpus = available_cpus();
    if (num_threads > cpus) {
        if (pin == PinMode::always)
            throw ConfigError("cannot pin " + std::to_string(num_threads) + " workers on "
                              + std::to_string(cpus) + " CPUs");
        if (!allow_oversubscription)
            throw ConfigError(std::to_string(num_threads) + " workers requested but only "
                              + std::to_string(cpus) + " CPUs are available");
    }
    if (topology)
        topology->validate();
}

std::uint64_t RunReport::local_acquisitions() const noexcept
{
    std::uint64_t n = 0;
    for (auto v : per_node_local_acquisitions)
        n += v;
    return n;
}

std::uint64_t RunReport::stolen_acquisitions() const noexcept
{
    std::uint64_t n = 0;
    for (auto v : per_node_stolen_acquisitions)
        n += v;
    return n;
}

namespace {

struct alignas(kCacheLine) WorkerState {
    WorkerPlacement placement;
    std::unique_ptr<WorkerContext> ctx;
    bool sense = false;
    AcquisitionStats epoch_stats;
    std::uint64_t epoch_events = 0;
    std::uint64_t events = 0;
    std::vector<std::uint64_t> node_local;
    std::vector<std::uint64_t> node_stolen;
    std::vector<EventRecord> scratch;
    std::vector<TraceEntry> trace;
    std::atomic<std::uint64_t> progress_events{0};
};

} // namespace

struct Engine::Impl final : EventSink {
    EngineConfig cfg;
    ModelBinding model;
    double width = 1.0;
    TopologyDescriptor topo;
    std::vector<NodePartition> partitions;
    std::unique_ptr<EventPool> pool;
    std::vector<ObjectAllocator> allocators;
    std::vector<ObjectRng> rngs;
    std::unique_ptr<CausalityChecker> checker;
    std::vector<std::unique_ptr<WorkerState>> workers;
    std::unique_ptr<SenseBarrier> barrier;
    std::set<int> allowed_cpus;
    bool pin_workers = false;
    bool ran = false;

    std::atomic<bool> stop{false};
    std::atomic<bool> failed{false};
    std::mutex error_mu;
    std::exception_ptr error;
    alignas(kCacheLine) std::atomic<std::uint64_t> order{0};
    std::atomic<std::uint64_t> published_epoch{0};
    std::unique_ptr<std::atomic<std::uint64_t>[]> published_local;
    std::unique_ptr<std::atomic<std::uint64_t>[]> published_stolen;
    std::atomic<unsigned> finished{0};

    std::uint64_t epochs_completed = 0;
    RunReport::StopReason reason = RunReport::StopReason::empty_pool;
    std::chrono::steady_clock::time_point start;

    Impl(EngineConfig c, ModelBinding m) : cfg(std::move(c)), model(std::move(m))
    {
        cfg.validate();
        if (model.object_count == 0)
            throw ConfigError("model declares no simulation object");
        if (!model.process_event)
            throw ConfigError("model has no process_event callback");
        width = cfg.width();
        topo = cfg.topology ? *cfg.topology : detect_topology();
        topo.validate();
        partitions = partition_objects(model.object_count, topo);
        pool = std::make_unique<EventPool>(model.object_count, cfg.calendar_depth, width, cfg.num_threads);
        allocators = setup_allocators(partitions, cfg.allocator);
        rngs.reserve(model.object_count);
        for (ObjectId o = 0; o < model.object_count; ++o)
            rngs.push_back(make_object_rng(cfg.rng_seed, o));
        if (cfg.causality_check)
            checker = std::make_unique<CausalityChecker>(model.object_count);

        {
            cpu_set_t set;
            CPU_ZERO(&set);
            if (sched_getaffinity(0, sizeof(set), &set) == 0)
                for (int c = 0; c < CPU_SETSIZE; ++c)
                    if (CPU_ISSET(c, &set))
                        allowed_cpus.insert(c);
        }
        switch (cfg.pin) {
        case PinMode::always: pin_workers = true; break;
        case PinMode::never: pin_workers = false; break;
        case PinMode::automatic: pin_workers = cfg.num_threads <= allowed_cpus.size(); break;
        }

        const auto nodes = topo.num_nodes;
        published_local = std::make_unique<std::atomic<std::uint64_t>[]>(nodes);
        published_stolen = std::make_unique<std::atomic<std::uint64_t>[]>(nodes);
        for (WorkerId w = 0; w < cfg.num_threads; ++w) {
            auto ws = std::make_unique<WorkerState>();
            ws->node_local.assign(nodes, 0);
            ws->node_stolen.assign(nodes, 0);
            workers.push_back(std::move(ws));
        }
        barrier = std::make_unique<SenseBarrier>(cfg.num_threads);
    }

    void deliver(WorkerContext& ctx, EventRecord&& e, bool initial) override
    {
        if (initial)
            pool->insert_initial(ctx.worker_id(), std::move(e));
        else
            pool->insert(ctx.worker_id(), std::move(e));
    }

    EpochIndex current_epoch() const noexcept override { return pool->current_epoch(); }

    void record_error(std::exception_ptr ep)
    {
        std::lock_guard lk(error_mu);
        if (!error)
            error = ep;
        failed.store(true, std::memory_order_release);
    }

    void set_stop(RunReport::StopReason r)
    {
        reason = r;
        stop.store(true, std::memory_order_relaxed);
    }

    void worker_main(WorkerId w)
    {
        WorkerState& ws = *workers[w];
        try {
            const int cpu = cpu_for_worker(w, topo);
            const bool pin = pin_workers && (cfg.pin == PinMode::always || allowed_cpus.count(cpu));
            ws.placement = pin_worker(w, cpu, topo, pin);
            WorkerContext::Services services{this, allocators, rngs, cfg.lookahead.value(), model.object_count};
            ws.ctx = std::make_unique<WorkerContext>(w, ws.placement.local_node, services);
            init_objects(ws);
        } catch (...) {
            record_error(std::current_exception());
        }

        barrier->arrive_and_wait(ws.sense);
        if (w == 0)
            after_init();
        barrier->arrive_and_wait(ws.sense);

        while (!stop.load(std::memory_order_relaxed)) {
            try {
                process_epoch(w, ws);
            } catch (...) {
                record_error(std::current_exception());
            }
            barrier->arrive_and_wait(ws.sense);
            if (w == 0)
                rollover_window();
            barrier->arrive_and_wait(ws.sense);
            if (stop.load(std::memory_order_relaxed))
                break;
            try {
                pool->drain_fallback(w);
            } catch (...) {
                record_error(std::current_exception());
            }
        }
        finished.fetch_add(1, std::memory_order_release);
    }

    void init_objects(WorkerState& ws)
    {
        if (!model.init)
            return;
        AcquisitionCursor cursor(ws.placement.local_node, topo.num_nodes);
        while (auto a = acquire_next(cursor, partitions)) {
            if (failed.load(std::memory_order_relaxed))
                break;
            ws.ctx->begin_init(a->object);
            struct Guard {
                WorkerContext& c;
                ~Guard() { c.end_callback(); }
            } guard{*ws.ctx};
            model.init(a->object, *ws.ctx);
        }
    }

    void after_init()
    {
        reset_counters(partitions);
        if (failed.load(std::memory_order_acquire))
            set_stop(RunReport::StopReason::error);
        else if (cfg.end_time && cfg.end_time->value() <= 0.0)
            set_stop(RunReport::StopReason::end_time);
        else if (pool->total_pending() == 0)
            set_stop(RunReport::StopReason::empty_pool);
        published_epoch.store(0, std::memory_order_relaxed);
    }

    void process_epoch(WorkerId w, WorkerState& ws)
    {
        const std::uint64_t epoch = pool->current_epoch().i;
        double limit = std::numeric_limits<double>::infinity();
        if (cfg.end_time && static_cast<double>(epoch + 1) * width > cfg.end_time->value())
            limit = cfg.end_time->value();

        AcquisitionCursor cursor(ws.placement.local_node, topo.num_nodes);
        while (auto a = acquire_next(cursor, partitions, &ws.epoch_stats)) {
            ++(a->remote ? ws.node_stolen : ws.node_local)[a->from_node];
            if (failed.load(std::memory_order_relaxed))
                continue;
            pool->extract_epoch_batch(w, a->object, ws.scratch, limit);
            for (const EventRecord& e : ws.scratch) {
                if (cfg.capture_trace)
                    ws.trace.push_back(TraceEntry{e.dest_object, e.timestamp.value(), e.seq,
                                                  order.fetch_add(1, std::memory_order_relaxed), w, epoch,
                                                  e.parent_ts});
                dispatch(e, *ws.ctx, model, checker.get());
            }
            ws.epoch_events += ws.scratch.size();
            ws.events += ws.scratch.size();
            ws.progress_events.store(ws.events, std::memory_order_relaxed);
        }
    }

    void rollover_window()
    {
        try {
            EpochSummary summary;
            summary.epoch = pool->current_epoch();
            summary.pending = pool->total_pending();
            std::vector<std::uint64_t> local(topo.num_nodes, 0), stolen(topo.num_nodes, 0);
            for (auto& ws : workers) {
                summary.per_worker.push_back(ws->epoch_stats);
                summary.events += ws->epoch_events;
                ws->epoch_stats = {};
                ws->epoch_events = 0;
                for (std::uint32_t n = 0; n < topo.num_nodes; ++n) {
                    local[n] += ws->node_local[n];
                    stolen[n] += ws->node_stolen[n];
                }
            }
            for (std::uint32_t n = 0; n < topo.num_nodes; ++n) {
                published_local[n].store(local[n], std::memory_order_relaxed);
                published_stolen[n].store(stolen[n], std::memory_order_relaxed);
            }
            ++epochs_completed;
            if (cfg.epoch_observer)
                cfg.epoch_observer(summary);

            const std::uint64_t next = summary.epoch.i + 1;
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (failed.load(std::memory_order_acquire))
                set_stop(RunReport::StopReason::error);
            else if (cfg.end_time && static_cast<double>(next) * width >= cfg.end_time->value())
                set_stop(RunReport::StopReason::end_time);
            else if (summary.pending == 0)
                set_stop(RunReport::StopReason::empty_pool);
            else if (cfg.wall_clock_limit_seconds && elapsed >= *cfg.wall_clock_limit_seconds)
                set_stop(RunReport::StopReason::wall_clock);
            else {
                pool->advance_base();
                reset_counters(partitions);
                published_epoch.store(next, std::memory_order_relaxed);
            }
        } catch (...) {
            record_error(std::current_exception());
            set_stop(RunReport::StopReason::error);
        }
    }

    ProgressSample sample() const
    {
        ProgressSample s;
        s.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (const auto& ws : workers)
            s.events += ws->progress_events.load(std::memory_order_relaxed);
        s.epoch = published_epoch.load(std::memory_order_relaxed);
        for (std::uint32_t n = 0; n < topo.num_nodes; ++n) {
            s.per_node_local.push_back(published_local[n].load(std::memory_order_relaxed));
            s.per_node_stolen.push_back(published_stolen[n].load(std::memory_order_relaxed));
        }
        return s;
    }

    RunReport run()
    {
        if (ran)
            throw Error("an Engine instance runs only once");
        ran = true;
        start = std::chrono::steady_clock::now();

        std::vector<std::thread> threads;
        threads.reserve(cfg.num_threads);
        for (WorkerId w = 0; w < cfg.num_threads; ++w)
            threads.emplace_back([this, w] { worker_main(w); });

        if (cfg.progress_observer) {
            const auto interval = std::chrono::duration<double>(cfg.progress_interval_seconds);
            auto next = std::chrono::steady_clock::now() + std::chrono::duration_cast<std::chrono::nanoseconds>(interval);
            while (finished.load(std::memory_order_acquire) < cfg.num_threads) {
                std::this_thread::sleep_for(std::chrono::milliseconds(5));
                if (std::chrono::steady_clock::now() >= next) {
                    cfg.progress_observer(sample());
                    next += std::chrono::duration_cast<std::chrono::nanoseconds>(interval);
                }
            }
        }
        for (auto& t : threads)
            t.join();

        RunReport r;
        r.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.epochs_completed = epochs_completed;
        r.per_node_local_acquisitions.assign(topo.num_nodes, 0);
        r.per_node_stolen_acquisitions.assign(topo.num_nodes, 0);
        for (auto& ws : workers) {
            r.per_thread_events.push_back(ws->events);
            r.events_processed += ws->events;
            r.placements.push_back(ws->placement);
            for (std::uint32_t n = 0; n < topo.num_nodes; ++n) {
                r.per_node_local_acquisitions[n] += ws->node_local[n];
                r.per_node_stolen_acquisitions[n] += ws->node_stolen[n];
            }
            if (cfg.capture_trace)
                r.trace.insert(r.trace.end(), ws->trace.begin(), ws->trace.end());
        }
        std::sort(r.trace.begin(), r.trace.end(),
                  [](const TraceEntry& a, const TraceEntry& b) { return a.order < b.order; });
        r.final_pending = pool->total_pending();
        r.pool = pool->total_counters();
        r.stop_reason = reason;
        if (error)
            std::rethrow_exception(error);
        if (cfg.progress_observer)
            cfg.progress_observer(sample());
        return r;
    }
};

Engine::Engine(EngineConfig config, ModelBinding model)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(model)))
{
}

Engine::~Engine() = default;

RunReport Engine::run()
{
    return impl_->run();
}

EpochIndex Engine::current_epoch() const noexcept
{
    return impl_->pool->current_epoch();
}

const EventPool& Engine::pool() const noexcept
{
    return *impl_->pool;
}

const std::vector<NodePartition>& Engine::partitions() const noexcept
{
    return impl_->partitions;
}

const std::vector<ObjectAllocator>& Engine::allocators() const noexcept
{
    return impl_->allocators;
}

RunReport run(const EngineConfig& config, const ModelBinding& model)
{
    Engine engine(config, model);
    return engine.run();
}

} // namespace epochsim
