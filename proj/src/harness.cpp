#include "epochsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

#include <CLI11.hpp>

namespace epochsim {

OracleOptions OracleOptions::from(const EngineConfig& cfg)
{
    OracleOptions o;
    o.lookahead = cfg.lookahead.value();
    o.epoch_width = cfg.width();
    if (cfg.end_time)
        o.end_time = cfg.end_time->value();
    o.rng_seed = cfg.rng_seed;
    o.allocator = cfg.allocator;
    return o;
}

namespace {

struct Later {
    bool operator()(const EventRecord& a, const EventRecord& b) const noexcept { return event_order(b, a); }
};

class OracleSink final : public EventSink {
public:
    explicit OracleSink(double width) : width_(width) {}

    void deliver(WorkerContext&, EventRecord&& e, bool) override { queue_.push(std::move(e)); }
    EpochIndex current_epoch() const noexcept override { return EpochIndex{epoch_}; }

    std::priority_queue<EventRecord, std::vector<EventRecord>, Later> queue_;
    std::uint64_t epoch_ = 0;
    double width_;
};

} // namespace

std::vector<TraceEntry> sequential_oracle(const OracleOptions& opts, const ModelBinding& model)
{
    if (model.object_count == 0)
        throw ConfigError("model declares no simulation object");
    if (!(opts.lookahead > 0.0) || !(opts.epoch_width > 0.0))
        throw ConfigError("oracle needs positive lookahead and epoch width");

    std::vector<ObjectAllocator> allocators;
    std::vector<ObjectRng> rngs;
    allocators.reserve(model.object_count);
    rngs.reserve(model.object_count);
    for (ObjectId o = 0; o < model.object_count; ++o) {
        allocators.emplace_back(o, NodeId{0}, opts.allocator);
        rngs.push_back(make_object_rng(opts.rng_seed, o));
    }

    OracleSink sink(opts.epoch_width);
    WorkerContext ctx(0, 0, WorkerContext::Services{&sink, allocators, rngs, opts.lookahead, model.object_count});
    if (model.init) {
        for (ObjectId o = 0; o < model.object_count; ++o) {
            ctx.begin_init(o);
            model.init(o, ctx);
            ctx.end_callback();
        }
    }

    const double end = opts.end_time.value_or(std::numeric_limits<double>::infinity());
    std::vector<TraceEntry> trace;
    while (!sink.queue_.empty()) {
        EventRecord e = sink.queue_.top();
        if (!(e.timestamp.value() < end))
            break;
        sink.queue_.pop();
        if (trace.size() >= opts.max_events)
            throw Error("oracle exceeded " + std::to_string(opts.max_events) + " events");
        sink.epoch_ = epoch_of(e.timestamp.value(), opts.epoch_width).i;
        trace.push_back(TraceEntry{e.dest_object, e.timestamp.value(), e.seq, trace.size(), 0, sink.epoch_,
                                   e.parent_ts});
        dispatch(e, ctx, model);
    }
    return trace;
}

std::vector<TraceEntry> phold_oracle(const PholdConfig& cfg, const EngineConfig& engine)
{
    PholdModel model(cfg);
    OracleOptions o = OracleOptions::from(engine);
    o.allocator = model.allocator_options();
    auto trace = sequential_oracle(o, model.binding());
    model.reset();
    return trace;
}

std::optional<std::string> compare_traces(const std::vector<TraceEntry>& parallel,
                                          const std::vector<TraceEntry>& reference)
{
    if (parallel.size() != reference.size())
        return "event counts differ: " + std::to_string(parallel.size()) + " vs reference "
               + std::to_string(reference.size());

    auto per_object = [](const std::vector<TraceEntry>& t) {
        std::vector<const TraceEntry*> v;
        v.reserve(t.size());
        for (const auto& e : t)
            v.push_back(&e);
        std::stable_sort(v.begin(), v.end(), [](const TraceEntry* a, const TraceEntry* b) {
            if (a->object != b->object)
                return a->object < b->object;
            return a->order < b->order;
        });
        return v;
    };
    // Grouping by object with processing order kept inside each group gives
    // the per-object subsequences back to back; equal sequences imply equal
    // multisets.
    const auto a = per_object(parallel);
    const auto b = per_object(reference);
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k]->object != b[k]->object || a[k]->timestamp != b[k]->timestamp) {
            std::ostringstream os;
            os << std::setprecision(17) << "position " << k << " of the per-object listing: object " << a[k]->object
               << " t=" << a[k]->timestamp << " vs reference object " << b[k]->object << " t=" << b[k]->timestamp;
            return os.str();
        }
    }
    return std::nullopt;
}

std::vector<MetricsRow> metrics_from_samples(const std::vector<ProgressSample>& samples)
{
    std::vector<MetricsRow> rows;
    double prev_t = 0.0;
    std::uint64_t prev_events = 0;
    for (const auto& s : samples) {
        MetricsRow r;
        r.elapsed_seconds = s.elapsed_seconds;
        r.events = s.events;
        const double dt = s.elapsed_seconds - prev_t;
        const double de = s.events >= prev_events ? static_cast<double>(s.events - prev_events) : 0.0;
        r.throughput = dt > 0.0 ? de / dt : 0.0;
        r.epoch = s.epoch;
        r.per_node_local = s.per_node_local;
        r.per_node_stolen = s.per_node_stolen;
        rows.push_back(std::move(r));
        prev_t = s.elapsed_seconds;
        prev_events = std::max(prev_events, s.events);
    }
    return rows;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows, std::size_t nodes)
{
    out << "elapsed_s,events,throughput_eps,epoch";
    for (std::size_t n = 0; n < nodes; ++n)
        out << ",local_n" << n;
    for (std::size_t n = 0; n < nodes; ++n)
        out << ",stolen_n" << n;
    out << '\n';
    for (const auto& r : rows) {
        out << r.elapsed_seconds << ',' << r.events << ',' << r.throughput << ',' << r.epoch;
        for (std::size_t n = 0; n < nodes; ++n)
            out << ',' << (n < r.per_node_local.size() ? r.per_node_local[n] : 0);
        for (std::size_t n = 0; n < nodes; ++n)
            out << ',' << (n < r.per_node_stolen.size() ? r.per_node_stolen[n] : 0);
        out << '\n';
    }
}

SampleStats sample_stats(const std::vector<double>& xs)
{
    SampleStats s;
    if (xs.empty())
        return s;
    for (double x : xs)
        s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        for (double x : xs)
            s.variance += (x - s.mean) * (x - s.mean);
        s.variance /= static_cast<double>(xs.size() - 1);
    }
    return s;
}

namespace {

const char* stop_name(RunReport::StopReason r)
{
    switch (r) {
    case RunReport::StopReason::end_time: return "end-time";
    case RunReport::StopReason::empty_pool: return "empty-pool";
    case RunReport::StopReason::wall_clock: return "wall-clock";
    case RunReport::StopReason::error: return "error";
    }
    return "?";
}

struct CliOptions {
    PholdConfig phold;
    std::uint32_t threads = 1;
    std::optional<double> epoch_width;
    std::uint32_t calendar_depth = 16;
    std::optional<double> end_time;
    std::optional<double> wall_clock_limit;
    std::uint64_t seed = 1;
    std::optional<std::uint32_t> emulate_nodes;
    std::optional<bool> pin;
    std::string trace_path;
    std::string metrics_path;
    bool verify = false;
    bool oracle = false;
    std::uint32_t repeat = 1;
};

EngineConfig engine_config(const CliOptions& o, const PholdModel& model, std::ostream& err)
{
    EngineConfig c = phold_engine_config(model, o.threads);
    if (o.epoch_width)
        c.epoch_width = SimTime(*o.epoch_width);
    c.calendar_depth = o.calendar_depth;
    if (o.end_time)
        c.end_time = SimTime(*o.end_time);
    c.wall_clock_limit_seconds = o.wall_clock_limit;
    c.rng_seed = o.seed;
    const unsigned cpus = available_cpus();
    if (o.emulate_nodes)
        c.topology = emulated_topology_split(*o.emulate_nodes, cpus);
    if (o.pin) {
        c.pin = *o.pin ? PinMode::always : PinMode::never;
    } else {
        c.pin = PinMode::automatic;
    }
    if (o.threads > cpus && c.pin != PinMode::always) {
        c.allow_oversubscription = true;
        err << "warning: " << o.threads << " workers on " << cpus << " CPUs; workers run unpinned\n";
    }
    c.capture_trace = o.verify || o.oracle || !o.trace_path.empty();
    return c;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Epoch-synchronized parallel discrete event simulation running the PHOLD benchmark"};
    CliOptions o;
    app.add_option("--objects", o.phold.objects, "Simulation objects (O)")->check(CLI::PositiveNumber);
    app.add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--initial-events", o.phold.initial_events, "Initial events per object (M)");
    app.add_option("--state-size", o.phold.state_size, "List nodes per object (S)");
    app.add_option("--realloc-fraction", o.phold.realloc_fraction, "Fraction of S reallocated per event (P)");
    app.add_option("--lookahead", o.phold.lookahead, "Lookahead (L)");
    app.add_option("--mean-increment", o.phold.mean_increment, "Mean timestamp increment (TA)");
    app.add_option("--epoch-width", o.epoch_width, "Epoch width (W), defaults to L");
    app.add_option("--calendar-depth", o.calendar_depth, "Calendar buckets per object (N)");
    app.add_option("--end-time", o.end_time, "Simulation end time");
    app.add_option("--wall-clock-limit", o.wall_clock_limit, "Stop after this many seconds");
    app.add_option("--seed", o.seed, "Random seed");
    app.add_option("--emulate-nodes", o.emulate_nodes, "Split the CPUs into this many emulated nodes")
        ->check(CLI::PositiveNumber);
    app.add_flag("--pin,!--no-pin", o.pin, "Pin workers to CPUs (default: when CPUs suffice)");
    app.add_option("--trace", o.trace_path, "Write the processed-event trace here");
    app.add_option("--metrics", o.metrics_path, "Write the metrics CSV here");
    app.add_flag("--verify", o.verify, "Check the trace for causality, epoch and lookahead violations");
    app.add_flag("--oracle", o.oracle, "Compare against a sequential run");
    app.add_option("--repeat", o.repeat, "Independent samples to run")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    if (o.repeat > 1 && (o.verify || o.oracle || !o.trace_path.empty())) {
        err << "error: --repeat cannot be combined with --trace, --verify or --oracle\n";
        return 2;
    }
    if (!o.end_time && !o.wall_clock_limit) {
        err << "error: one of --end-time or --wall-clock-limit is required\n";
        return 2;
    }

    std::vector<double> throughputs;
    try {
        o.phold.validate();
        if (!o.phold.within_reference_ranges())
            out << "note: parameters outside the reference ranges (desk-scale run)\n";

        for (std::uint32_t rep = 0; rep < o.repeat; ++rep) {
            PholdModel model(o.phold);
            EngineConfig cfg = engine_config(o, model, err);
            std::vector<ProgressSample> samples;
            if (!o.metrics_path.empty()) {
                cfg.progress_interval_seconds = 0.1;
                cfg.progress_observer = [&samples](const ProgressSample& s) { samples.push_back(s); };
            }
            const std::uint32_t nodes = cfg.topology ? cfg.topology->num_nodes : detect_topology().num_nodes;

            RunReport r;
            {
                Engine engine(cfg, model.binding());
                r = engine.run();
            }
            model.reset();

            const double eps = r.wall_clock_seconds > 0 ? static_cast<double>(r.events_processed) / r.wall_clock_seconds : 0.0;
            throughputs.push_back(eps);
            const auto local = r.local_acquisitions();
            const auto stolen = r.stolen_acquisitions();
            const double steal_ratio = local + stolen ? static_cast<double>(stolen) / static_cast<double>(local + stolen) : 0.0;
            out << "events " << r.events_processed << " in " << r.wall_clock_seconds << " s (" << eps
                << " events/s), epochs " << r.epochs_completed << ", stop " << stop_name(r.stop_reason) << '\n';
            out << "acquisitions local " << local << " stolen " << stolen << ", steal ratio " << steal_ratio << '\n';
            out << "inserts calendar " << r.pool.calendar_inserts << " fallback " << r.pool.fallback_inserts
                << ", contended bucket locks " << r.pool.insert_lock_contended << ", extract locks "
                << r.pool.extract_lock_acquisitions << '\n';

            if (!o.metrics_path.empty()) {
                std::ofstream f(o.metrics_path);
                if (!f)
                    throw Error("cannot open " + o.metrics_path);
                write_metrics_csv(f, metrics_from_samples(samples), nodes);
            }
            if (!o.trace_path.empty()) {
                std::ofstream f(o.trace_path);
                if (!f)
                    throw Error("cannot open " + o.trace_path);
                write_trace(f, r.trace);
            }
            if (o.verify) {
                const auto v = verify_trace(r.trace, cfg.width(), cfg.lookahead.value());
                if (!v.ok) {
                    err << "verify: " << to_string(v.failed) << " violation: " << v.message << '\n';
                    return 3;
                }
                out << "verify: ok (" << r.trace.size() << " entries)\n";
            }
            if (o.oracle) {
                const auto ref = phold_oracle(o.phold, cfg);
                if (auto diff = compare_traces(r.trace, ref)) {
                    err << "oracle: mismatch: " << *diff << '\n';
                    return 3;
                }
                out << "oracle: match (" << ref.size() << " events)\n";
            }
        }
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }

    if (throughputs.size() > 1) {
        const auto s = sample_stats(throughputs);
        out << "samples " << throughputs.size() << ": mean " << s.mean << " events/s, variance " << s.variance
            << ", stddev/mean " << (s.mean > 0 ? std::sqrt(s.variance) / s.mean : 0.0) << '\n';
    }
    return 0;
}

} // namespace epochsim
