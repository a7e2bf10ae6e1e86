#include <sstream>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "epochsim/harness.hpp"

namespace py = pybind11;
using namespace epochsim;

namespace {

PholdConfig phold_from(std::uint32_t objects, std::uint32_t initial_events, std::uint32_t state_size,
                       double realloc_fraction, double lookahead, double mean_increment, bool initial_at_zero)
{
    PholdConfig p;
    p.objects = objects;
    p.initial_events = initial_events;
    p.state_size = state_size;
    p.realloc_fraction = realloc_fraction;
    p.lookahead = lookahead;
    p.mean_increment = mean_increment;
    p.initial_at_zero = initial_at_zero;
    return p;
}

EngineConfig engine_from(const PholdModel& m, std::uint32_t threads, std::optional<double> epoch_width,
                         std::uint32_t calendar_depth, std::optional<double> end_time,
                         std::optional<double> wall_clock_limit, std::uint64_t seed,
                         std::optional<std::uint32_t> emulate_nodes, bool trace)
{
    EngineConfig c = phold_engine_config(m, threads);
    if (epoch_width)
        c.epoch_width = SimTime(*epoch_width);
    c.calendar_depth = calendar_depth;
    if (end_time)
        c.end_time = SimTime(*end_time);
    c.wall_clock_limit_seconds = wall_clock_limit;
    c.rng_seed = seed;
    if (emulate_nodes)
        c.topology = emulated_topology_split(*emulate_nodes, available_cpus());
    c.allow_oversubscription = true;
    c.capture_trace = trace;
    return c;
}

py::tuple trace_tuple(const TraceEntry& t)
{
    return py::make_tuple(t.object, t.timestamp, t.seq, t.order, t.worker, t.epoch,
                          t.parent_ts < 0 ? py::object(py::none()) : py::object(py::float_(t.parent_ts)));
}

std::vector<TraceEntry> trace_from(const py::list& rows)
{
    std::vector<TraceEntry> out;
    for (const auto& r : rows) {
        auto t = r.cast<py::tuple>();
        if (t.size() != 7)
            throw py::value_error("trace rows have 7 fields");
        TraceEntry e;
        e.object = t[0].cast<ObjectId>();
        e.timestamp = t[1].cast<double>();
        e.seq = t[2].cast<std::uint64_t>();
        e.order = t[3].cast<std::uint64_t>();
        e.worker = t[4].cast<WorkerId>();
        e.epoch = t[5].cast<std::uint64_t>();
        e.parent_ts = t[6].is_none() ? kNoParent : t[6].cast<double>();
        out.push_back(e);
    }
    return out;
}

const char* stop_name(RunReport::StopReason r)
{
    switch (r) {
    case RunReport::StopReason::end_time: return "end_time";
    case RunReport::StopReason::empty_pool: return "empty_pool";
    case RunReport::StopReason::wall_clock: return "wall_clock";
    case RunReport::StopReason::error: return "error";
    }
    return "?";
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Epoch-synchronized parallel discrete event simulation";

    // Translators are tried newest first, so the base class goes first.
    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<LookaheadViolation>(m, "LookaheadViolation", base.ptr());

    m.def("epoch_of", [](double t, double w) { return epoch_of(t, w).i; }, py::arg("t"), py::arg("width"));

    m.def(
        "partition_objects",
        [](std::uint32_t objects, std::uint32_t nodes) {
            std::vector<std::pair<std::int64_t, std::int64_t>> out;
            for (const auto& p : partition_objects(objects, emulated_topology(nodes, 1)))
                out.emplace_back(p.min_id, p.max_id);
            return out;
        },
        py::arg("objects"), py::arg("nodes"), "Inclusive (min, max) ranges per node; min > max when empty.");

    m.def("detect_topology", [] {
        const auto t = detect_topology();
        py::dict d;
        d["num_nodes"] = t.num_nodes;
        d["cpus_per_node"] = t.cpus_per_node;
        d["mode"] = t.mode == TopologyMode::detected ? "detected" : "emulated";
        return d;
    });

    m.def("available_cpus", &available_cpus);
    m.def("phold_touch_count", &phold_touch_count, py::arg("state_size"));
    m.def("phold_realloc_count", &phold_realloc_count, py::arg("state_size"), py::arg("fraction"));

    m.def(
        "run_phold",
        [](std::uint32_t objects, std::uint32_t threads, std::uint32_t initial_events, std::uint32_t state_size,
           double realloc_fraction, double lookahead, double mean_increment, std::optional<double> epoch_width,
           std::uint32_t calendar_depth, std::optional<double> end_time, std::optional<double> wall_clock_limit,
           std::uint64_t seed, std::optional<std::uint32_t> emulate_nodes, bool trace, bool initial_at_zero) {
            const auto p = phold_from(objects, initial_events, state_size, realloc_fraction, lookahead, mean_increment,
                                      initial_at_zero);
            PholdModel model(p);
            auto c = engine_from(model, threads, epoch_width, calendar_depth, end_time, wall_clock_limit, seed,
                                 emulate_nodes, trace);
            std::vector<std::uint64_t> pending;
            c.epoch_observer = [&pending](const EpochSummary& s) { pending.push_back(s.pending); };
            RunReport r;
            {
                py::gil_scoped_release release;
                Engine e(c, model.binding());
                r = e.run();
            }
            model.reset();
            py::dict d;
            d["events_processed"] = r.events_processed;
            d["epochs_completed"] = r.epochs_completed;
            d["wall_clock_seconds"] = r.wall_clock_seconds;
            d["per_thread_events"] = r.per_thread_events;
            d["per_node_local_acquisitions"] = r.per_node_local_acquisitions;
            d["per_node_stolen_acquisitions"] = r.per_node_stolen_acquisitions;
            d["final_pending"] = r.final_pending;
            d["pending_per_epoch"] = pending;
            d["stop_reason"] = stop_name(r.stop_reason);
            d["extract_lock_acquisitions"] = r.pool.extract_lock_acquisitions;
            d["extract_atomic_rmw"] = r.pool.extract_atomic_rmw;
            py::list t;
            for (const auto& e : r.trace)
                t.append(trace_tuple(e));
            d["trace"] = t;
            return d;
        },
        py::arg("objects") = 64, py::arg("threads") = 1, py::arg("initial_events") = 10, py::arg("state_size") = 64,
        py::arg("realloc_fraction") = 0.001, py::arg("lookahead") = 0.1, py::arg("mean_increment") = 1.0,
        py::arg("epoch_width") = py::none(), py::arg("calendar_depth") = 16, py::arg("end_time") = py::none(),
        py::arg("wall_clock_limit") = py::none(), py::arg("seed") = 1, py::arg("emulate_nodes") = py::none(),
        py::arg("trace") = false, py::arg("initial_at_zero") = false);

    m.def(
        "phold_oracle",
        [](std::uint32_t objects, std::uint32_t initial_events, std::uint32_t state_size, double realloc_fraction,
           double lookahead, double mean_increment, std::optional<double> epoch_width, double end_time,
           std::uint64_t seed, bool initial_at_zero) {
            const auto p = phold_from(objects, initial_events, state_size, realloc_fraction, lookahead, mean_increment,
                                      initial_at_zero);
            PholdModel model(p);
            const auto c = engine_from(model, 1, epoch_width, 16, end_time, std::nullopt, seed, std::nullopt, true);
            std::vector<TraceEntry> trace;
            {
                py::gil_scoped_release release;
                trace = phold_oracle(p, c);
            }
            py::list out;
            for (const auto& e : trace)
                out.append(trace_tuple(e));
            return out;
        },
        py::arg("objects") = 64, py::arg("initial_events") = 10, py::arg("state_size") = 64,
        py::arg("realloc_fraction") = 0.001, py::arg("lookahead") = 0.1, py::arg("mean_increment") = 1.0,
        py::arg("epoch_width") = py::none(), py::arg("end_time") = 10.0, py::arg("seed") = 1,
        py::arg("initial_at_zero") = false);

    m.def(
        "verify_trace",
        [](const py::list& rows, double width, double lookahead) {
            const auto v = verify_trace(trace_from(rows), width, lookahead);
            return py::make_tuple(v.ok, to_string(v.failed), v.message);
        },
        py::arg("trace"), py::arg("width"), py::arg("lookahead"));

    m.def(
        "compare_traces",
        [](const py::list& a, const py::list& b) { return compare_traces(trace_from(a), trace_from(b)); },
        py::arg("parallel"), py::arg("reference"));

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"epochsim"};
            for (const auto& a : args)
                argv.push_back(a.c_str());
            std::ostringstream out, err;
            int rc;
            {
                py::gil_scoped_release release;
                rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            }
            return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"));
}
