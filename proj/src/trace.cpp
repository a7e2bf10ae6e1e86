#include "epochsim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

namespace epochsim {

namespace {

std::string fmt_double(double v)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

template <class T>
T parse_field(const std::string& s, std::size_t line)
{
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error("trace line " + std::to_string(line) + ": bad field '" + s + "'");
    return v;
}

} // namespace

void write_trace(std::ostream& out, const std::vector<TraceEntry>& trace)
{
    for (const auto& t : trace) {
        out << t.object << '\t' << fmt_double(t.timestamp) << '\t' << t.seq << '\t' << t.order << '\t'
            << t.worker << '\t' << t.epoch << '\t' << (t.parent_ts < 0 ? std::string("-") : fmt_double(t.parent_ts))
            << '\n';
    }
}

std::vector<TraceEntry> read_trace(std::istream& in)
{
    std::vector<TraceEntry> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, '\t'))
            f.push_back(item);
        if (f.size() != 7)
            throw Error("trace line " + std::to_string(n) + ": expected 7 fields, got " + std::to_string(f.size()));
        TraceEntry t;
        t.object = parse_field<ObjectId>(f[0], n);
        t.timestamp = parse_field<double>(f[1], n);
        t.seq = parse_field<std::uint64_t>(f[2], n);
        t.order = parse_field<std::uint64_t>(f[3], n);
        t.worker = parse_field<WorkerId>(f[4], n);
        t.epoch = parse_field<std::uint64_t>(f[5], n);
        t.parent_ts = f[6] == "-" ? kNoParent : parse_field<double>(f[6], n);
        out.push_back(t);
    }
    return out;
}

const char* to_string(TraceVerdict::Check c) noexcept
{
    switch (c) {
    case TraceVerdict::Check::none: return "none";
    case TraceVerdict::Check::malformed: return "malformed";
    case TraceVerdict::Check::monotonicity: return "monotonicity";
    case TraceVerdict::Check::epoch_membership: return "epoch-membership";
    case TraceVerdict::Check::barrier_order: return "barrier-order";
    case TraceVerdict::Check::lookahead: return "lookahead";
    }
    return "?";
}

TraceVerdict verify_trace(const std::vector<TraceEntry>& trace, double epoch_width, double lookahead)
{
    auto fail = [](TraceVerdict::Check c, std::string msg) {
        return TraceVerdict{false, c, std::move(msg)};
    };
    if (!(epoch_width > 0.0))
        return fail(TraceVerdict::Check::malformed, "epoch width must be positive");

    std::vector<const TraceEntry*> by_order;
    by_order.reserve(trace.size());
    for (const auto& t : trace)
        by_order.push_back(&t);
    std::sort(by_order.begin(), by_order.end(),
              [](const TraceEntry* a, const TraceEntry* b) { return a->order < b->order; });
    for (std::size_t k = 0; k < by_order.size(); ++k) {
        if (by_order[k]->order != k)
            return fail(TraceVerdict::Check::malformed,
                        "processing order indices are not dense and unique at position " + std::to_string(k));
        if (!(by_order[k]->timestamp >= 0.0))
            return fail(TraceVerdict::Check::malformed, "negative timestamp at order " + std::to_string(k));
    }

    // (a) per-object monotonicity
    std::unordered_map<ObjectId, const TraceEntry*> last;
    for (const TraceEntry* t : by_order) {
        auto [it, fresh] = last.try_emplace(t->object, t);
        if (!fresh) {
            if (t->timestamp < it->second->timestamp)
                return fail(TraceVerdict::Check::monotonicity,
                            "object " + std::to_string(t->object) + ": t=" + fmt_double(t->timestamp) + " (order "
                                + std::to_string(t->order) + ") processed after t=" + fmt_double(it->second->timestamp)
                                + " (order " + std::to_string(it->second->order) + ")");
            it->second = t;
        }
    }

    // (b) epoch membership
    for (const TraceEntry* t : by_order) {
        const auto e = epoch_of(t->timestamp, epoch_width).i;
        if (e != t->epoch)
            return fail(TraceVerdict::Check::epoch_membership,
                        "order " + std::to_string(t->order) + ": t=" + fmt_double(t->timestamp) + " recorded in epoch "
                            + std::to_string(t->epoch) + " but belongs to epoch " + std::to_string(e));
    }

    // (c) barrier ordering
    for (std::size_t k = 1; k < by_order.size(); ++k) {
        if (by_order[k]->epoch < by_order[k - 1]->epoch)
            return fail(TraceVerdict::Check::barrier_order,
                        "order " + std::to_string(by_order[k]->order) + " (epoch " + std::to_string(by_order[k]->epoch)
                            + ") follows order " + std::to_string(by_order[k - 1]->order) + " (epoch "
                            + std::to_string(by_order[k - 1]->epoch) + ")");
    }

    // (d) lookahead
    for (const TraceEntry* t : by_order) {
        if (t->parent_ts < 0.0)
            continue;
        if (t->timestamp - t->parent_ts < lookahead && t->timestamp < t->parent_ts + lookahead)
            return fail(TraceVerdict::Check::lookahead,
                        "order " + std::to_string(t->order) + ": t=" + fmt_double(t->timestamp)
                            + " scheduled from parent t=" + fmt_double(t->parent_ts) + ", closer than "
                            + fmt_double(lookahead));
    }
    return {};
}

} // namespace epochsim
