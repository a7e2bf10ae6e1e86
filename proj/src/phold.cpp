#include "epochsim/phold.hpp"

#include <cmath>
#include <cstring>

namespace epochsim {

void PholdConfig::validate() const
{
    if (objects == 0)
        throw ConfigError("PHOLD needs at least one object");
    if (!(lookahead > 0.0) || !std::isfinite(lookahead))
        throw ConfigError("PHOLD lookahead must be positive");
    if (!(mean_increment >= lookahead) || !std::isfinite(mean_increment))
        throw ConfigError("PHOLD mean increment must be at least the lookahead");
    if (!(realloc_fraction >= 0.0 && realloc_fraction <= 1.0))
        throw ConfigError("PHOLD reallocation fraction must lie in [0, 1]");
}

bool PholdConfig::within_reference_ranges() const
{
    return objects >= 1024 && objects <= 8192 && initial_events >= 10 && initial_events <= 1000
           && state_size >= 4000 && state_size <= 16000 && realloc_fraction >= 0.001 - 1e-12
           && realloc_fraction <= 0.004 + 1e-12 && lookahead >= mean_increment / 10 - 1e-12
           && lookahead <= mean_increment + 1e-12;
}

IncrementSampler::IncrementSampler(double lookahead, double mean)
    : lookahead_(lookahead), tail_(mean > lookahead ? 1.0 / (mean - lookahead) : 1.0),
      degenerate_(!(mean > lookahead))
{
}

double IncrementSampler::operator()(ObjectRng& rng)
{
    if (degenerate_)
        return lookahead_;
    return lookahead_ + tail_(rng);
}

std::uint32_t phold_touch_count(std::uint32_t state_size) noexcept
{
    return (state_size + 31) / 32;
}

std::uint32_t phold_realloc_count(std::uint32_t state_size, double fraction) noexcept
{
    const double k = fraction * static_cast<double>(state_size);
    const double r = std::round(k);
    if (std::abs(k - r) <= 1e-9 * std::max(1.0, k))
        return static_cast<std::uint32_t>(r);
    return static_cast<std::uint32_t>(std::ceil(k));
}

namespace {

struct Node {
    Node* next;
    // Payload fills the rest of the chunk.
};

constexpr std::size_t kChunk[2] = {32, 64};

unsigned char* payload_of(Node* n) noexcept
{
    return reinterpret_cast<unsigned char*>(n) + sizeof(Node*);
}

} // namespace

struct PholdModel::State {
    Node* head[2] = {nullptr, nullptr};
    std::uint32_t length[2] = {0, 0};
    // Walk position: node `cur` in list `list`, `prev` is its predecessor.
    int list = 0;
    Node* prev = nullptr;
    Node* cur = nullptr;
};

PholdModel::PholdModel(PholdConfig cfg)
    : cfg_(cfg), touch_(phold_touch_count(cfg.state_size)),
      realloc_(std::min(phold_realloc_count(cfg.state_size, cfg.realloc_fraction), touch_)),
      states_(cfg.objects, nullptr)
{
    cfg_.validate();
}

PholdModel::~PholdModel() = default;

void PholdModel::reset()
{
    std::fill(states_.begin(), states_.end(), nullptr);
}

ModelBinding PholdModel::binding()
{
    ModelBinding b;
    b.object_count = cfg_.objects;
    b.init = [this](ObjectId obj, WorkerContext& ctx) { init(obj, ctx); };
    b.process_event = [this](ObjectId obj, SimTime now, std::span<const std::byte>, WorkerContext& ctx) {
        process_event(obj, now, ctx);
    };
    return b;
}

AllocatorOptions PholdModel::allocator_options() const
{
    AllocatorOptions o;
    o.num_classes = 2;
    o.initial_bytes_per_class = (static_cast<std::size_t>(cfg_.state_size) / 2 + 4) * kChunk[1];
    return o;
}

void PholdModel::init(ObjectId obj, WorkerContext& ctx)
{
    static_assert(sizeof(State) <= 64);
    auto* st = new (ctx.obj_alloc(sizeof(State))) State{};
    const std::uint32_t counts[2] = {(cfg_.state_size + 1) / 2, cfg_.state_size / 2};
    for (int l = 0; l < 2; ++l) {
        Node* tail = nullptr;
        for (std::uint32_t k = 0; k < counts[l]; ++k) {
            auto* n = static_cast<Node*>(ctx.obj_alloc(kChunk[l]));
            n->next = nullptr;
            std::memset(payload_of(n), static_cast<int>(k & 0xff), kChunk[l] - sizeof(Node*));
            (tail ? tail->next : st->head[l]) = n;
            tail = n;
        }
        st->length[l] = counts[l];
    }
    st->list = st->head[0] ? 0 : 1;
    st->cur = st->head[st->list];
    states_[obj] = st;

    IncrementSampler inc(cfg_.lookahead, cfg_.mean_increment);
    for (std::uint32_t m = 0; m < cfg_.initial_events; ++m) {
        const double ts = cfg_.initial_at_zero ? 0.0 : inc(ctx.rng());
        ctx.inject_initial(obj, SimTime(ts));
    }
}

void PholdModel::process_event(ObjectId obj, SimTime now, WorkerContext& ctx)
{
    State& st = *states_[obj];
    const std::uint32_t total = st.length[0] + st.length[1];
    const std::uint32_t touches = std::min(touch_, total);
    const std::uint32_t first_realloc = touches - std::min(realloc_, touches);

    for (std::uint32_t step = 0; step < touches; ++step) {
        if (!st.cur) {
            // End of a list: continue with the other one, or wrap.
            st.list = st.head[1 - st.list] ? 1 - st.list : st.list;
            st.prev = nullptr;
            st.cur = st.head[st.list];
        }
        Node* n = st.cur;
        const std::size_t bytes = kChunk[st.list] - sizeof(Node*);
        unsigned char* p = payload_of(n);
        for (std::size_t b = 0; b < bytes; ++b)
            p[b] = static_cast<unsigned char>(p[b] + 1);

        if (step >= first_realloc) {
            auto* fresh = static_cast<Node*>(ctx.obj_alloc(kChunk[st.list]));
            std::memcpy(fresh, n, kChunk[st.list]);
            (st.prev ? st.prev->next : st.head[st.list]) = fresh;
            ctx.obj_free(n);
            n = fresh;
        }
        st.prev = n;
        st.cur = n->next;
    }

    IncrementSampler inc(cfg_.lookahead, cfg_.mean_increment);
    std::uniform_int_distribution<std::uint32_t> route(0, cfg_.objects - 1);
    auto& rng = ctx.rng();
    const ObjectId dest = route(rng);
    const double ts = now.value() + inc(rng);
    ctx.schedule_new_event(dest, SimTime(ts));
}

std::pair<std::uint32_t, std::uint32_t> PholdModel::list_lengths(ObjectId obj) const
{
    const State* st = states_.at(obj);
    if (!st)
        return {0, 0};
    std::uint32_t len[2] = {0, 0};
    for (int l = 0; l < 2; ++l)
        for (const Node* n = st->head[l]; n; n = n->next)
            ++len[l];
    return {len[0], len[1]};
}

EngineConfig phold_engine_config(const PholdModel& model, std::uint32_t threads)
{
    EngineConfig c;
    c.num_threads = threads;
    c.lookahead = SimTime(model.config().lookahead);
    c.allocator = model.allocator_options();
    return c;
}

} // namespace epochsim
