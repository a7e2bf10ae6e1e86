#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "epochsim/harness.hpp"

using namespace epochsim;

namespace {

TraceEntry te(ObjectId obj, double ts, std::uint64_t order, std::uint64_t epoch, double parent = kNoParent)
{
    return TraceEntry{obj, ts, order, order, 0, epoch, parent};
}

std::vector<TraceEntry> good_trace()
{
    return {te(0, 0.2, 0, 0), te(1, 0.7, 1, 0), te(1, 1.3, 2, 1, 0.2), te(0, 1.8, 3, 1, 0.7), te(0, 2.4, 4, 2, 1.3)};
}

int cli(std::vector<std::string> args, std::string* out_text = nullptr, std::string* err_text = nullptr)
{
    std::vector<const char*> argv{"epochsim"};
    for (auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (out_text)
        *out_text = out.str();
    if (err_text)
        *err_text = err.str();
    return rc;
}

std::string tmp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("epochsim_" + std::to_string(::getpid()) + "_" + name)).string();
}

EngineConfig engine_for(const PholdModel& m, std::uint32_t threads, double end)
{
    auto c = phold_engine_config(m, threads);
    c.allow_oversubscription = true;
    c.end_time = SimTime(end);
    c.capture_trace = true;
    c.topology = emulated_topology(1, 1);
    return c;
}

} // namespace

TEST(VerifyTrace, CorrectTracePasses)
{
    const auto v = verify_trace(good_trace(), 1.0, 0.5);
    EXPECT_TRUE(v.ok) << v.message;
}

TEST(VerifyTrace, SwappedPairAtAnObjectFailsMonotonicity)
{
    auto t = good_trace();
    std::swap(t[3].timestamp, t[4].timestamp);
    std::swap(t[3].epoch, t[4].epoch);
    const auto v = verify_trace(t, 1.0, 0.0);
    EXPECT_FALSE(v.ok);
    EXPECT_EQ(v.failed, TraceVerdict::Check::monotonicity);
    EXPECT_NE(v.message.find("object 0"), std::string::npos) << v.message;
    EXPECT_NE(v.message.find("order 3"), std::string::npos) << v.message;
    EXPECT_NE(v.message.find("order 4"), std::string::npos) << v.message;
}

TEST(VerifyTrace, WrongEpochLabelFailsMembership)
{
    auto t = good_trace();
    t[2].epoch = 2;
    const auto v = verify_trace(t, 1.0, 0.5);
    EXPECT_FALSE(v.ok);
    EXPECT_EQ(v.failed, TraceVerdict::Check::epoch_membership);
}

TEST(VerifyTrace, LaterEpochBeforeEarlierFailsBarrierOrder)
{
    // Object 2's epoch-1 entry is processed before object 3's epoch-0 entry.
    std::vector<TraceEntry> t{te(0, 0.1, 0, 0), te(2, 1.5, 1, 1), te(3, 0.9, 2, 0)};
    const auto v = verify_trace(t, 1.0, 0.5);
    EXPECT_FALSE(v.ok);
    EXPECT_EQ(v.failed, TraceVerdict::Check::barrier_order);
}

TEST(VerifyTrace, ShortIncrementFailsLookahead)
{
    auto t = good_trace();
    t[2].parent_ts = 1.0;
    const auto v = verify_trace(t, 1.0, 0.5);
    EXPECT_FALSE(v.ok);
    EXPECT_EQ(v.failed, TraceVerdict::Check::lookahead);
}

TEST(VerifyTrace, MalformedOrderIsRejected)
{
    auto t = good_trace();
    t[1].order = 0;
    EXPECT_EQ(verify_trace(t, 1.0, 0.5).failed, TraceVerdict::Check::malformed);
    EXPECT_EQ(verify_trace(good_trace(), 0.0, 0.5).failed, TraceVerdict::Check::malformed);
}

TEST(Trace, RoundTripsThroughText)
{
    auto t = good_trace();
    t[2].timestamp = 0.1 + 0.2 + 1.0;
    std::stringstream ss;
    write_trace(ss, t);
    const auto back = read_trace(ss);
    EXPECT_EQ(back, t);

    std::stringstream first_line;
    write_trace(first_line, {t[0]});
    EXPECT_EQ(first_line.str(), "0\t0.2\t0\t0\t0\t0\t-\n");
}

TEST(Trace, ReadRejectsBadLines)
{
    std::stringstream a("0\t0.5\t1\n");
    EXPECT_THROW(read_trace(a), Error);
    std::stringstream b("0\tx\t0\t0\t0\t0\t-\n");
    EXPECT_THROW(read_trace(b), Error);
}

TEST(Oracle, SingleObjectMatchesParallelTraceExactly)
{
    PholdConfig p;
    p.objects = 1;
    p.initial_events = 3;
    p.state_size = 64;
    p.lookahead = 0.1;
    PholdModel m(p);
    auto c = engine_for(m, 1, 40.0);
    RunReport r;
    {
        Engine e(c, m.binding());
        r = e.run();
    }
    m.reset();
    const auto ref = phold_oracle(p, c);
    ASSERT_EQ(r.trace.size(), ref.size());
    ASSERT_GT(ref.size(), 100u);
    for (std::size_t k = 0; k < ref.size(); ++k) {
        EXPECT_EQ(r.trace[k].object, ref[k].object);
        EXPECT_EQ(r.trace[k].timestamp, ref[k].timestamp);
        EXPECT_EQ(r.trace[k].order, ref[k].order);
        EXPECT_EQ(r.trace[k].epoch, ref[k].epoch);
        EXPECT_EQ(r.trace[k].parent_ts, ref[k].parent_ts);
    }
}

TEST(Oracle, FourThreadsMatchPerObject)
{
    PholdConfig p;
    p.objects = 8;
    p.initial_events = 4;
    p.state_size = 64;
    p.lookahead = 0.2;
    PholdModel m(p);
    auto c = engine_for(m, 4, 50.0);
    c.epoch_width = SimTime(0.1);
    RunReport r;
    {
        Engine e(c, m.binding());
        r = e.run();
    }
    m.reset();
    const auto ref = phold_oracle(p, c);
    EXPECT_EQ(compare_traces(r.trace, ref), std::nullopt);
    EXPECT_TRUE(verify_trace(ref, 0.1, 0.2).ok);
    EXPECT_TRUE(verify_trace(r.trace, 0.1, 0.2).ok);
}

TEST(Oracle, CompareReportsDifferences)
{
    auto a = good_trace();
    auto b = good_trace();
    EXPECT_EQ(compare_traces(a, b), std::nullopt);
    b[4].timestamp = 2.5;
    EXPECT_TRUE(compare_traces(a, b).has_value());
    b = good_trace();
    b.pop_back();
    EXPECT_TRUE(compare_traces(a, b).has_value());
    // Same multiset, different per-object order.
    b = good_trace();
    std::swap(b[0].order, b[3].order);
    EXPECT_TRUE(compare_traces(a, b).has_value());
}

TEST(Metrics, RowsAndCsvLayout)
{
    std::vector<ProgressSample> s(2);
    s[0].elapsed_seconds = 0.1;
    s[0].events = 100;
    s[0].epoch = 3;
    s[0].per_node_local = {5, 6};
    s[0].per_node_stolen = {1, 0};
    s[1].elapsed_seconds = 0.3;
    s[1].events = 500;
    s[1].epoch = 9;
    s[1].per_node_local = {15, 16};
    s[1].per_node_stolen = {2, 1};
    const auto rows = metrics_from_samples(s);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_DOUBLE_EQ(rows[0].throughput, 1000.0);
    EXPECT_DOUBLE_EQ(rows[1].throughput, 2000.0);
    for (const auto& r : rows)
        EXPECT_GE(r.throughput, 0.0);
    std::stringstream ss;
    write_metrics_csv(ss, rows, 2);
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, "elapsed_s,events,throughput_eps,epoch,local_n0,local_n1,stolen_n0,stolen_n1");
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "0.1,100,1000,3,5,6,1,0");
}

TEST(Metrics, SampleStats)
{
    const auto s = sample_stats({1.0, 2.0, 3.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_DOUBLE_EQ(s.variance, 1.0);
    EXPECT_DOUBLE_EQ(sample_stats({4.0}).variance, 0.0);
}

TEST(Cli, HappyPathWritesMetricsAndSummary)
{
    const auto metrics = tmp_path("metrics.csv");
    std::string out, err;
    const int rc = cli({"--objects", "64", "--threads", "4", "--initial-events", "10", "--lookahead", "0.1",
                        "--mean-increment", "1.0", "--end-time", "100", "--seed", "7", "--state-size", "256",
                        "--metrics", metrics},
                       &out, &err);
    EXPECT_EQ(rc, 0) << err;
    EXPECT_NE(out.find("events/s"), std::string::npos) << out;
    EXPECT_NE(out.find("epochs 1000"), std::string::npos) << out;
    EXPECT_NE(out.find("steal ratio"), std::string::npos) << out;
    std::ifstream f(metrics);
    std::string header;
    std::getline(f, header);
    EXPECT_EQ(header.rfind("elapsed_s,events,throughput_eps,epoch", 0), 0u);
    std::string row;
    EXPECT_TRUE(static_cast<bool>(std::getline(f, row)));
    std::filesystem::remove(metrics);
}

TEST(Cli, WidthAboveLookaheadIsConfigError)
{
    std::string err;
    EXPECT_NE(cli({"--epoch-width", "0.2", "--lookahead", "0.1", "--end-time", "1"}, nullptr, &err), 0);
    EXPECT_NE(err.find("exceeds the lookahead"), std::string::npos) << err;
}

TEST(Cli, SingleWorkerOnTwoEmulatedNodesSteals)
{
    std::string out, err;
    EXPECT_EQ(cli({"--emulate-nodes", "2", "--threads", "1", "--objects", "64", "--state-size", "64", "--end-time",
                   "5"},
                  &out, &err),
              0)
        << err;
    EXPECT_NE(out.find("stolen 1600"), std::string::npos) << out;
}

TEST(Cli, VerifyOracleAndTrace)
{
    const auto trace = tmp_path("trace.tsv");
    std::string out, err;
    EXPECT_EQ(cli({"--objects", "16", "--threads", "3", "--state-size", "64", "--end-time", "20", "--epoch-width",
                   "0.05", "--verify", "--oracle", "--trace", trace},
                  &out, &err),
              0)
        << err;
    EXPECT_NE(out.find("verify: ok"), std::string::npos);
    EXPECT_NE(out.find("oracle: match"), std::string::npos);
    std::ifstream f(trace);
    const auto entries = read_trace(f);
    EXPECT_GT(entries.size(), 1000u);
    EXPECT_TRUE(verify_trace(entries, 0.05, 0.1).ok);
    std::filesystem::remove(trace);
}

TEST(Cli, UsageErrors)
{
    EXPECT_NE(cli({"--objects", "0", "--end-time", "1"}), 0);
    EXPECT_NE(cli({"--bogus"}), 0);
    EXPECT_NE(cli({"--objects", "8"}), 0);
    EXPECT_NE(cli({"--end-time", "1", "--repeat", "2", "--verify"}), 0);
    EXPECT_NE(cli({"--end-time", "1", "--calendar-depth", "1"}), 0);
    EXPECT_NE(cli({"--end-time", "1", "--lookahead", "2", "--mean-increment", "1"}), 0);
    std::string out;
    EXPECT_EQ(cli({"--help"}, &out), 0);
    EXPECT_NE(out.find("--emulate-nodes"), std::string::npos);
}

TEST(Cli, ExplicitPinWithTooManyThreadsIsConfigError)
{
    const auto too_many = std::to_string(available_cpus() + 1);
    std::string err;
    EXPECT_EQ(cli({"--threads", too_many, "--pin", "--end-time", "1", "--objects", "8", "--state-size", "32"}, nullptr,
                  &err),
              2);
    EXPECT_EQ(cli({"--threads", too_many, "--no-pin", "--end-time", "1", "--objects", "8", "--state-size", "32"}), 0);
}

TEST(Cli, RepeatReportsSampleVariance)
{
    std::string out;
    EXPECT_EQ(cli({"--objects", "16", "--state-size", "32", "--end-time", "5", "--repeat", "3"}, &out), 0);
    EXPECT_NE(out.find("samples 3"), std::string::npos) << out;
    EXPECT_NE(out.find("variance"), std::string::npos) << out;
}
