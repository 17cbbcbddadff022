#include <benchmark/benchmark.h>

#include <backcast/cloudsim.hpp>
#include <backcast/eval.hpp>
#include <backcast/metrics.hpp>
#include <backcast/predictor.hpp>
#include <backcast/trace.hpp>
#include <backcast/workflow.hpp>

#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <vector>

using namespace backcast;

namespace {

// Observation vectors the size of a long production run (the cache worked
// example counts 1202 completed jobs at the deepest checkpoint).
constexpr std::size_t kJobs = 1202;

const std::vector<double>& nominal_runtimes() {
    static const std::vector<double> v = [] {
        std::vector<double> out(kJobs);
        std::mt19937_64 gen(11);
        std::uniform_real_distribution<double> dist(40.0, 900.0);
        for (double& r : out) r = dist(gen);
        return out;
    }();
    return v;
}

const std::vector<double>& observed_runtimes() {
    static const std::vector<double> v = [] {
        std::vector<double> out = nominal_runtimes();
        std::mt19937_64 gen(12);
        std::normal_distribution<double> noise(1.1, 0.2);
        for (double& r : out) r *= std::max(0.2, noise(gen));
        return out;
    }();
    return v;
}

const char* workflow_text() {
    return "PSSTART\n"
           "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n"
           "VMSEQ N40000000 C60!setup N10000000\n"
           "PSSTART\n"
           "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n"
           "VMSEQ N50000000 C110!b1v1a C90!b1v1b N25000000\n"
           "VMSEQ N50000000 C120!b1v2a C80!b1v2b N25000000\n"
           "PSSTART\n"
           "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n"
           "VMSEQ N50000000 C100!b2v1a C95!b2v1b N25000000\n"
           "VMSEQ N50000000 C105!b2v2a C85!b2v2b N25000000\n"
           "PSSTART\n"
           "VMDEF VA=img,5,1,1000000000 RC=2,1,1073741824 VAST=store DATA=store\n"
           "VMSEQ N30000000 C45!collect N5000000\n";
}

const char* cloud_text() {
    return "PM count=1 cores=16 perf=1 mem=68719476736\n"
           "REPO name=store bandwidth=125000000 latency=0.001\n";
}

// One small end-to-end corpus shared by the pipeline benchmarks: a bursty
// synthetic archive simulated fragment by fragment, plus the error cache
// over the results.
struct PipelineFixture {
    WorkflowDescription desc;
    EnactmentPlan plan;
    CloudModel cloud;
    TraceArchive archive{std::vector<TraceJob>{}};
    std::vector<TraceJob> one_fragment;
    SimLog log;
    ErrorCache cache;
    SimConfig sim_cfg;
    ObservedRun run;
    FilteredSet filt;
};

const PipelineFixture& pipeline() {
    static const PipelineFixture f = [] {
        PipelineFixture p;
        p.desc = parse_workflow_description(workflow_text());
        p.plan = build_plan(p.desc);
        p.cloud = build_cloud(cloud_text());

        SyntheticProfile profile;
        profile.n_jobs = 3000;
        profile.mean_runtime = 60;
        profile.burstiness = 0.9;
        profile.period = 3000;
        profile.mean_interarrival = 10;
        profile.max_cores = 3;
        p.archive = generate_synthetic_corpus(7, profile);

        const double duration = 600;
        const auto refs = enumerate_fragments(p.archive, duration);
        std::vector<FragmentRef> strided;
        for (std::size_t i = 0; i < refs.size(); i += 10) strided.push_back(refs[i]);
        p.one_fragment = fragment_jobs(p.archive, strided[strided.size() / 2]);

        p.sim_cfg.seed = 1;
        p.sim_cfg.warmup_jobs = 10;
        p.log = batch_simulate(p.desc, p.plan, p.cloud, strided, p.archive, p.sim_cfg, 4);
        p.cache = build_error_cache(p.plan, p.log, *derive_shape(p.plan),
                                    {ErrorFunction::Sqd}, "bench");

        const auto& stamps = p.cache.fragment_timestamps();
        p.filt = FilteredSet{stamps, stamps.size()};
        const double golden = stamps[stamps.size() / 3];
        const auto& obs = p.log.entries.at(golden).result->observed;
        const std::size_t seen = k_real(1, *derive_shape(p.plan));
        p.run.t_curr = golden;
        p.run.checkpoints = 1;
        p.run.observed.assign(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(seen));
        return p;
    }();
    return f;
}

void BM_ErrorSqd(benchmark::State& state) {
    const auto& ex = nominal_runtimes();
    const auto& ob = observed_runtimes();
    for (auto _ : state)
        benchmark::DoNotOptimize(error_value(ErrorFunction::Sqd, ex, ob, kJobs));
}
BENCHMARK(BM_ErrorSqd);

void BM_ErrorMape(benchmark::State& state) {
    const auto& ex = nominal_runtimes();
    const auto& ob = observed_runtimes();
    for (auto _ : state)
        benchmark::DoNotOptimize(error_value(ErrorFunction::Mape, ex, ob, kJobs));
}
BENCHMARK(BM_ErrorMape);

void BM_ErrorTadjSqd(benchmark::State& state) {
    const auto& ex = nominal_runtimes();
    const auto& ob = observed_runtimes();
    for (auto _ : state)
        benchmark::DoNotOptimize(error_value(ErrorFunction::TadjSqd, ex, ob, kJobs));
}
BENCHMARK(BM_ErrorTadjSqd);

void BM_FutureError(benchmark::State& state) {
    const auto& ex = nominal_runtimes();
    const auto& ob = observed_runtimes();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            future_error(ErrorFunction::Sqd, ex, ob, kJobs / 2, kJobs));
}
BENCHMARK(BM_FutureError);

void BM_CacheLookup(benchmark::State& state) {
    const auto& p = pipeline();
    const auto& stamps = p.cache.fragment_timestamps();
    const double lo = stamps.front();
    const double span = stamps.back() - lo;
    double t = lo;
    for (auto _ : state) {
        t += span * 0.37;
        if (t > stamps.back()) t -= span;
        benchmark::DoNotOptimize(
            p.cache.at(ErrorFunction::Sqd, p.cache.floor_position(t), 1).past);
    }
}
BENCHMARK(BM_CacheLookup);

void BM_PhiAlignment(benchmark::State& state) {
    const auto& p = pipeline();
    const auto& stamps = p.cache.fragment_timestamps();
    const double t_init = p.run.t_curr;
    const double S = 1000;
    std::vector<double> window;
    for (double t : stamps)
        if (t > t_init - S / 2 && t < t_init + S / 2) window.push_back(t);
    std::map<double, double> sim_errors;
    for (double t : window) {
        const auto& obs = p.log.entries.at(t).result->observed;
        sim_errors[t] = simulated_error(ErrorFunction::Sqd, p.run.observed, obs,
                                        p.run.observed.size());
    }
    double x = stamps[stamps.size() / 2];
    for (auto _ : state)
        benchmark::DoNotOptimize(
            phi(x, window, sim_errors, p.cache, t_init, S, 1, ErrorFunction::Sqd));
}
BENCHMARK(BM_PhiAlignment);

void BM_SimulateFragment(benchmark::State& state) {
    const auto& p = pipeline();
    for (auto _ : state) {
        SimResult r = simulate(p.desc, p.plan, p.cloud, p.one_fragment, p.sim_cfg);
        benchmark::DoNotOptimize(r.workflow_makespan);
    }
}
BENCHMARK(BM_SimulateFragment);

void BM_Predict(benchmark::State& state) {
    const auto& p = pipeline();
    PredictorConfig cfg;
    cfg.absolute_future_match = true;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        cfg.seed = seed++;
        PredictionOutcome out = predict(cfg, p.cache, p.filt, p.plan, p.run, p.log);
        benchmark::DoNotOptimize(out.t_target);
    }
}
BENCHMARK(BM_Predict)->Unit(benchmark::kMillisecond);

void BM_ParseTrace(benchmark::State& state) {
    const std::string text = render_trace(pipeline().archive);
    for (auto _ : state) {
        TraceArchive a = parse_trace(text);
        benchmark::DoNotOptimize(a.jobs().size());
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseTrace);

} // namespace

BENCHMARK_MAIN();
