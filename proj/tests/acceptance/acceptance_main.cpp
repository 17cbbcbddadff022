// End-to-end acceptance gate. Each criterion prints one [PASS]/[FAIL]
// line; the exit code is the number of failed criteria.

#include <backcast/cloudsim.hpp>
#include <backcast/eval.hpp>
#include <backcast/exceptions.hpp>
#include <backcast/metrics.hpp>
#include <backcast/predictor.hpp>
#include <backcast/rng.hpp>
#include <backcast/textio.hpp>
#include <backcast/trace.hpp>
#include <backcast/workflow.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../../tools/cli.hpp"
#include "../support.hpp"

using namespace backcast;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool close_rel(double got, double want, double tol) {
    const double scale = std::max({1e-12, std::fabs(got), std::fabs(want)});
    return std::fabs(got - want) <= tol * scale;
}

// Direct transcriptions of the error definitions, kept independent of the
// library implementations on purpose.
double direct_sqd(const std::vector<double>& r_ex, const std::vector<double>& r_ob,
                  std::size_t k) {
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double d = r_ob[i] - r_ex[i];
        sum += d * d;
    }
    return std::sqrt(sum / double(k));
}

double direct_mape(const std::vector<double>& r_ex, const std::vector<double>& r_ob,
                   std::size_t k) {
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += std::fabs(r_ob[i] - r_ex[i]) / r_ex[i];
    return 100.0 / double(k) * sum;
}

double direct_tadj(const std::vector<double>& r_ex, const std::vector<double>& r_ob,
                   std::size_t k) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double w = double(i + 1) / double(k);
        const double d = r_ob[i] - r_ex[i];
        num += w * d * d;
        den += w;
    }
    return std::sqrt(num / den);
}

double direct_fn(ErrorFunction fn, const std::vector<double>& r_ex,
                 const std::vector<double>& r_ob, std::size_t k) {
    switch (fn) {
    case ErrorFunction::Sqd: return direct_sqd(r_ex, r_ob, k);
    case ErrorFunction::Mape: return direct_mape(r_ex, r_ob, k);
    default: return direct_tadj(r_ex, r_ob, k);
    }
}

// The future error is the chosen error over the suffix, re-indexed to
// start at one.
double direct_future(ErrorFunction fn, const std::vector<double>& r_ex,
                     const std::vector<double>& r_ob, std::size_t k) {
    std::vector<double> ex(r_ex.begin() + std::ptrdiff_t(k), r_ex.end());
    std::vector<double> ob(r_ob.begin() + std::ptrdiff_t(k), r_ob.end());
    return direct_fn(fn, ex, ob, ex.size());
}

bool criterion_error_oracles(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(4242);
    const ErrorFunction fns[] = {ErrorFunction::Sqd, ErrorFunction::Mape, ErrorFunction::TadjSqd};
    for (int round = 0; round < 1000; ++round) {
        const std::size_t n = 1 + uniform_below(rng, 16);
        const std::size_t k = 1 + uniform_below(rng, std::min<std::size_t>(n, 12));
        std::vector<double> r_ex(n), r_ob(n);
        for (std::size_t i = 0; i < n; ++i) {
            r_ex[i] = 0.1 + uniform_unit(rng) * 100.0;
            r_ob[i] = r_ex[i] * (0.25 + 1.5 * uniform_unit(rng));
        }
        for (ErrorFunction fn : fns) {
            const double got = error_value(fn, r_ex, r_ob, k);
            const double want = direct_fn(fn, r_ex, r_ob, k);
            if (!close_rel(got, want, 1e-9)) {
                detail = "past error mismatch: " + std::string(to_string(fn)) + " got " +
                         format_double(got) + " want " + format_double(want);
                return false;
            }
            if (k < n) {
                const double fgot = future_error(fn, r_ex, r_ob, k, n);
                const double fwant = direct_future(fn, r_ex, r_ob, k);
                if (!close_rel(fgot, fwant, 1e-9)) {
                    detail = "future error mismatch: " + std::string(to_string(fn)) + " got " +
                             format_double(fgot) + " want " + format_double(fwant);
                    return false;
                }
            }
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 1.0) {
        detail = "took " + format_fixed(elapsed, 3) + " s, bound is 1 s";
        return false;
    }
    return true;
}

// Counts the jobs finished when checkpoint k is reached, straight off the
// layout: checkpoint 0 is the start, the setup precedes checkpoint 1, one
// bulk section completes per checkpoint, the collector follows the last.
std::size_t jobs_done_by_layout(std::size_t k, std::size_t sections, std::size_t jps) {
    if (k == 0) return 0;
    std::size_t done = 1;
    for (std::size_t s = 1; s <= k; ++s) done += jps;
    if (k == sections) done += 1;
    return done;
}

bool criterion_checkpoint_mapping(std::string& detail) {
    const SectionShape wide{15, 80};
    if (k_real(0, wide) != 0 || k_real(1, wide) != 81 || k_real(15, wide) != 1202) {
        detail = "anchor values off for the 15x80 shape";
        return false;
    }
    for (std::size_t sections = 1; sections <= 6; ++sections) {
        for (std::size_t jps = 1; jps <= 10; ++jps) {
            for (std::size_t k = 0; k <= sections; ++k) {
                const std::size_t got = k_real(k, SectionShape{sections, jps});
                const std::size_t want = jobs_done_by_layout(k, sections, jps);
                if (got != want) {
                    detail = "shape " + std::to_string(sections) + "x" + std::to_string(jps) +
                             " k=" + std::to_string(k) + ": got " + std::to_string(got) +
                             " want " + std::to_string(want);
                    return false;
                }
            }
        }
    }
    return true;
}

bool criterion_conservation(std::string& detail) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(90210);
    for (int scenario = 0; scenario < 200; ++scenario) {
        const int pms = 1 + int(uniform_below(rng, 4));
        const int cores = 2 + int(uniform_below(rng, 7));
        CloudModel cloud = build_cloud(testsupport::small_cloud(pms, cores));
        const std::size_t sections = 1 + uniform_below(rng, 3);
        const std::size_t vms = 1 + uniform_below(rng, 3);
        WorkflowDescription desc =
            parse_workflow_description(testsupport::demo_workflow(sections, vms, 0.1));
        EnactmentPlan plan = build_plan(desc);

        std::vector<TraceJob> fragment;
        const int jobs = int(uniform_below(rng, 30));
        double t = 0;
        for (int i = 0; i < jobs; ++i) {
            t += exponential(rng, 4.0);
            const auto widest = std::uint64_t(std::min(cores, 4));
            fragment.push_back({i + 1, t, 1.0 + uniform_unit(rng) * 30.0,
                                1 + int(uniform_below(rng, widest))});
        }
        SimConfig cfg;
        cfg.warmup_jobs = fragment.size() >= 5 ? 2 : 0;
        SimAudit audit;
        SimResult r = simulate(desc, plan, cloud, fragment, cfg, &audit);
        if (r.observed.size() != plan.total()) {
            detail = "scenario " + std::to_string(scenario) + ": observation count off";
            return false;
        }
        // the run stops when the workflow completes, so background items
        // may be cut short; nothing may overdeliver, and every workflow
        // job must have received its full demand
        std::size_t full_compute = 0;
        for (const auto& item : audit.compute_items) {
            if (item.delivered > item.demanded * (1.0 + 1e-6) + 1e-9) {
                detail = "scenario " + std::to_string(scenario) + ": compute overdelivery";
                return false;
            }
            if (item.delivered >= item.demanded * (1.0 - 1e-6) - 1e-9) ++full_compute;
        }
        if (full_compute < plan.total()) {
            detail = "scenario " + std::to_string(scenario) + ": a workflow job fell short";
            return false;
        }
        for (const auto& item : audit.transfer_items) {
            if (item.delivered > item.demanded * (1.0 + 1e-6) + 1e-9) {
                detail = "scenario " + std::to_string(scenario) + ": transfer overdelivery";
                return false;
            }
        }
        if (audit.max_core_overshoot > 1e-9 || audit.max_bandwidth_overshoot > 1e-9) {
            detail = "scenario " + std::to_string(scenario) + ": capacity overshoot";
            return false;
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 30.0) {
        detail = "took " + format_fixed(elapsed, 3) + " s, bound is 30 s";
        return false;
    }
    return true;
}

bool criterion_dedicated_identity(std::string& detail) {
    WorkflowDescription desc = parse_workflow_description(testsupport::demo_workflow(3, 4));
    EnactmentPlan plan = build_plan(desc);
    CloudModel cloud = build_cloud(testsupport::small_cloud(4, 16));
    SimConfig cfg;
    cfg.warmup_jobs = 0;
    SimResult r = simulate(desc, plan, cloud, {}, cfg);
    if (r.observed.size() != plan.total()) {
        detail = "observation count off";
        return false;
    }
    for (std::size_t i = 0; i < plan.total(); ++i) {
        if (r.observed[i] != plan.jobs[i].r_ex) {
            detail = "job " + std::to_string(i + 1) + ": observed " +
                     format_double(r.observed[i]) + " vs nominal " +
                     format_double(plan.jobs[i].r_ex);
            return false;
        }
    }
    return true;
}

int run_cli(std::vector<std::string> args, std::string& err_out) {
    std::ostringstream out, err;
    const int code = cli::dispatch(std::move(args), out, err);
    err_out = err.str();
    return code;
}

bool criterion_determinism(std::string& detail) {
    testsupport::TempDir a, b;
    const std::string wf_text = testsupport::demo_workflow(3, 2, 0.25);
    const std::string cloud_text = testsupport::small_cloud(2, 6);

    auto pipeline = [&](const testsupport::TempDir& dir,
                        std::vector<std::string>& files) -> bool {
        const std::string wf = dir.file("wf.txt");
        const std::string cloud = dir.file("cloud.txt");
        write_file(wf, wf_text);
        write_file(cloud, cloud_text);
        const std::string raw = dir.file("raw.txt");
        const std::string trace = dir.file("trace.txt");
        const std::string sim = dir.file("sim.txt");
        const std::string cache = dir.file("cache.txt");
        const std::string outcome = dir.file("outcome.txt");
        std::string err;
        auto step = [&](std::vector<std::string> args) {
            const int code = run_cli(std::move(args), err);
            if (code != 0) detail = "pipeline step failed: " + err;
            return code == 0;
        };
        if (!step({"synth", "--seed", "5", "--jobs", "900", "--mean-runtime", "40",
                   "--burstiness", "0.9", "--period", "3000", "--interarrival", "10",
                   "--max-cores", "3", "--out", raw}))
            return false;
        if (!step({"ingest", raw, raw, "--gap", "50", "--out", trace})) return false;
        if (!step({"simulate", "--archive", trace, "--workflow", wf, "--cloud", cloud,
                   "--duration", "500", "--stride", "9", "--warmup", "10", "--seed", "1",
                   "--parallel", "2", "--out", sim}))
            return false;
        if (!step({"cache", "--simlog", sim, "--workflow", wf, "--id", "det", "--out", cache}))
            return false;
        const ErrorCache parsed = parse_error_cache(read_file(cache));
        if (parsed.fragment_timestamps().empty()) {
            detail = "cache came out empty";
            return false;
        }
        const std::string golden = format_double(parsed.fragment_timestamps().front());
        if (!step({"predict", "--cache", cache, "--simlog", sim, "--workflow", wf, "--k", "2",
                   "--seed", "3", "--golden", golden, "--S", "300", "--P", "6", "--I", "4",
                   "--ratio", "10", "--out", outcome}))
            return false;
        files = {trace, sim, cache, outcome};
        return true;
    };

    std::vector<std::string> files_a, files_b;
    if (!pipeline(a, files_a)) return false;
    if (!pipeline(b, files_b)) return false;
    for (std::size_t i = 0; i < files_a.size(); ++i) {
        if (read_file(files_a[i]) != read_file(files_b[i])) {
            detail = "artifact differs between reruns: " + files_a[i];
            return false;
        }
    }
    return true;
}

// Three cached fragments where the middle one uniquely minimizes both the
// alignment cost and the error-match step, checked end to end.
struct ToyInstance {
    WorkflowDescription desc;
    EnactmentPlan plan;
    ErrorCache cache;
    SimLog sim;
    FilteredSet filt;
    ObservedRun run;
};

ToyInstance make_toy() {
    ToyInstance toy;
    toy.desc = parse_workflow_description(testsupport::demo_workflow(2, 1));
    toy.plan = build_plan(toy.desc);
    std::vector<double> r_ex;
    for (const auto& j : toy.plan.jobs) r_ex.push_back(j.r_ex);

    const std::vector<double> stamps = {0.0, 10.0, 20.0};
    toy.cache = ErrorCache("toy", SectionShape{2, 2}, {ErrorFunction::Sqd}, stamps);
    const double pasts[] = {4.0, 0.0, 6.0};
    const double futures[] = {9.0, 0.0, 11.0};
    for (std::size_t pos = 0; pos < stamps.size(); ++pos) {
        toy.cache.set_values(ErrorFunction::Sqd, pos, 1,
                             ErrorCache::Values{pasts[pos], futures[pos]});
        toy.cache.set_values(ErrorFunction::Sqd, pos, 2,
                             ErrorCache::Values{pasts[pos], std::nullopt});
    }
    for (double t : stamps) toy.sim.entries[t] = {SimResult{r_ex, 100, 4, 1}, ""};
    toy.filt = FilteredSet{stamps, stamps.size()};
    toy.run.t_curr = 0;
    toy.run.checkpoints = 1;
    toy.run.observed.assign(r_ex.begin(), r_ex.begin() + 3);
    return toy;
}

bool criterion_search_contract(std::string& detail) {
    const ToyInstance toy = make_toy();
    const std::vector<double>& stamps = toy.cache.fragment_timestamps();

    PredictorConfig narrow;
    narrow.primary_window = 2;
    narrow.secondary_span_ratio = 50;
    narrow.trigger_threshold = 0;

    // the uniquely best fragment is returned from every seed
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        PredictorConfig cfg;
        cfg.seed = seed;
        const PredictionOutcome outcome =
            predict(cfg, toy.cache, toy.filt, toy.plan, toy.run, toy.sim);
        if (outcome.t_target != 10.0) {
            detail = "seed " + std::to_string(seed) + " picked " +
                     format_double(outcome.t_target);
            return false;
        }
        if (std::find(stamps.begin(), stamps.end(), outcome.t_target) == stamps.end()) {
            detail = "target is not a cached fragment timestamp";
            return false;
        }
        if (outcome.iterations == 0 || outcome.iterations > cfg.max_iterations ||
            outcome.trajectory.size() != outcome.iterations) {
            detail = "iteration accounting off at seed " + std::to_string(seed);
            return false;
        }
    }

    // a hard iteration cap of one is respected even when the settle
    // tolerance could never trigger
    {
        PredictorConfig cfg = narrow;
        cfg.max_iterations = 1;
        cfg.precision = 1e-9;
        cfg.seed = 7;
        const PredictionOutcome outcome =
            predict(cfg, toy.cache, toy.filt, toy.plan, toy.run, toy.sim);
        if (outcome.iterations != 1) {
            detail = "iteration cap of 1 produced " + std::to_string(outcome.iterations);
            return false;
        }
    }

    // with a wide window the second target repeats the first, so the
    // settle rule stops the search well below the cap
    {
        PredictorConfig cfg;
        cfg.seed = 3;
        const PredictionOutcome outcome =
            predict(cfg, toy.cache, toy.filt, toy.plan, toy.run, toy.sim);
        if (outcome.iterations != 2 || outcome.t_target != 10.0) {
            detail = "settle rule did not stop after two iterations";
            return false;
        }
    }
    return true;
}

// Shared corpus for the study-level criteria.
struct StudyFixture {
    WorkflowDescription desc;
    EnactmentPlan plan;
    CloudModel cloud;
    TraceArchive archive{std::vector<TraceJob>{}};
    SimLog log;
    ErrorCache cache;
    StudyReport report;
    double build_seconds = 0;
    double study_seconds = 0;
};

int worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return int(std::clamp(hw, 2u, 8u));
}

StudyFixture build_study_fixture() {
    const auto start = std::chrono::steady_clock::now();
    StudyFixture f;
    f.desc = parse_workflow_description(testsupport::demo_workflow(3, 4));
    f.plan = build_plan(f.desc);
    // One shared 32-core host so every background VM competes for the same
    // cores. The corpus idles at troughs and overloads the host near each
    // crest, giving fragments genuinely different congestion levels.
    f.cloud = build_cloud(
        "PM count=1 cores=32 perf=1 mem=68719476736\n"
        "REPO name=store bandwidth=125000000 latency=0.001\n");

    SyntheticProfile profile;
    profile.n_jobs = 40000;
    profile.mean_runtime = 60;
    profile.burstiness = 1.0;
    profile.period = 12000;
    profile.mean_interarrival = 10;
    f.archive = generate_synthetic_corpus(1, profile);

    const double duration = 4000;
    std::vector<FragmentRef> refs = enumerate_fragments(f.archive, duration);
    std::vector<FragmentRef> strided;
    for (std::size_t i = 0; i < refs.size(); i += 12) strided.push_back(refs[i]);

    SimConfig cfg;
    cfg.seed = 1;
    cfg.warmup_jobs = 50;
    f.log = batch_simulate(f.desc, f.plan, f.cloud, strided, f.archive, cfg, worker_count());

    const auto shape = derive_shape(f.plan);
    f.cache = build_error_cache(f.plan, f.log, *shape, {ErrorFunction::Sqd}, "accept");
    f.build_seconds = seconds_since(start);

    const auto study_start = std::chrono::steady_clock::now();
    PredictorConfig pcfg; // recommended defaults: P=20, I=32, S=1000, ratio=50
    pcfg.absolute_future_match = true;
    StudyCorpus corpus{&f.plan, &f.log, &f.cache};
    f.report = golden_study(pcfg, 2, 50, corpus, 1, 0, worker_count());
    f.study_seconds = seconds_since(study_start);
    return f;
}

bool criterion_beats_random(const StudyFixture& f, std::string& detail) {
    if (f.log.entries.size() < 2000) {
        detail = "only " + std::to_string(f.log.entries.size()) + " fragments simulated";
        return false;
    }
    if (!f.report.baseline.has_value()) {
        detail = "study carries no baseline arm";
        return false;
    }
    if (f.report.aggregates.completed < 40 || f.report.baseline->completed < 40) {
        detail = "too many excluded runs";
        return false;
    }
    const double ours = f.report.aggregates.e_star.median;
    const double random_pick = f.report.baseline->e_star.median;
    const double total = f.build_seconds + f.study_seconds;
    if (total >= 1800.0) {
        detail = "took " + format_fixed(total, 1) + " s, bound is 1800 s";
        return false;
    }
    if (!(ours <= 0.9 * random_pick)) {
        detail = "median E*_MAPE " + format_fixed(ours, 4) + " vs random " +
                 format_fixed(random_pick, 4) + " misses the 0.9 margin";
        return false;
    }
    detail = "median E*_MAPE " + format_fixed(ours, 4) + " vs random " +
             format_fixed(random_pick, 4);
    return true;
}

bool criterion_correlation_ordering(const StudyFixture& f, std::string& detail) {
    const CorrelationPair corr =
        study_error_correlation(f.report, f.cache, ErrorFunction::Sqd);
    if (!(corr.past >= corr.future)) {
        detail = "R2 past " + format_fixed(corr.past, 4) + " < R2 future " +
                 format_fixed(corr.future, 4);
        return false;
    }
    detail = "R2 past " + format_fixed(corr.past, 4) + " vs future " +
             format_fixed(corr.future, 4);
    return true;
}

bool criterion_latency(const StudyFixture& f, std::string& detail) {
    for (const RunMetrics& run : f.report.runs) {
        if (!run.ok) continue;
        if (!(run.d_ms > 0) || !std::isfinite(run.d_ms)) {
            detail = "run " + std::to_string(run.run_id) + " reports no selection time";
            return false;
        }
    }

    const auto& stamps = f.cache.fragment_timestamps();
    const auto it = f.log.entries.find(stamps.front());
    if (it == f.log.entries.end() || !it->second.ok()) {
        detail = "first cached fragment has no simulated observations";
        return false;
    }
    ObservedRun run;
    run.t_curr = stamps.front();
    run.checkpoints = 2;
    const auto shape = derive_shape(f.plan);
    const std::size_t prefix = k_real(2, *shape);
    const std::vector<double>& obs = it->second.result->observed;
    run.observed.assign(obs.begin(), obs.begin() + std::ptrdiff_t(prefix));

    PredictorConfig cfg;
    cfg.seed = 11;
    FilteredSet filt{stamps, stamps.size()};
    const PredictionOutcome outcome = predict(cfg, f.cache, filt, f.plan, run, f.log);
    if (!(outcome.wall_seconds > 0) || outcome.wall_seconds > 5.0) {
        detail = "single selection took " + format_fixed(outcome.wall_seconds, 3) + " s";
        return false;
    }
    detail = "single selection took " + format_fixed(outcome.wall_seconds * 1000.0, 3) + " ms";
    return true;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> check;
    };

    StudyFixture fixture;
    bool fixture_ok = true;
    std::string fixture_error;
    try {
        fixture = build_study_fixture();
    } catch (const std::exception& e) {
        fixture_ok = false;
        fixture_error = e.what();
    }

    const std::vector<Criterion> criteria = {
        {"error functions match independent direct summations", criterion_error_oracles},
        {"checkpoint index mapping is exact", criterion_checkpoint_mapping},
        {"simulator conserves work and respects capacity", criterion_conservation},
        {"an idle dedicated cloud reproduces nominal times exactly", criterion_dedicated_identity},
        {"seeded pipeline reruns produce byte-identical artifacts", criterion_determinism},
        {"the search contract holds on a hand-checked instance", criterion_search_contract},
        {"the predictor beats random selection by the required margin",
         [&](std::string& d) { return fixture_ok && criterion_beats_random(fixture, d); }},
        {"past-error correlation dominates future-error correlation",
         [&](std::string& d) { return fixture_ok && criterion_correlation_ordering(fixture, d); }},
        {"selection latency stays in bound and is always reported",
         [&](std::string& d) { return fixture_ok && criterion_latency(fixture, d); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        bool pass = false;
        try {
            pass = criteria[i].check(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        if (!pass && detail.empty() && !fixture_ok)
            detail = "fixture build failed: " + fixture_error;
        std::printf("[%s] %zu. %s%s%s\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    detail.empty() ? "" : ": ", detail.c_str());
        if (!pass) ++failures;
    }
    std::printf("%d/9 criteria passed\n", int(criteria.size()) - failures);
    return failures;
}
