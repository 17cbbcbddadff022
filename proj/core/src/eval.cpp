#include "backcast/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>
#include <utility>

#include "backcast/exceptions.hpp"
#include "backcast/rng.hpp"
#include "backcast/textio.hpp"

namespace backcast {

namespace {

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0;
    double sum = 0;
    for (double x : v) sum += x;
    return sum / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    if (v.size() % 2 == 1) return v[mid];
    return (v[mid - 1] + v[mid]) / 2.0;
}

// Study fragments must be exact cache members, not floor matches.
std::size_t exact_position(const ErrorCache& cache, double t) {
    const std::size_t pos = cache.floor_position(t);
    if (cache.fragment_timestamps()[pos] != t)
        throw LookupError("timestamp " + format_double(t) + " is not a cached fragment");
    return pos;
}

// One term of an error-curve percentage deviation. Identical values
// contribute nothing even when the golden value is zero; a genuine
// deviation from a zero golden value has no defined percentage.
double percentage_term(double golden, double target, std::size_t checkpoint) {
    const double diff = std::fabs(golden - target);
    if (diff == 0) return 0;
    if (golden <= 0)
        throw DomainError("golden error is zero at checkpoint " + std::to_string(checkpoint) +
                          ", percentage deviation undefined");
    return diff / golden;
}

Aggregate summarize(const std::vector<double>& v) {
    return {mean_of(v), median_of(v), v.size()};
}

AggregateSet aggregate_runs(const std::vector<RunMetrics>& runs) {
    std::vector<double> e, f, me, mf, d;
    AggregateSet out;
    for (const RunMetrics& r : runs) {
        if (!r.ok) {
            ++out.excluded;
            continue;
        }
        e.push_back(r.e_star);
        f.push_back(r.f_star);
        if (r.mape_e) me.push_back(*r.mape_e);
        if (r.mape_f) mf.push_back(*r.mape_f);
        d.push_back(r.d_ms);
    }
    out.completed = e.size();
    out.e_star = summarize(e);
    out.f_star = summarize(f);
    out.mape_e = summarize(me);
    out.mape_f = summarize(mf);
    out.d_ms = summarize(d);
    return out;
}

} // namespace

TraceArchive generate_synthetic_corpus(std::uint64_t seed, const SyntheticProfile& profile) {
    if (profile.n_jobs == 0) throw DomainError("synthetic corpus needs at least one job");
    if (!(profile.mean_runtime > 0)) throw DomainError("mean_runtime must be positive");
    if (!(profile.mean_interarrival > 0)) throw DomainError("mean_interarrival must be positive");
    if (!(profile.period > 0)) throw DomainError("period must be positive");
    if (profile.burstiness < 0 || profile.burstiness > 1)
        throw DomainError("burstiness must lie in [0, 1]");
    if (profile.max_cores < 1) throw DomainError("max_cores must be at least 1");

    Rng rng(seed);
    const double base_rate = 1.0 / profile.mean_interarrival;
    const double peak_rate = base_rate * (1.0 + profile.burstiness);

    // Thinned arrival process: candidates arrive at the peak rate and are
    // kept with probability rate(t) / peak_rate. Time advances in whole
    // milliseconds so every submit stamp survives text round-trips as an
    // exact lookup key; the first kept arrival is shifted to 0 in integer
    // milliseconds for the same reason.
    std::vector<TraceJob> jobs;
    jobs.reserve(profile.n_jobs);
    long long t_ms = 0;
    long long first_ms = -1;
    for (std::size_t i = 0; i < profile.n_jobs; ++i) {
        for (;;) {
            const double dt = exponential(rng, 1.0 / peak_rate);
            t_ms += std::max<long long>(1, std::llround(dt * 1000.0));
            const double t = static_cast<double>(t_ms) / 1000.0;
            const double rate =
                base_rate * (1.0 + profile.burstiness *
                                       std::sin(2.0 * std::numbers::pi * t / profile.period));
            if (uniform_unit(rng) * peak_rate <= rate) break;
        }
        if (first_ms < 0) first_ms = t_ms;
        TraceJob job;
        job.job_id = static_cast<std::int64_t>(i) + 1;
        job.submit_time = static_cast<double>(t_ms - first_ms) / 1000.0;
        const long long run_ms =
            std::max<long long>(1, std::llround(exponential(rng, profile.mean_runtime) * 1000.0));
        job.runtime = static_cast<double>(run_ms) / 1000.0;
        job.cores =
            1 + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(profile.max_cores)));
        jobs.push_back(job);
    }
    return TraceArchive(std::move(jobs));
}

double e_star_mape(std::span<const double> golden_obs, std::span<const double> target_obs) {
    if (golden_obs.empty()) throw DomainError("no observations to compare");
    if (golden_obs.size() != target_obs.size())
        throw DomainError("golden and target observation counts differ");
    return error_value(ErrorFunction::Mape, golden_obs, target_obs, golden_obs.size());
}

double f_star_mape(std::span<const double> golden_obs, std::span<const double> target_obs,
                   std::size_t completed_jobs) {
    if (golden_obs.size() != target_obs.size())
        throw DomainError("golden and target observation counts differ");
    return future_error(ErrorFunction::Mape, golden_obs, target_obs, completed_jobs,
                        golden_obs.size());
}

double mape_past_errors(const ErrorCache& cache, ErrorFunction fn, double t_g, double t_target,
                        std::size_t checkpoints) {
    if (checkpoints == 0) throw DomainError("checkpoint count must be positive");
    if (checkpoints > cache.shape().sections)
        throw DomainError("checkpoint count exceeds the cached sections");
    const std::size_t pos_g = exact_position(cache, t_g);
    const std::size_t pos_t = exact_position(cache, t_target);
    double sum = 0;
    for (std::size_t i = 1; i <= checkpoints; ++i) {
        const ErrorCache::Values& g = cache.at(fn, pos_g, i);
        const ErrorCache::Values& t = cache.at(fn, pos_t, i);
        sum += percentage_term(g.past, t.past, i);
    }
    return sum * 100.0 / static_cast<double>(checkpoints);
}

double mape_future_errors(const ErrorCache& cache, ErrorFunction fn, double t_g, double t_target,
                          std::size_t checkpoints) {
    if (checkpoints < 3)
        throw DomainError("future-curve deviation needs at least 3 checkpoints");
    if (checkpoints > cache.shape().sections)
        throw DomainError("checkpoint count exceeds the cached sections");
    const std::size_t pos_g = exact_position(cache, t_g);
    const std::size_t pos_t = exact_position(cache, t_target);
    double sum = 0;
    for (std::size_t i = 2; i + 1 <= checkpoints; ++i) {
        const ErrorCache::Values& g = cache.at(fn, pos_g, i);
        const ErrorCache::Values& t = cache.at(fn, pos_t, i);
        if (!g.future || !t.future)
            throw ConsistencyError("no future error cached at checkpoint " + std::to_string(i));
        sum += percentage_term(*g.future, *t.future, i);
    }
    return sum * 100.0 / static_cast<double>(checkpoints - 2);
}

double r_squared(std::span<const double> golden_values, std::span<const double> predicted_values) {
    if (golden_values.size() != predicted_values.size())
        throw DomainError("series lengths differ");
    if (golden_values.size() < 2)
        throw DomainError("coefficient of determination needs at least two points");
    const double mean = [&] {
        double s = 0;
        for (double g : golden_values) s += g;
        return s / static_cast<double>(golden_values.size());
    }();
    double ss_tot = 0, ss_res = 0;
    for (std::size_t i = 0; i < golden_values.size(); ++i) {
        const double c = golden_values[i] - mean;
        const double r = golden_values[i] - predicted_values[i];
        ss_tot += c * c;
        ss_res += r * r;
    }
    if (!(ss_tot > 0)) throw DomainError("golden series has zero variance");
    return 1.0 - ss_res / ss_tot;
}

std::optional<double> past_future_relation(const ErrorCache& cache, ErrorFunction fn,
                                           std::size_t k, double tau, std::size_t window) {
    if (window == 0) throw DomainError("window must be at least 1");
    if (!(tau > 0)) throw DomainError("tau must be positive");
    if (k == 0 || k >= cache.shape().sections)
        throw DomainError("checkpoint must keep future errors defined (1 <= k < sections)");
    const std::size_t n = cache.fragment_timestamps().size();
    std::size_t qualifying = 0;
    std::size_t fully_below = 0;
    std::size_t run_len = 0;
    bool run_all_both = true;
    const auto flush = [&] {
        if (run_len >= window) {
            ++qualifying;
            if (run_all_both) ++fully_below;
        }
        run_len = 0;
        run_all_both = true;
    };
    for (std::size_t pos = 0; pos < n; ++pos) {
        const ErrorCache::Values& v = cache.at(fn, pos, k);
        const bool low_future = v.future.has_value() && *v.future < tau;
        if (!(v.past < tau || low_future)) {
            flush();
            continue;
        }
        ++run_len;
        if (!(v.past < tau && low_future)) run_all_both = false;
    }
    flush();
    if (qualifying == 0) return std::nullopt;
    return static_cast<double>(fully_below) / static_cast<double>(qualifying);
}

StudyReport run_study(const TargetSelector& selector, ErrorFunction fn, std::size_t k,
                      std::size_t n_runs, const StudyCorpus& corpus, std::uint64_t seed,
                      int parallelism) {
    if (!selector) throw DomainError("study needs a target selector");
    if (corpus.plan == nullptr || corpus.sim_log == nullptr || corpus.cache == nullptr)
        throw DomainError("study corpus is incomplete");
    if (n_runs == 0) throw DomainError("study needs at least one run");
    const ErrorCache& cache = *corpus.cache;
    if (cache.empty()) throw DomainError("error cache holds no fragments");
    if (!cache.has_function(fn))
        throw DomainError("error cache does not hold " + std::string(to_string(fn)));
    const SectionShape shape = cache.shape();
    if (k == 0 || k >= shape.sections)
        throw DomainError("prediction checkpoint must leave at least one section unobserved");
    const std::size_t completed_jobs = k_real(k, shape);
    const std::vector<double>& stamps = cache.fragment_timestamps();

    // Per-run seeds are drawn up front and the golden fragment is each
    // run's first draw, so two studies under the same seed pair up run for
    // run regardless of selector or parallelism.
    Rng master(seed);
    std::vector<std::uint64_t> run_seeds(n_runs);
    for (std::uint64_t& s : run_seeds) s = master();

    StudyReport report;
    report.k = k;
    report.seed = seed;
    report.runs.resize(n_runs);

    const auto one_run = [&](std::size_t i) {
        RunMetrics m;
        m.run_id = i + 1;
        m.k = k;
        Rng rng(run_seeds[i]);
        try {
            const double t_g = stamps[uniform_below(rng, stamps.size())];
            m.t_g = t_g;
            const auto golden_it = corpus.sim_log->entries.find(t_g);
            if (golden_it == corpus.sim_log->entries.end() || !golden_it->second.ok())
                throw ConsistencyError("no simulated observations for golden fragment " +
                                       format_double(t_g));
            const std::vector<double>& golden_obs = golden_it->second.result->observed;
            if (golden_obs.size() < completed_jobs)
                throw ConsistencyError("golden fragment " + format_double(t_g) +
                                       " has fewer observations than the checkpoint needs");
            ObservedRun run;
            run.t_curr = t_g;
            run.checkpoints = k;
            run.observed.assign(golden_obs.begin(),
                                golden_obs.begin() + static_cast<std::ptrdiff_t>(completed_jobs));
            const double t_target = selector(i, t_g, run, rng, m);
            m.t_target = t_target;
            const auto target_it = corpus.sim_log->entries.find(t_target);
            if (target_it == corpus.sim_log->entries.end() || !target_it->second.ok())
                throw ConsistencyError("no simulated observations for target fragment " +
                                       format_double(t_target));
            const std::vector<double>& target_obs = target_it->second.result->observed;
            m.e_star = e_star_mape(golden_obs, target_obs);
            m.f_star = f_star_mape(golden_obs, target_obs, completed_jobs);
            // The curve deviations have a partial domain; where a zero
            // golden checkpoint error leaves no percentage form the run
            // stays, with the affected metric absent.
            try {
                m.mape_e = mape_past_errors(cache, fn, t_g, t_target, shape.sections);
            } catch (const DomainError&) {
            }
            try {
                m.mape_f = mape_future_errors(cache, fn, t_g, t_target, shape.sections);
            } catch (const DomainError&) {
            }
        } catch (const std::exception& ex) {
            m.ok = false;
            m.failure = ex.what();
        }
        report.runs[i] = std::move(m);
    };

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, parallelism)), n_runs);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_runs; ++i) one_run(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= n_runs) return;
                    one_run(i);
                }
            });
        for (std::thread& t : pool) t.join();
    }

    report.aggregates = aggregate_runs(report.runs);
    return report;
}

StudyReport golden_study(const PredictorConfig& cfg, std::size_t k, std::size_t n_runs,
                         const StudyCorpus& corpus, std::uint64_t seed,
                         std::size_t tfilt_budget, int parallelism) {
    cfg.validate();
    const TargetSelector selector = [&cfg, &corpus, tfilt_budget](std::size_t, double,
                                                                  const ObservedRun& run, Rng& rng,
                                                                  RunMetrics& m) {
        const std::vector<double>& stamps = corpus.cache->fragment_timestamps();
        FilteredSet t_filt;
        if (tfilt_budget == 0 || tfilt_budget >= stamps.size()) {
            t_filt.timestamps = stamps;
            t_filt.budget = stamps.size();
        } else {
            t_filt.timestamps =
                sample_without_replacement(std::span<const double>(stamps), tfilt_budget, rng);
            t_filt.budget = tfilt_budget;
        }
        PredictorConfig run_cfg = cfg;
        run_cfg.seed = rng();
        const PredictionOutcome outcome =
            predict(run_cfg, *corpus.cache, t_filt, *corpus.plan, run, *corpus.sim_log);
        m.iterations = outcome.iterations;
        m.d_ms = outcome.wall_seconds * 1000.0;
        return outcome.t_target;
    };
    StudyReport report = run_study(selector, cfg.fn, k, n_runs, corpus, seed, parallelism);
    report.config = cfg;

    StudyReport base = random_baseline(cfg.fn, k, n_runs, corpus, seed);
    report.baseline_runs = std::move(base.runs);
    report.baseline = base.aggregates;
    return report;
}

StudyReport random_baseline(ErrorFunction fn, std::size_t k, std::size_t n_runs,
                            const StudyCorpus& corpus, std::uint64_t seed) {
    const TargetSelector selector = [&corpus](std::size_t, double, const ObservedRun&, Rng& rng,
                                              RunMetrics& m) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<double>& stamps = corpus.cache->fragment_timestamps();
        const double pick = stamps[uniform_below(rng, stamps.size())];
        m.d_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
        return pick;
    };
    return run_study(selector, fn, k, n_runs, corpus, seed, 1);
}

CorrelationPair study_error_correlation(const StudyReport& report, const ErrorCache& cache,
                                        ErrorFunction fn) {
    if (report.k == 0 || report.k >= cache.shape().sections)
        throw DomainError("correlation needs a checkpoint with future errors");
    std::vector<double> g_past, p_past, g_future, p_future;
    for (const RunMetrics& r : report.runs) {
        if (!r.ok) continue;
        const ErrorCache::Values& g = cache.at(fn, exact_position(cache, r.t_g), report.k);
        const ErrorCache::Values& p = cache.at(fn, exact_position(cache, r.t_target), report.k);
        if (!g.future || !p.future)
            throw ConsistencyError("future error missing at checkpoint " +
                                   std::to_string(report.k));
        g_past.push_back(g.past);
        p_past.push_back(p.past);
        g_future.push_back(*g.future);
        p_future.push_back(*p.future);
    }
    CorrelationPair out;
    out.past = r_squared(g_past, p_past);
    out.future = r_squared(g_future, p_future);
    return out;
}

std::string render_study_csv(const StudyReport& report) {
    std::string out = "run_id, t_g, t_target, k, E_star, F_star, MAPE_E, MAPE_F, d_ms\n";
    for (const RunMetrics& r : report.runs) {
        if (!r.ok) continue;
        out += std::to_string(r.run_id);
        out += ',';
        out += format_double(r.t_g);
        out += ',';
        out += format_double(r.t_target);
        out += ',';
        out += std::to_string(r.k);
        out += ',';
        out += format_sig(r.e_star, 9);
        out += ',';
        out += format_sig(r.f_star, 9);
        out += ',';
        if (r.mape_e) out += format_sig(*r.mape_e, 9);
        out += ',';
        if (r.mape_f) out += format_sig(*r.mape_f, 9);
        out += ',';
        out += format_fixed(r.d_ms, 3);
        out += '\n';
    }
    return out;
}

namespace {

void table_row(std::string& out, const char* name, const Aggregate& a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-8s avg %14.4f   median %14.4f\n", name, a.average,
                  a.median);
    out += buf;
}

void table_block(std::string& out, const AggregateSet& a) {
    table_row(out, "E*_MAPE", a.e_star);
    table_row(out, "F*_MAPE", a.f_star);
    table_row(out, "MAPE_E", a.mape_e);
    table_row(out, "MAPE_F", a.mape_f);
    table_row(out, "d_ms", a.d_ms);
    if (a.mape_e.count < a.completed || a.mape_f.count < a.completed)
        out += "  curve deviations defined on " + std::to_string(a.mape_e.count) + "/" +
               std::to_string(a.mape_f.count) + " of " + std::to_string(a.completed) +
               " runs\n";
}

} // namespace

std::string render_study_table(const StudyReport& report) {
    std::string out;
    out += "study: " + std::to_string(report.runs.size()) + " runs at checkpoint k=" +
           std::to_string(report.k) + " (completed " + std::to_string(report.aggregates.completed) +
           ", excluded " + std::to_string(report.aggregates.excluded) + ")\n";
    table_block(out, report.aggregates);
    if (report.baseline) {
        out += "baseline: random selection (completed " + std::to_string(report.baseline->completed) +
               ", excluded " + std::to_string(report.baseline->excluded) + ")\n";
        table_block(out, *report.baseline);
    }
    if (report.config) {
        const PredictorConfig& c = *report.config;
        out += "config: S=" + format_double(c.primary_window) +
               " P=" + std::to_string(c.max_evaluations) +
               " I=" + std::to_string(c.max_iterations) +
               " ratio=" + format_double(c.secondary_span_ratio) + " fn=" +
               std::string(to_string(c.fn)) + " precision=" + format_double(c.precision) +
               " seed=" + std::to_string(report.seed) + "\n";
    }
    return out;
}

std::vector<SweepRow> parameter_sweep(const PredictorConfig& base, const SweepGrid& grid,
                                      std::size_t k, std::size_t n_runs_per_cell,
                                      const StudyCorpus& corpus, std::uint64_t seed,
                                      std::size_t tfilt_budget, int parallelism) {
    if (grid.evaluations.empty() || grid.windows.empty() || grid.iterations.empty() ||
        grid.ratios.empty() || grid.fns.empty())
        throw DomainError("every sweep dimension needs at least one value");
    std::vector<SweepRow> rows;
    rows.reserve(grid.evaluations.size() * grid.windows.size() * grid.iterations.size() *
                 grid.ratios.size() * grid.fns.size());
    std::uint64_t cell = 0;
    for (std::size_t p : grid.evaluations)
        for (double s : grid.windows)
            for (std::size_t iters : grid.iterations)
                for (double ratio : grid.ratios)
                    for (ErrorFunction fn : grid.fns) {
                        SweepRow row;
                        row.config = base;
                        row.config.max_evaluations = p;
                        row.config.primary_window = s;
                        row.config.max_iterations = iters;
                        row.config.secondary_span_ratio = ratio;
                        row.config.fn = fn;
                        // cell 0 reproduces a plain study under `seed`
                        const std::uint64_t cell_seed = seed + cell;
                        ++cell;
                        try {
                            row.report = golden_study(row.config, k, n_runs_per_cell, corpus,
                                                      cell_seed, tfilt_budget, parallelism);
                        } catch (const std::exception& ex) {
                            row.ok = false;
                            row.failure = ex.what();
                        }
                        rows.push_back(std::move(row));
                    }
    return rows;
}

} // namespace backcast
