#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "backcast/cloudsim.hpp"
#include "backcast/metrics.hpp"
#include "backcast/predictor.hpp"
#include "backcast/rng.hpp"
#include "backcast/trace.hpp"
#include "backcast/workflow.hpp"

namespace backcast {

// Knobs of the deterministic stand-in workload used where no real archive
// is at hand. Arrival intensity swings sinusoidally so different fragments
// carry genuinely different background pressure.
struct SyntheticProfile {
    std::size_t n_jobs = 20000;
    double mean_runtime = 300;     // seconds
    double burstiness = 0.8;       // 0..1 swing of the arrival rate
    double period = 20000;         // seconds per load cycle
    double mean_interarrival = 20; // seconds at the average rate
    int max_cores = 4;
};

// Sinusoidally modulated arrival process with exponential runtimes, all
// times rounded to milliseconds so rendered artifacts reparse exactly.
TraceArchive generate_synthetic_corpus(std::uint64_t seed, const SyntheticProfile& profile);

// Immutable inputs a study works over. Studies never simulate; they read
// previously batch-simulated observations and the error cache built from
// them.
struct StudyCorpus {
    const EnactmentPlan* plan = nullptr;
    const SimLog* sim_log = nullptr;
    const ErrorCache* cache = nullptr;
};

struct RunMetrics {
    std::size_t run_id = 0;
    double t_g = 0;      // golden fragment
    double t_target = 0; // what the selector produced
    std::size_t k = 0;
    double e_star = 0; // observation-level percentage error over all jobs
    double f_star = 0; // same over the not-yet-run suffix
    // Error-curve percentage deviations. Unset when undefined for this
    // pair of fragments: a deviation from a zero golden checkpoint error
    // has no percentage form.
    std::optional<double> mape_e;
    std::optional<double> mape_f;
    double d_ms = 0; // selection wall time
    std::size_t iterations = 0;
    bool ok = true;
    std::string failure;
};

struct Aggregate {
    double average = 0;
    double median = 0;
    std::size_t count = 0; // runs the metric was defined on
};

struct AggregateSet {
    Aggregate e_star, f_star, mape_e, mape_f, d_ms;
    std::size_t completed = 0;
    std::size_t excluded = 0; // runs whose selection or scoring failed
};

struct StudyReport {
    std::vector<RunMetrics> runs; // main arm, one slot per requested run
    AggregateSet aggregates;      // over the completed main-arm runs only
    // Random-selection comparison arm, paired run for run with the main
    // arm (same golden fragments). Present only when a study requested it.
    std::vector<RunMetrics> baseline_runs;
    std::optional<AggregateSet> baseline;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::optional<PredictorConfig> config; // echo for predictor-driven arms
};

// Percentage deviation of the target run's observations from the golden
// run's, over all jobs (the golden observations act as projections).
double e_star_mape(std::span<const double> golden_obs, std::span<const double> target_obs);

// The same over the suffix after job index `completed_jobs`.
double f_star_mape(std::span<const double> golden_obs, std::span<const double> target_obs,
                   std::size_t completed_jobs);

// Mean percentage deviation between the two fragments' cached past-error
// curves over checkpoints 1..checkpoints. A zero golden error with a
// nonzero deviation at any checkpoint raises a division-domain error.
double mape_past_errors(const ErrorCache& cache, ErrorFunction fn, double t_g, double t_target,
                        std::size_t checkpoints);

// Same for future errors over the interior checkpoints 2..checkpoints-1.
double mape_future_errors(const ErrorCache& cache, ErrorFunction fn, double t_g, double t_target,
                          std::size_t checkpoints);

double r_squared(std::span<const double> golden_values, std::span<const double> predicted_values);

// Among maximal stretches of >= window consecutive cached timestamps whose
// past OR future error at k stays below tau, the fraction whose members
// all have BOTH below tau. Absent when no stretch qualifies.
std::optional<double> past_future_relation(const ErrorCache& cache, ErrorFunction fn,
                                           std::size_t k, double tau, std::size_t window);

// How a study picks the target for one golden fragment. Receives the
// run's private random stream and may fill d_ms / iterations in `metrics`.
using TargetSelector = std::function<double(std::size_t run_index, double t_g,
                                            const ObservedRun& run, Rng& rng,
                                            RunMetrics& metrics)>;

// Shared study engine: samples a golden fragment per run, hands the
// selector the golden's observation prefix, computes the four accuracy
// metrics against the golden and aggregates them. Predictor and baseline
// arms differ only in the selector, so their metric code paths are
// identical by construction.
StudyReport run_study(const TargetSelector& selector, ErrorFunction fn, std::size_t k,
                      std::size_t n_runs, const StudyCorpus& corpus, std::uint64_t seed,
                      int parallelism = 1);

// Predictor arm plus paired random baseline. Each run pre-filters its own
// candidate set (at most tfilt_budget stamps; 0 keeps them all).
StudyReport golden_study(const PredictorConfig& cfg, std::size_t k, std::size_t n_runs,
                         const StudyCorpus& corpus, std::uint64_t seed,
                         std::size_t tfilt_budget = 0, int parallelism = 1);

// Standalone baseline arm: the target is a uniformly random cached
// fragment. Shares golden fragments with a predictor study run under the
// same seed.
StudyReport random_baseline(ErrorFunction fn, std::size_t k, std::size_t n_runs,
                            const StudyCorpus& corpus, std::uint64_t seed);

// R-squared between the golden and target cached error values at the
// report's checkpoint, across completed main-arm runs, for past and
// future errors separately.
struct CorrelationPair {
    double past = 0;
    double future = 0;
};
CorrelationPair study_error_correlation(const StudyReport& report, const ErrorCache& cache,
                                        ErrorFunction fn);

// Machine-readable per-run rows over the completed main-arm runs.
std::string render_study_csv(const StudyReport& report);

// Human-readable aggregate table, baseline arm included when present.
std::string render_study_table(const StudyReport& report);

// One predictor study per cell of the parameter grid.
struct SweepGrid {
    std::vector<std::size_t> evaluations; // P values
    std::vector<double> windows;          // S values
    std::vector<std::size_t> iterations;  // I values
    std::vector<double> ratios;           // secondary span ratios
    std::vector<ErrorFunction> fns;
};

struct SweepRow {
    PredictorConfig config;
    StudyReport report;
    bool ok = true;
    std::string failure;
};

std::vector<SweepRow> parameter_sweep(const PredictorConfig& base, const SweepGrid& grid,
                                      std::size_t k, std::size_t n_runs_per_cell,
                                      const StudyCorpus& corpus, std::uint64_t seed,
                                      std::size_t tfilt_budget = 0, int parallelism = 1);

} // namespace backcast
