#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "backcast/metrics.hpp"
#include "backcast/trace.hpp"
#include "backcast/workflow.hpp"

namespace backcast {

struct PredictorConfig {
    double primary_window = 1000;      // S: seconds the alignment window spans
    double precision = 1;              // Pi: target movement that counts as converged
    std::size_t max_iterations = 32;   // I
    std::size_t max_evaluations = 20;  // P: cap on simulated-error evaluations per window
    double secondary_span_ratio = 50;  // candidate span = ratio * S, centered on the anchor
    ErrorFunction fn = ErrorFunction::Sqd;
    double trigger_threshold = 0;      // E_epsilon; 0 makes every deviation significant
    double time_budget = 60;           // seconds of wall clock one prediction may take
    std::uint64_t seed = 0;
    // Minimize |F - E| instead of the signed F - E when picking the target
    // inside the final window.
    bool absolute_future_match = false;

    void validate() const;
};

// Working state of one prediction, exposed for inspection by tests and
// verbose tooling.
struct PredictorState {
    double t_init = 0;            // current anchor
    std::vector<double> visited;  // best-aligned timestamps, in visit order
    std::vector<double> targets;  // t_target after each iteration
    double elapsed_seconds = 0;
};

struct PredictionOutcome {
    double t_target = 0;
    std::size_t iterations = 0;
    double wall_seconds = 0; // d
    std::vector<double> trajectory; // t_target per iteration
    bool budget_truncated = false;
};

enum class PredictDecision { Trigger, BelowThreshold, InsufficientRemaining };

// A prediction runs only when the current deviation is significant and
// enough projected work remains to profit from it.
PredictDecision should_predict(double current_error, const PredictorConfig& cfg,
                               const EnactmentPlan& plan, const ObservedRun& run);

// Alignment cost of placing the cached past-error curve at offset x: the
// sum over the window members of |E'(t) - E(x + t - t_init + S/2)|, the
// cache read with floor semantics.
double phi(double x, std::span<const double> window_stamps,
           const std::map<double, double>& simulated_errors, const ErrorCache& cache,
           double t_init, double S, std::size_t k, ErrorFunction fn);

// Iterative fragment search: align simulated errors against cached past
// errors inside a window around the anchor, pick the best-aligned
// timestamp, choose the fragment with the best past/future match near it,
// and re-anchor until the target stops moving.
PredictionOutcome predict(const PredictorConfig& cfg, const ErrorCache& cache,
                          const FilteredSet& t_filt, const EnactmentPlan& plan,
                          const ObservedRun& run, const SimLog& sim_log,
                          PredictorState* state_out = nullptr);

} // namespace backcast
