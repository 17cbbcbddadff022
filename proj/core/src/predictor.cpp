#include "backcast/predictor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "backcast/exceptions.hpp"
#include "backcast/rng.hpp"
#include "backcast/textio.hpp"

namespace backcast {

void PredictorConfig::validate() const {
    if (primary_window <= 0) throw DomainError("primary window must be positive");
    if (precision <= 0) throw DomainError("precision must be positive");
    if (max_iterations < 1) throw DomainError("iteration limit must be at least 1");
    if (max_evaluations < 1) throw DomainError("evaluation limit must be at least 1");
    if (secondary_span_ratio <= 0) throw DomainError("secondary span ratio must be positive");
    if (trigger_threshold < 0) throw DomainError("trigger threshold must be non-negative");
    if (time_budget <= 0) throw DomainError("time budget must be positive");
}

PredictDecision should_predict(double current_error, const PredictorConfig& cfg,
                               const EnactmentPlan& plan, const ObservedRun& run) {
    if (run.observed.size() > plan.total())
        throw ConsistencyError("observed run has more jobs than the plan");
    if (!(current_error > cfg.trigger_threshold)) return PredictDecision::BelowThreshold;
    double remaining = 0;
    for (std::size_t i = run.observed.size(); i < plan.total(); ++i)
        remaining += plan.jobs[i].r_ex;
    if (remaining < cfg.time_budget) return PredictDecision::InsufficientRemaining;
    return PredictDecision::Trigger;
}

double phi(double x, std::span<const double> window_stamps,
           const std::map<double, double>& simulated_errors, const ErrorCache& cache,
           double t_init, double S, std::size_t k, ErrorFunction fn) {
    const double half = S / 2;
    double sum = 0;
    for (double t : window_stamps) {
        if (!(t > t_init - half && t < t_init + half))
            throw DomainError("phi: window member " + format_double(t) +
                              " outside the primary window");
        auto it = simulated_errors.find(t);
        if (it == simulated_errors.end())
            throw DomainError("phi: no simulated error for window member " + format_double(t));
        const double shifted = x + t - t_init + half;
        sum += std::abs(it->second - cache.lookup(fn, shifted, k).past);
    }
    return sum;
}

namespace {

// First index with stamps[i] > bound.
std::size_t first_above(const std::vector<double>& stamps, double bound) {
    return static_cast<std::size_t>(
        std::distance(stamps.begin(), std::upper_bound(stamps.begin(), stamps.end(), bound)));
}

// First index with stamps[i] >= bound.
std::size_t first_at_or_above(const std::vector<double>& stamps, double bound) {
    return static_cast<std::size_t>(
        std::distance(stamps.begin(), std::lower_bound(stamps.begin(), stamps.end(), bound)));
}

} // namespace

PredictionOutcome predict(const PredictorConfig& cfg, const ErrorCache& cache,
                          const FilteredSet& t_filt, const EnactmentPlan& plan,
                          const ObservedRun& run, const SimLog& sim_log,
                          PredictorState* state_out) {
    cfg.validate();
    if (t_filt.timestamps.empty()) throw DomainError("prediction needs a non-empty filtered set");
    if (cache.empty()) throw DomainError("prediction needs a populated error cache");
    if (!cache.has_function(cfg.fn))
        throw LookupError("cache lacks error function " + std::string(to_string(cfg.fn)));
    const SectionShape shape = cache.shape();
    const std::size_t k = run.checkpoints;
    if (k < 1) throw DomainError("prediction needs at least one completed checkpoint");
    if (k >= shape.sections)
        throw DomainError("prediction needs an open future, checkpoint " + std::to_string(k) +
                          " is final");
    const std::size_t kr = k_real(k, shape);
    if (run.observed.size() < kr)
        throw ConsistencyError("run provides " + std::to_string(run.observed.size()) +
                               " observations but checkpoint " + std::to_string(k) + " needs " +
                               std::to_string(kr));
    if (plan.total() == 0) throw DomainError("prediction needs a non-empty plan");
    const std::span<const double> real_obs(run.observed.data(), kr);

    const std::vector<double>& stamps = cache.fragment_timestamps();
    const double S = cfg.primary_window;
    const double half = S / 2;

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    Rng rng(cfg.seed);
    PredictorState state;
    state.t_init = t_filt.timestamps[uniform_below(rng, t_filt.timestamps.size())];

    // E' values are pure per-fragment quantities; iterations share them
    std::map<double, double> simulated_errors;
    auto ensure_simulated_error = [&](double t) {
        if (simulated_errors.count(t)) return;
        auto it = sim_log.entries.find(t);
        if (it == sim_log.entries.end() || !it->second.ok())
            throw ConsistencyError("sim log has no successful entry at t=" + format_double(t));
        const auto& sim_obs = it->second.result->observed;
        if (sim_obs.size() < kr)
            throw ConsistencyError("sim log entry at t=" + format_double(t) +
                                   " covers too few jobs");
        simulated_errors[t] = simulated_error(
            cfg.fn, real_obs, std::span<const double>(sim_obs.data(), kr), kr);
    };

    std::unordered_set<double> visited;
    bool truncated = false;

    for (std::size_t n = 1; n <= cfg.max_iterations; ++n) {
        // primary window: cached stamps strictly inside (t_init +- S/2)
        const std::size_t wlo = first_above(stamps, state.t_init - half);
        const std::size_t whi = first_at_or_above(stamps, state.t_init + half);
        std::vector<double> window(stamps.begin() + static_cast<std::ptrdiff_t>(wlo),
                                   stamps.begin() + static_cast<std::ptrdiff_t>(whi));
        if (window.size() > cfg.max_evaluations)
            window = sample_without_replacement(std::span<const double>(window),
                                                cfg.max_evaluations, rng);
        for (double t : window) ensure_simulated_error(t);

        // secondary candidates: unvisited stamps within ratio*S of the anchor
        const double span_half = cfg.secondary_span_ratio * S / 2;
        const std::size_t slo = first_at_or_above(stamps, state.t_init - span_half);
        const std::size_t shi = first_above(stamps, state.t_init + span_half);
        std::vector<double> candidates;
        candidates.reserve(shi - slo);
        for (std::size_t i = slo; i < shi; ++i)
            if (!visited.count(stamps[i])) candidates.push_back(stamps[i]);
        if (candidates.empty()) break;
        std::vector<double> reduced =
            candidates.size() > cfg.max_evaluations
                ? sample_without_replacement(std::span<const double>(candidates),
                                             cfg.max_evaluations, rng)
                : std::move(candidates);

        // best-aligned offset; ascending scan keeps the smallest minimizer
        double best_phi = std::numeric_limits<double>::infinity();
        double t_min = reduced.front();
        for (double x : reduced) {
            const double value = phi(x, window, simulated_errors, cache, state.t_init, S, k, cfg.fn);
            if (value < best_phi) {
                best_phi = value;
                t_min = x;
            }
        }
        visited.insert(t_min);
        state.visited.push_back(t_min);

        // the fragment near t_min whose future error best matches its past
        const std::size_t flo = first_above(stamps, t_min - half);
        const std::size_t fhi = first_at_or_above(stamps, t_min + half);
        double best_match = std::numeric_limits<double>::infinity();
        double target = t_min;
        for (std::size_t pos = flo; pos < fhi; ++pos) {
            const auto& v = cache.at(cfg.fn, pos, k);
            if (!v.future)
                throw ConsistencyError("cache lacks future errors at checkpoint " +
                                       std::to_string(k));
            double match = *v.future - v.past;
            if (cfg.absolute_future_match) match = std::abs(match);
            if (match < best_match) {
                best_match = match;
                target = stamps[pos];
            }
        }
        state.targets.push_back(target);

        const std::size_t filled = state.targets.size();
        if (filled >= 2 &&
            std::abs(state.targets[filled - 1] - state.targets[filled - 2]) < cfg.precision)
            break;
        if (elapsed() > cfg.time_budget) {
            truncated = true;
            break;
        }

        // re-anchor on the filtered set member closest to the new target
        const auto& filt = t_filt.timestamps;
        const std::size_t at =
            static_cast<std::size_t>(std::distance(
                filt.begin(), std::lower_bound(filt.begin(), filt.end(), target)));
        if (at == 0) {
            state.t_init = filt.front();
        } else if (at == filt.size()) {
            state.t_init = filt.back();
        } else {
            const double below = filt[at - 1];
            const double above = filt[at];
            // a tie picks the earlier timestamp
            state.t_init = (target - below <= above - target) ? below : above;
        }
    }

    if (state.targets.empty())
        throw ConsistencyError("no cached fragments near the initial anchor; "
                               "the filtered set and the cache do not overlap");

    state.elapsed_seconds = elapsed();
    PredictionOutcome outcome;
    outcome.t_target = state.targets.back();
    outcome.iterations = state.targets.size();
    outcome.wall_seconds = state.elapsed_seconds;
    outcome.trajectory = state.targets;
    outcome.budget_truncated = truncated;
    if (state_out) *state_out = std::move(state);
    return outcome;
}

} // namespace backcast
