#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace backcast {

// One historic job on the archive timeline.
struct TraceJob {
    std::int64_t job_id = 0;
    double submit_time = 0; // seconds from archive origin
    double runtime = 0;     // seconds, > 0
    int cores = 1;          // >= 1

    bool operator==(const TraceJob&) const = default;
};

// A replayable window over the archive, identified by the submit time of
// the job that opens it.
struct FragmentRef {
    double t = 0;
    double duration = 0; // seconds, > 0

    bool operator==(const FragmentRef&) const = default;
};

// Normalised historic job stream: sorted by submit time, first job at 0.
class TraceArchive {
public:
    TraceArchive() = default;
    // `jobs` may arrive unsorted and on an arbitrary origin; the constructor
    // sorts and shifts them so the first submit time is 0.
    explicit TraceArchive(std::vector<TraceJob> jobs, std::size_t dropped_rows = 0);

    const std::vector<TraceJob>& jobs() const noexcept { return jobs_; }
    bool empty() const noexcept { return jobs_.empty(); }
    std::size_t size() const noexcept { return jobs_.size(); }

    // Seconds subtracted from every submit time during normalisation.
    double origin_shift() const noexcept { return origin_shift_; }
    // Malformed rows discarded while parsing.
    std::size_t dropped_rows() const noexcept { return dropped_rows_; }

    // Submit time of the last job plus its runtime; 0 when empty.
    double end_time() const noexcept;

    // Largest job submit time at or before `t`; clamps to the first job's
    // time when `t` precedes the archive. Errors when the archive is empty.
    double resolve_fragment_start(double t) const;

    bool operator==(const TraceArchive&) const = default;

private:
    std::vector<TraceJob> jobs_;
    double origin_shift_ = 0;
    std::size_t dropped_rows_ = 0;
};

// The timestamps that survived pre-filtering, plus the budget that was
// applied. Always a subset of the fragment starts it was drawn from.
struct FilteredSet {
    std::vector<double> timestamps; // ascending
    std::size_t budget = 0;

    bool operator==(const FilteredSet&) const = default;
};

// Parses whitespace-separated rows: job_id submit wait runtime cores.
// '#' and ';' start comment lines. Rows with non-positive runtime or core
// count are dropped and counted rather than rejected, matching how public
// workload archives flag cancelled jobs.
TraceArchive parse_trace(std::string_view text);

// Renders in the same row format; numbers keep exact round-trip precision.
std::string render_trace(const TraceArchive& archive);

// Joins archives end to end: archive i+1's origin lands at the last submit
// time of archive i plus `gap` seconds.
TraceArchive concat_archives(const std::vector<TraceArchive>& archives, double gap);

// One candidate fragment per job whose window [t, t+duration] still fits
// before the archive ends.
std::vector<FragmentRef> enumerate_fragments(const TraceArchive& archive, double duration);

// The jobs inside a fragment's window, re-based so the window opens at 0.
// The ref's timestamp must be an exact fragment start.
std::vector<TraceJob> fragment_jobs(const TraceArchive& archive, const FragmentRef& ref);

// Largest fragment count whose combined simulation time stays strictly
// under the prediction-time budget; never below 1.
std::size_t prefilter_budget(double prediction_budget_seconds, double mean_sim_seconds);

// Pluggable fragment pre-selection. Receives the full candidate list, the
// budget and a seed; returns the surviving timestamps.
using PrefilterStrategy = std::function<std::vector<double>(
    const std::vector<FragmentRef>&, std::size_t, std::uint64_t)>;

// Reduces the candidate list to at most `budget` timestamps. The default
// strategy is a seeded uniform draw without replacement.
FilteredSet prefilter(const std::vector<FragmentRef>& refs, std::size_t budget,
                      std::uint64_t seed, const PrefilterStrategy& strategy = {});

} // namespace backcast
