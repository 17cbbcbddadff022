#include "backcast/trace.hpp"

#include <algorithm>
#include <cmath>

#include "backcast/exceptions.hpp"
#include "backcast/rng.hpp"
#include "backcast/textio.hpp"

namespace backcast {

TraceArchive::TraceArchive(std::vector<TraceJob> jobs, std::size_t dropped_rows)
    : jobs_(std::move(jobs)), dropped_rows_(dropped_rows) {
    std::stable_sort(jobs_.begin(), jobs_.end(),
                     [](const TraceJob& a, const TraceJob& b) { return a.submit_time < b.submit_time; });
    if (!jobs_.empty()) {
        origin_shift_ = jobs_.front().submit_time;
        if (origin_shift_ != 0) {
            for (TraceJob& j : jobs_) j.submit_time -= origin_shift_;
        }
    }
}

double TraceArchive::end_time() const noexcept {
    if (jobs_.empty()) return 0;
    const TraceJob& last = jobs_.back();
    return last.submit_time + last.runtime;
}

double TraceArchive::resolve_fragment_start(double t) const {
    if (jobs_.empty()) throw DomainError("resolve_fragment_start: empty archive");
    auto it = std::upper_bound(jobs_.begin(), jobs_.end(), t,
                               [](double v, const TraceJob& j) { return v < j.submit_time; });
    if (it == jobs_.begin()) return jobs_.front().submit_time;
    return std::prev(it)->submit_time;
}

TraceArchive parse_trace(std::string_view text) {
    std::vector<TraceJob> jobs;
    std::size_t dropped = 0;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (is_comment_or_blank(line)) return;
        auto fields = split_fields(line);
        if (fields.size() < 5)
            throw ParseError(line_no, "expected at least 5 columns (job_id submit wait run procs)");
        auto id = parse_int(fields[0]);
        auto submit = parse_double(fields[1]);
        auto wait = parse_double(fields[2]); // parsed for validation only, unused
        auto run = parse_double(fields[3]);
        auto procs = parse_int(fields[4]);
        if (!id || !submit || !wait || !run || !procs)
            throw ParseError(line_no, "non-numeric field among the first 5 columns");
        if (*run <= 0 || *procs <= 0) {
            // archives mark cancelled/failed jobs with -1 runtimes; skip them
            ++dropped;
            return;
        }
        jobs.push_back(TraceJob{*id, *submit, *run, static_cast<int>(*procs)});
    });
    if (jobs.empty()) throw DomainError("trace contains no usable jobs");
    return TraceArchive(std::move(jobs), dropped);
}

std::string render_trace(const TraceArchive& archive) {
    std::string out;
    out.reserve(archive.size() * 24);
    for (const TraceJob& j : archive.jobs()) {
        out += std::to_string(j.job_id);
        out += ' ';
        out += format_double(j.submit_time);
        out += " 0 ";
        out += format_double(j.runtime);
        out += ' ';
        out += std::to_string(j.cores);
        out += '\n';
    }
    return out;
}

TraceArchive concat_archives(const std::vector<TraceArchive>& archives, double gap) {
    if (archives.empty()) throw DomainError("concat_archives: empty archive list");
    if (gap < 0) throw DomainError("concat_archives: negative gap");
    std::vector<TraceJob> all;
    std::size_t dropped = 0;
    double offset = 0;
    for (const TraceArchive& a : archives) {
        dropped += a.dropped_rows();
        if (a.empty()) continue;
        for (TraceJob j : a.jobs()) {
            j.submit_time += offset;
            all.push_back(j);
        }
        offset += a.jobs().back().submit_time + gap;
    }
    return TraceArchive(std::move(all), dropped);
}

std::vector<FragmentRef> enumerate_fragments(const TraceArchive& archive, double duration) {
    if (duration <= 0) throw DomainError("enumerate_fragments: duration must be positive");
    std::vector<FragmentRef> refs;
    const double end = archive.end_time();
    for (const TraceJob& j : archive.jobs()) {
        if (j.submit_time + duration <= end) refs.push_back(FragmentRef{j.submit_time, duration});
    }
    return refs;
}

std::vector<TraceJob> fragment_jobs(const TraceArchive& archive, const FragmentRef& ref) {
    if (ref.duration <= 0) throw DomainError("fragment_jobs: duration must be positive");
    const auto& jobs = archive.jobs();
    auto begin = std::lower_bound(jobs.begin(), jobs.end(), ref.t,
                                  [](const TraceJob& j, double v) { return j.submit_time < v; });
    if (begin == jobs.end() || begin->submit_time != ref.t)
        throw LookupError("fragment_jobs: no fragment starts at t=" + format_double(ref.t));
    std::vector<TraceJob> out;
    const double close = ref.t + ref.duration;
    for (auto it = begin; it != jobs.end() && it->submit_time <= close; ++it) {
        TraceJob j = *it;
        j.submit_time -= ref.t;
        out.push_back(j);
    }
    return out;
}

std::size_t prefilter_budget(double prediction_budget_seconds, double mean_sim_seconds) {
    if (prediction_budget_seconds <= 0 || mean_sim_seconds <= 0)
        throw DomainError("prefilter_budget: budget and mean simulation time must be positive");
    const double ratio = prediction_budget_seconds / mean_sim_seconds;
    double b = std::floor(ratio);
    if (b == ratio) b -= 1; // the cardinality bound is strict
    if (b < 1) return 1;
    return static_cast<std::size_t>(b);
}

FilteredSet prefilter(const std::vector<FragmentRef>& refs, std::size_t budget,
                      std::uint64_t seed, const PrefilterStrategy& strategy) {
    if (refs.empty()) throw DomainError("prefilter: empty fragment list");
    if (budget < 1) throw DomainError("prefilter: budget must be at least 1");
    FilteredSet out;
    out.budget = budget;
    if (strategy) {
        out.timestamps = strategy(refs, budget, seed);
        std::sort(out.timestamps.begin(), out.timestamps.end());
    } else {
        std::vector<double> stamps;
        stamps.reserve(refs.size());
        for (const FragmentRef& r : refs) stamps.push_back(r.t);
        Rng rng(seed);
        out.timestamps = sample_without_replacement(std::span<const double>(stamps), budget, rng);
    }
    return out;
}

} // namespace backcast
