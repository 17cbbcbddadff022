#include "backcast/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "backcast/exceptions.hpp"
#include "backcast/textio.hpp"

namespace backcast {

std::string_view to_string(ErrorFunction fn) {
    switch (fn) {
    case ErrorFunction::Sqd: return "SQD";
    case ErrorFunction::Mape: return "MAPE";
    case ErrorFunction::TadjSqd: return "TADJ_SQD";
    }
    return "?";
}

std::optional<ErrorFunction> error_function_from_string(std::string_view name) {
    if (name == "SQD") return ErrorFunction::Sqd;
    if (name == "MAPE") return ErrorFunction::Mape;
    if (name == "TADJ_SQD") return ErrorFunction::TadjSqd;
    return std::nullopt;
}

double error_value(ErrorFunction fn, std::span<const double> r_ex, std::span<const double> r_ob,
                   std::size_t k) {
    if (k == 0) throw DomainError("error value needs k >= 1");
    if (r_ex.size() < k || r_ob.size() < k)
        throw DomainError("error value: sequences shorter than k=" + std::to_string(k));
    switch (fn) {
    case ErrorFunction::Sqd: {
        double sum = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double d = r_ex[i] - r_ob[i];
            sum += d * d;
        }
        return std::sqrt(sum / static_cast<double>(k));
    }
    case ErrorFunction::Mape: {
        double sum = 0;
        for (std::size_t i = 0; i < k; ++i) {
            if (r_ex[i] <= 0)
                throw DomainError("percentage error needs positive projections");
            sum += std::abs(r_ex[i] - r_ob[i]) / r_ex[i];
        }
        return 100.0 * sum / static_cast<double>(k);
    }
    case ErrorFunction::TadjSqd: {
        // weights i/k discount jobs that finished long ago; the divisor is
        // the literal weight sum, not its closed form
        double num = 0, den = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = static_cast<double>(i + 1) / static_cast<double>(k);
            const double d = r_ex[i] - r_ob[i];
            num += w * d * d;
            den += w;
        }
        return std::sqrt(num / den);
    }
    }
    throw DomainError("unknown error function");
}

double future_error(ErrorFunction fn, std::span<const double> r_ex, std::span<const double> r_ob,
                    std::size_t k, std::size_t n) {
    if (n == 0) throw DomainError("future error needs n >= 1");
    if (k >= n) throw DomainError("future error undefined once all jobs completed (k >= N)");
    if (r_ex.size() < n || r_ob.size() < n)
        throw DomainError("future error: sequences shorter than N=" + std::to_string(n));
    return error_value(fn, r_ex.subspan(k, n - k), r_ob.subspan(k, n - k), n - k);
}

double simulated_error(ErrorFunction fn, std::span<const double> r_ob_real,
                       std::span<const double> r_ob_sim, std::size_t k) {
    return error_value(fn, r_ob_real, r_ob_sim, k);
}

ErrorCache::ErrorCache(std::string workflow_id, SectionShape shape, std::vector<ErrorFunction> fns,
                       std::vector<double> stamps)
    : workflow_id_(std::move(workflow_id)), shape_(shape), stamps_(std::move(stamps)) {
    if (workflow_id_.empty() ||
        workflow_id_.find_first_of(" \t\r\n") != std::string::npos)
        throw DomainError("workflow id must be a non-empty token without whitespace");
    if (shape_.sections < 1 || shape_.jobs_per_section < 1)
        throw DomainError("cache shape counts must be at least 1");
    if (fns.empty()) throw DomainError("cache needs at least one error function");
    if (!std::is_sorted(stamps_.begin(), stamps_.end()))
        throw DomainError("cache timestamps must be ascending");
    if (std::adjacent_find(stamps_.begin(), stamps_.end()) != stamps_.end())
        throw DomainError("cache timestamps must be unique");
    // canonical function order keeps renderings comparable
    for (ErrorFunction fn : kAllErrorFunctions)
        if (std::find(fns.begin(), fns.end(), fn) != fns.end()) fns_.push_back(fn);
    values_.assign(fns_.size(),
                   std::vector<std::vector<Values>>(
                       shape_.sections, std::vector<Values>(stamps_.size())));
}

bool ErrorCache::has_function(ErrorFunction fn) const noexcept {
    return std::find(fns_.begin(), fns_.end(), fn) != fns_.end();
}

void ErrorCache::set_low_error_limit(ErrorFunction fn, double tau) {
    if (tau <= 0) throw DomainError("low-error limit must be positive");
    low_error_limits_[fn] = tau;
}

std::optional<double> ErrorCache::low_error_limit(ErrorFunction fn) const {
    auto it = low_error_limits_.find(fn);
    if (it == low_error_limits_.end()) return std::nullopt;
    return it->second;
}

std::size_t ErrorCache::function_slot(ErrorFunction fn) const {
    for (std::size_t i = 0; i < fns_.size(); ++i)
        if (fns_[i] == fn) return i;
    throw LookupError("error function " + std::string(to_string(fn)) + " not cached");
}

void ErrorCache::set_values(ErrorFunction fn, std::size_t position, std::size_t k, Values v) {
    if (k < 1 || k > shape_.sections)
        throw LookupError("checkpoint " + std::to_string(k) + " outside the cache shape");
    if (position >= stamps_.size()) throw DomainError("cache position out of range");
    values_[function_slot(fn)][k - 1][position] = v;
}

const ErrorCache::Values& ErrorCache::at(ErrorFunction fn, std::size_t position,
                                         std::size_t k) const {
    if (k < 1 || k > shape_.sections)
        throw LookupError("checkpoint " + std::to_string(k) + " outside the cache shape");
    if (position >= stamps_.size()) throw DomainError("cache position out of range");
    return values_[function_slot(fn)][k - 1][position];
}

std::size_t ErrorCache::floor_position(double t_query) const {
    if (stamps_.empty()) throw DomainError("empty cache has no positions");
    auto it = std::upper_bound(stamps_.begin(), stamps_.end(), t_query);
    if (it == stamps_.begin()) return 0; // clamp to the first fragment
    return static_cast<std::size_t>(std::distance(stamps_.begin(), it)) - 1;
}

const ErrorCache::Values& ErrorCache::lookup(ErrorFunction fn, double t_query,
                                             std::size_t k) const {
    return at(fn, floor_position(t_query), k);
}

ErrorCache build_error_cache(const EnactmentPlan& plan, const SimLog& sim_log, SectionShape shape,
                             std::vector<ErrorFunction> fns, std::string workflow_id) {
    const std::size_t n = plan.total();
    if (k_real(shape.sections, shape) != n)
        throw ConsistencyError("shape (" + std::to_string(shape.sections) + "," +
                               std::to_string(shape.jobs_per_section) +
                               ") implies a different job count than the plan's " +
                               std::to_string(n));
    std::vector<double> r_ex;
    r_ex.reserve(n);
    for (const PlannedJob& j : plan.jobs) r_ex.push_back(j.r_ex);

    std::vector<double> stamps;
    for (const auto& [t, entry] : sim_log.entries)
        if (entry.ok()) stamps.push_back(t);
    ErrorCache cache(std::move(workflow_id), shape, std::move(fns), std::move(stamps));

    std::size_t pos = 0;
    for (const auto& [t, entry] : sim_log.entries) {
        if (!entry.ok()) continue;
        const auto& obs = entry.result->observed;
        if (obs.size() != n)
            throw ConsistencyError("fragment at t=" + format_double(t) + " covers " +
                                   std::to_string(obs.size()) + " of " + std::to_string(n) +
                                   " jobs");
        for (ErrorFunction fn : cache.functions()) {
            for (std::size_t k = 1; k <= shape.sections; ++k) {
                const std::size_t kr = k_real(k, shape);
                ErrorCache::Values v;
                v.past = error_value(fn, r_ex, obs, kr);
                if (k < shape.sections) v.future = future_error(fn, r_ex, obs, kr, n);
                cache.set_values(fn, pos, k, v);
            }
        }
        ++pos;
    }
    return cache;
}

std::vector<double> low_error_set(const ErrorCache& cache, ErrorFunction fn, std::size_t k,
                                  double tau) {
    if (tau <= 0) throw DomainError("low-error threshold must be positive");
    std::vector<double> out;
    const auto& stamps = cache.fragment_timestamps();
    for (std::size_t pos = 0; pos < stamps.size(); ++pos) {
        const auto& v = cache.at(fn, pos, k);
        if (v.past < tau || (v.future && *v.future < tau)) out.push_back(stamps[pos]);
    }
    return out;
}

std::string render_error_cache(const ErrorCache& cache) {
    std::string out = "CACHE " + cache.workflow_id() + ' ' +
                      std::to_string(cache.shape().sections) + ' ' +
                      std::to_string(cache.shape().jobs_per_section) + '\n';
    const auto& stamps = cache.fragment_timestamps();
    for (std::size_t pos = 0; pos < stamps.size(); ++pos) {
        for (ErrorFunction fn : cache.functions()) {
            for (std::size_t k = 1; k <= cache.shape().sections; ++k) {
                const auto& v = cache.at(fn, pos, k);
                out += "ENTRY ";
                out += to_string(fn);
                out += ' ';
                out += format_double(stamps[pos]);
                out += ' ';
                out += std::to_string(k);
                out += ' ';
                out += format_sig(v.past, 9);
                if (v.future) {
                    out += ' ';
                    out += format_sig(*v.future, 9);
                }
                out += '\n';
            }
        }
    }
    return out;
}

ErrorCache parse_error_cache(std::string_view text) {
    std::string workflow_id;
    SectionShape shape;
    bool have_header = false;
    struct Row {
        ErrorFunction fn;
        double t;
        std::size_t k;
        ErrorCache::Values v;
    };
    std::vector<Row> rows;
    std::vector<ErrorFunction> fns;
    std::vector<double> stamps;

    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (is_comment_or_blank(line)) return;
        auto fields = split_fields(line);
        if (!have_header) {
            if (fields[0] != "CACHE" || fields.size() != 4)
                throw ParseError(line_no, "expected header: CACHE <id> <sections> <jobs_per_section>");
            workflow_id = std::string(fields[1]);
            auto sections = parse_uint(fields[2]);
            auto per = parse_uint(fields[3]);
            if (!sections || !per || *sections == 0 || *per == 0)
                throw ParseError(line_no, "malformed cache shape");
            shape = SectionShape{*sections, *per};
            have_header = true;
            return;
        }
        if (fields[0] != "ENTRY") throw ParseError(line_no, "expected ENTRY line");
        if (fields.size() != 5 && fields.size() != 6)
            throw ParseError(line_no, "ENTRY needs fn, t, k, past and optional future");
        auto fn = error_function_from_string(fields[1]);
        auto t = parse_double(fields[2]);
        auto k = parse_uint(fields[3]);
        auto past = parse_double(fields[4]);
        if (!fn || !t || !k || !past) throw ParseError(line_no, "malformed ENTRY line");
        if (*k < 1 || *k > shape.sections)
            throw ParseError(line_no, "checkpoint outside the declared shape");
        ErrorCache::Values v;
        v.past = *past;
        if (fields.size() == 6) {
            auto future = parse_double(fields[5]);
            if (!future) throw ParseError(line_no, "malformed future value");
            v.future = *future;
        }
        if ((*k < shape.sections) != v.future.has_value())
            throw ParseError(line_no, "future value must be present exactly below the last checkpoint");
        if (std::find(fns.begin(), fns.end(), *fn) == fns.end()) fns.push_back(*fn);
        if (stamps.empty() || stamps.back() != *t) {
            if (!stamps.empty() && *t < stamps.back())
                throw ParseError(line_no, "cache timestamps must be ascending");
            stamps.push_back(*t);
        }
        rows.push_back(Row{*fn, *t, *k, v});
    });
    if (!have_header) throw DomainError("cache text has no header line");

    ErrorCache cache(std::move(workflow_id), shape, fns, stamps);
    std::vector<std::vector<char>> seen(cache.functions().size(),
                                        std::vector<char>(stamps.size() * shape.sections, 0));
    auto slot_of = [&](ErrorFunction fn) {
        for (std::size_t i = 0; i < cache.functions().size(); ++i)
            if (cache.functions()[i] == fn) return i;
        throw LookupError("unknown function while assembling cache");
    };
    for (const Row& row : rows) {
        auto it = std::lower_bound(stamps.begin(), stamps.end(), row.t);
        const std::size_t pos = static_cast<std::size_t>(std::distance(stamps.begin(), it));
        char& flag = seen[slot_of(row.fn)][pos * shape.sections + (row.k - 1)];
        if (flag) throw ConsistencyError("duplicate cache entry at t=" + format_double(row.t));
        flag = 1;
        cache.set_values(row.fn, pos, row.k, row.v);
    }
    for (std::size_t f = 0; f < seen.size(); ++f)
        for (std::size_t cell = 0; cell < seen[f].size(); ++cell)
            if (!seen[f][cell])
                throw ConsistencyError(
                    "cache is missing entries for function " +
                    std::string(to_string(cache.functions()[f])));
    return cache;
}

} // namespace backcast
