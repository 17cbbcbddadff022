#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "backcast/cloudsim.hpp"
#include "backcast/workflow.hpp"

namespace backcast {

// The three execution-time deviation measures. Values from different
// functions live on different scales and must never be compared.
enum class ErrorFunction { Sqd, Mape, TadjSqd };

inline constexpr ErrorFunction kAllErrorFunctions[] = {ErrorFunction::Sqd, ErrorFunction::Mape,
                                                      ErrorFunction::TadjSqd};

std::string_view to_string(ErrorFunction fn);
std::optional<ErrorFunction> error_function_from_string(std::string_view name);

// Deviation between projections and observations over job indices 1..k.
// Sqd: root mean square difference. Mape: mean absolute percentage,
// relative to the projection. TadjSqd: like Sqd but each squared term is
// weighted i/k, discounting early jobs.
double error_value(ErrorFunction fn, std::span<const double> r_ex, std::span<const double> r_ob,
                   std::size_t k);

// The same measure applied to the not-yet-run suffix k+1..N, re-indexed
// from 1 (so TadjSqd weights restart over the suffix).
double future_error(ErrorFunction fn, std::span<const double> r_ex, std::span<const double> r_ob,
                    std::size_t k, std::size_t n);

// Deviation of a simulated run from the really observed one: the real
// observations serve as the projections.
double simulated_error(ErrorFunction fn, std::span<const double> r_ob_real,
                       std::span<const double> r_ob_sim, std::size_t k);

// Precomputed past/future errors of every simulated fragment, keyed by
// (fragment timestamp, checkpoint, error function). Checkpoints count
// completed parallel sections; job indices derive via k_real.
class ErrorCache {
public:
    struct Values {
        double past = 0;
        std::optional<double> future; // absent at the last checkpoint

        bool operator==(const Values&) const = default;
    };

    ErrorCache() = default;
    ErrorCache(std::string workflow_id, SectionShape shape, std::vector<ErrorFunction> fns,
               std::vector<double> stamps);

    const std::string& workflow_id() const noexcept { return workflow_id_; }
    SectionShape shape() const noexcept { return shape_; }
    const std::vector<ErrorFunction>& functions() const noexcept { return fns_; }
    const std::vector<double>& fragment_timestamps() const noexcept { return stamps_; }
    bool has_function(ErrorFunction fn) const noexcept;
    bool empty() const noexcept { return stamps_.empty(); }

    // Per-function low-error threshold; configuration, not persisted.
    void set_low_error_limit(ErrorFunction fn, double tau);
    std::optional<double> low_error_limit(ErrorFunction fn) const;

    void set_values(ErrorFunction fn, std::size_t position, std::size_t k, Values v);
    // Exact-position access; k is a checkpoint in 1..shape.sections.
    const Values& at(ErrorFunction fn, std::size_t position, std::size_t k) const;

    // Floor-resolving lookup: t_query maps to the nearest fragment start
    // at-or-before it; queries before the first stamp clamp to the first.
    const Values& lookup(ErrorFunction fn, double t_query, std::size_t k) const;
    std::size_t floor_position(double t_query) const;

    bool operator==(const ErrorCache&) const = default;

private:
    std::size_t function_slot(ErrorFunction fn) const;

    std::string workflow_id_;
    SectionShape shape_;
    std::vector<ErrorFunction> fns_;
    std::vector<double> stamps_; // ascending
    // values_[fn_slot][k-1][position]
    std::vector<std::vector<std::vector<Values>>> values_;
    std::map<ErrorFunction, double> low_error_limits_;
};

// Computes past and future errors for every successful sim-log entry at
// every checkpoint of the shape. The last checkpoint has no future error.
ErrorCache build_error_cache(const EnactmentPlan& plan, const SimLog& sim_log, SectionShape shape,
                             std::vector<ErrorFunction> fns, std::string workflow_id);

// Fragment timestamps whose past OR future error at checkpoint k is below
// tau.
std::vector<double> low_error_set(const ErrorCache& cache, ErrorFunction fn, std::size_t k,
                                  double tau);

// Line format: one header "CACHE <workflow_id> <sections> <jobs_per_section>"
// then "ENTRY <fn> <t> <k> <past> [<future>]" rows, 9 significant digits
// on error values.
std::string render_error_cache(const ErrorCache& cache);
ErrorCache parse_error_cache(std::string_view text);

} // namespace backcast
