#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace backcast {

// The VM template one parallel section instantiates for each of its
// activity sequences.
struct VmDefinition {
    std::string image_name;
    double boot_time = 0;        // seconds
    bool copy_before_boot = true; // flag value 0 in the file means copy
    std::uint64_t image_size = 0; // bytes
    int cores = 1;
    double core_performance = 1; // fraction of the reference core rate
    std::uint64_t memory = 0;    // bytes
    std::string image_store;     // repository holding the VM image
    std::string data_store;      // repository network activities talk to

    bool operator==(const VmDefinition&) const = default;
};

enum class ActivityKind { Network, Compute };

// One step of a VM's strictly sequential program. `amount` is bytes for
// network steps and seconds-at-nominal-rate for compute steps. A non-empty
// label marks the step as a tracked workflow job.
struct VmActivity {
    ActivityKind kind = ActivityKind::Compute;
    double amount = 0;
    std::string job_label;

    bool operator==(const VmActivity&) const = default;
};

// One parallel section: every sequence runs on its own VM built from the
// shared definition, all VMs side by side.
struct ParallelSection {
    VmDefinition definition;
    std::vector<std::vector<VmActivity>> vm_sequences;

    bool operator==(const ParallelSection&) const = default;
};

// Sections run strictly in order; each is a barrier for the next.
struct WorkflowDescription {
    std::vector<ParallelSection> sections;

    bool operator==(const WorkflowDescription&) const = default;
};

// A tracked job with its projected execution time, placed in projected
// completion order. The (section, vm, token) origin locates the compute
// token it came from.
struct PlannedJob {
    std::size_t index = 0; // 1..N
    std::string label;
    double r_ex = 0; // seconds
    std::size_t section = 0;
    std::size_t vm = 0;
    std::size_t token = 0;

    bool operator==(const PlannedJob&) const = default;
};

struct EnactmentPlan {
    std::vector<PlannedJob> jobs; // ascending by index

    std::size_t total() const noexcept { return jobs.size(); } // N
    // Projected time of job i (1-based). Out-of-range errors.
    double r_ex(std::size_t index) const;
    const PlannedJob* find(std::string_view label) const noexcept;

    bool operator==(const EnactmentPlan&) const = default;
};

// Progress of one live (or replayed) workflow instance.
struct ObservedRun {
    double t_curr = 0;          // workflow start timestamp
    std::size_t checkpoints = 0; // completed parallel sections (k)
    std::vector<double> observed; // r_ob for job indices 1..observed.size()

    bool operator==(const ObservedRun&) const = default;
};

// The checkpoint geometry of a workflow: how many parallel sections carry
// the bulk jobs and how many tracked jobs each one holds.
struct SectionShape {
    std::size_t sections = 1;
    std::size_t jobs_per_section = 1;

    bool operator==(const SectionShape&) const = default;
};

// A job whose observed time blew past its projection because of its input
// rather than the platform; such jobs must not drive prediction.
enum class DeviationCase { InputDriven, BackgroundLoad };

// Parses the PSSTART/VMDEF/VMSEQ description language. '#' starts a
// comment. Compute tokens may carry a "!label" suffix marking tracked jobs.
WorkflowDescription parse_workflow_description(std::string_view text);

// Renders back to the same language; parse(render(d)) == d.
std::string render_workflow_description(const WorkflowDescription& desc);

// Collects the tracked jobs in projected completion order. Completion is
// projected on a dedicated cloud: sections serialize, VMs within a section
// run in parallel, tokens in sequence; network steps take no projected
// time (their duration depends on a cloud model the plan does not have).
// `expectations` overrides the per-label r_ex taken from token amounts.
EnactmentPlan build_plan(const WorkflowDescription& desc,
                         const std::map<std::string, double>& expectations = {});

// Flat job index reached after k completed parallel sections: the leading
// setup job, k bulk sections, and at the very end the trailing collector.
std::size_t k_real(std::size_t k, SectionShape shape);

DeviationCase classify_deviation(double r_ex, double r_ob, double magnitude_factor = 10.0);

// Completed observations plus projections for the rest, summed as if the
// whole workflow ran serially.
double expected_serial_duration(const EnactmentPlan& plan, const ObservedRun& run);

// Shape implied by a plan whose label layout matches the leading/bulk/
// trailing convention k_real encodes; nullopt when the plan does not fit.
std::optional<SectionShape> derive_shape(const EnactmentPlan& plan);

} // namespace backcast
