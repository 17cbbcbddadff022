#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "backcast/trace.hpp"
#include "backcast/workflow.hpp"

namespace backcast {

struct PhysicalMachine {
    int cores = 1;
    double core_performance = 1; // fraction of the reference core rate
    std::uint64_t memory = 0;    // bytes

    bool operator==(const PhysicalMachine&) const = default;
};

struct Repository {
    std::string name;
    double bandwidth = 0; // bytes/second
    double latency = 0;   // seconds per transfer setup

    bool operator==(const Repository&) const = default;
};

struct CloudModel {
    std::vector<PhysicalMachine> machines;
    std::vector<Repository> repositories;

    // Index into repositories, or -1 when the name is unknown.
    int find_repository(std::string_view name) const noexcept;

    bool operator==(const CloudModel&) const = default;
};

struct SimConfig {
    std::size_t warmup_jobs = 50;          // background jobs started before injection
    std::uint64_t background_vm_image = 0; // bytes; 0 skips the image copy
    std::uint64_t background_vm_memory = 1ull << 30; // bytes
    std::uint64_t seed = 0;

    bool operator==(const SimConfig&) const = default;
};

// Simulated observed durations of one (workflow, fragment) pairing.
struct SimResult {
    std::vector<double> observed; // r'_ob for job indices 1..N
    double workflow_makespan = 0; // seconds between injection and last section end
    std::size_t vm_count = 0;     // VMs instantiated, background included
    std::size_t events = 0;       // simulator events processed

    bool operator==(const SimResult&) const = default;
};

// Per-activity bookkeeping for the conservation and capacity checks the
// test suites run; filled only when a SimAudit is passed to simulate().
struct SimAudit {
    struct WorkItem {
        double demanded = 0;
        double delivered = 0;
    };
    std::vector<WorkItem> compute_items;  // work units (nominal seconds)
    std::vector<WorkItem> transfer_items; // bytes
    double max_core_overshoot = 0;        // worst Sum(alloc) - capacity seen on a PM
    double max_bandwidth_overshoot = 0;   // same for repositories
};

struct SimLogEntry {
    std::optional<SimResult> result;
    std::string failure; // non-empty when the fragment could not be simulated

    bool ok() const noexcept { return result.has_value(); }
    bool operator==(const SimLogEntry&) const = default;
};

// Batch results keyed by fragment timestamp.
struct SimLog {
    std::map<double, SimLogEntry> entries;
    // Mean wall-clock seconds one fragment took; an estimate for budget
    // sizing, not persisted.
    double mean_sim_wall_seconds = 0;

    bool operator==(const SimLog& other) const { return entries == other.entries; }
};

// Parses "PM count=.. cores=.. perf=.. mem=.." and
// "REPO name=.. bandwidth=.. latency=.." lines; '#' comments.
CloudModel build_cloud(std::string_view text);
std::string render_cloud(const CloudModel& cloud);

// Runs the workflow over one background fragment and records every tracked
// job's simulated duration. Deterministic for fixed inputs.
SimResult simulate(const WorkflowDescription& desc, const EnactmentPlan& plan,
                   const CloudModel& cloud, const std::vector<TraceJob>& fragment,
                   const SimConfig& cfg, SimAudit* audit = nullptr);

// Simulates every fragment independently; failures are recorded per entry
// instead of aborting the batch. `parallelism` workers; results do not
// depend on it.
SimLog batch_simulate(const WorkflowDescription& desc, const EnactmentPlan& plan,
                      const CloudModel& cloud, const std::vector<FragmentRef>& fragments,
                      const TraceArchive& archive, const SimConfig& cfg, int parallelism = 1);

// Line format: "FRAG <t>" followed by "JOB <index> <seconds>" lines, or
// "FRAG <t> FAILED <reason>". Fixed 6 fractional digits.
std::string render_sim_log(const SimLog& log);
SimLog parse_sim_log(std::string_view text);

} // namespace backcast
