#include "backcast/cloudsim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <queue>
#include <thread>
#include <unordered_map>

#include "backcast/exceptions.hpp"
#include "backcast/textio.hpp"

namespace backcast {

int CloudModel::find_repository(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < repositories.size(); ++i)
        if (repositories[i].name == name) return static_cast<int>(i);
    return -1;
}

CloudModel build_cloud(std::string_view text) {
    CloudModel cloud;
    for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        std::string_view line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        if (is_comment_or_blank(line, "")) return;
        auto fields = split_fields(line);
        auto field_value = [&](std::string_view field, std::string_view key) -> std::string_view {
            if (field.size() <= key.size() + 1 || field.substr(0, key.size()) != key ||
                field[key.size()] != '=')
                throw ParseError(line_no, "expected " + std::string(key) + "=<value>, got: " +
                                              std::string(field));
            return field.substr(key.size() + 1);
        };
        if (fields[0] == "PM") {
            if (fields.size() != 5)
                throw ParseError(line_no, "PM needs count=, cores=, perf= and mem=");
            auto count = parse_uint(field_value(fields[1], "count"));
            auto cores = parse_uint(field_value(fields[2], "cores"));
            auto perf = parse_double(field_value(fields[3], "perf"));
            auto mem = parse_uint(field_value(fields[4], "mem"));
            if (!count || !cores || !perf || !mem)
                throw ParseError(line_no, "non-numeric PM field");
            if (*count == 0 || *cores == 0 || *perf <= 0 || *mem == 0)
                throw ParseError(line_no, "PM capacities must be positive");
            for (std::uint64_t i = 0; i < *count; ++i)
                cloud.machines.push_back(
                    PhysicalMachine{static_cast<int>(*cores), *perf, *mem});
        } else if (fields[0] == "REPO") {
            if (fields.size() != 4)
                throw ParseError(line_no, "REPO needs name=, bandwidth= and latency=");
            Repository repo;
            repo.name = std::string(field_value(fields[1], "name"));
            auto bw = parse_double(field_value(fields[2], "bandwidth"));
            auto lat = parse_double(field_value(fields[3], "latency"));
            if (!bw || !lat) throw ParseError(line_no, "non-numeric REPO field");
            if (*bw <= 0) throw ParseError(line_no, "repository bandwidth must be positive");
            if (*lat < 0) throw ParseError(line_no, "repository latency must be non-negative");
            repo.bandwidth = *bw;
            repo.latency = *lat;
            if (cloud.find_repository(repo.name) >= 0)
                throw ParseError(line_no, "duplicate repository name: " + repo.name);
            cloud.repositories.push_back(std::move(repo));
        } else {
            throw ParseError(line_no, "unknown key: " + std::string(fields[0]));
        }
    });
    if (cloud.machines.empty()) throw DomainError("cloud config defines no machines");
    if (cloud.repositories.empty()) throw DomainError("cloud config defines no repositories");
    return cloud;
}

std::string render_cloud(const CloudModel& cloud) {
    // Adjacent identical machines collapse back into one PM line.
    std::string out;
    std::size_t i = 0;
    while (i < cloud.machines.size()) {
        const PhysicalMachine& m = cloud.machines[i];
        std::size_t count = 1;
        while (i + count < cloud.machines.size() && cloud.machines[i + count] == m) ++count;
        out += "PM count=" + std::to_string(count) + " cores=" + std::to_string(m.cores) +
               " perf=" + format_double(m.core_performance) + " mem=" + std::to_string(m.memory) +
               '\n';
        i += count;
    }
    for (const Repository& r : cloud.repositories)
        out += "REPO name=" + r.name + " bandwidth=" + format_double(r.bandwidth) +
               " latency=" + format_double(r.latency) + '\n';
    return out;
}

namespace {

enum class Phase { Queued, ImageLatency, ImageCopy, Boot, ActLatency, ActTransfer, ActCompute, Done };

struct FluidTask {
    double remaining = 0;
    double rate = 0;
    double last_time = 0;
    double pending = 0; // remaining/rate at schedule time; the completion
                        // event reuses this quotient so an uninterrupted
                        // activity lasts exactly amount/rate
    std::uint64_t gen = 0;
};

struct Vm {
    // fixed by construction
    int cores = 1;
    double perf = 1;
    std::uint64_t memory = 0;
    std::uint64_t image_bytes = 0;
    bool copy_image = false;
    double boot_time = 0;
    int image_repo = -1;
    int data_repo = -1;
    struct Act {
        bool transfer = false;
        double amount = 0;
        int obs_index = 0; // 1..N for tracked jobs, 0 otherwise
    };
    std::vector<Act> acts;
    bool background = false;
    int section = -1;

    // runtime state
    Phase phase = Phase::Queued;
    int host = -1;
    double nominal = 0; // cores * perf, the VM's compute allocation cap
    std::size_t act_idx = 0;
    double act_accrued = 0;
    FluidTask task;
    int audit_item = -1;
};

enum class EventType { BgSubmit, LatencyDone, BootDone, TaskDone };

struct Event {
    double time;
    std::uint64_t seq;
    EventType type;
    int vm;            // fragment index for BgSubmit
    std::uint64_t gen; // TaskDone staleness check
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        return a.seq > b.seq;
    }
};

class Engine {
public:
    Engine(const WorkflowDescription& desc, const EnactmentPlan& plan, const CloudModel& cloud,
           const std::vector<TraceJob>& fragment, const SimConfig& cfg, SimAudit* audit)
        : desc_(desc), plan_(plan), cloud_(cloud), fragment_(fragment), cfg_(cfg), audit_(audit) {}

    SimResult run() {
        prepare();
        if (!fragment_.empty()) push(fragment_[0].submit_time, EventType::BgSubmit, 0, 0);
        if (cfg_.warmup_jobs == 0) start_workflow();
        while (!wf_done_) {
            if (pq_.empty())
                throw ConsistencyError("simulation stalled before workflow completion");
            Event e = pq_.top();
            pq_.pop();
            now_ = e.time;
            ++events_;
            dispatch(e);
            if (audit_) capacity_check();
        }
        SimResult result;
        result.observed.resize(plan_.total(), 0);
        for (std::size_t i = 0; i < plan_.total(); ++i) {
            if (!observed_set_[i])
                throw ConsistencyError("tracked job " + std::to_string(i + 1) +
                                       " never produced an observation");
            result.observed[i] = observed_[i];
        }
        result.workflow_makespan = wf_end_ - wf_start_;
        result.vm_count = vms_.size();
        result.events = events_;
        return result;
    }

private:
    void prepare() {
        if (cfg_.warmup_jobs > fragment_.size())
            throw WarmupError("fragment has " + std::to_string(fragment_.size()) +
                              " jobs, fewer than the warm-up count " +
                              std::to_string(cfg_.warmup_jobs));
        max_cores_ = 0;
        max_mem_ = 0;
        for (const PhysicalMachine& m : cloud_.machines) {
            max_cores_ = std::max(max_cores_, m.cores);
            max_mem_ = std::max(max_mem_, m.memory);
            free_mem_.push_back(m.memory);
        }
        pm_compute_.resize(cloud_.machines.size());
        repo_active_.resize(cloud_.repositories.size());

        std::unordered_map<std::string, int> label_index;
        for (const PlannedJob& j : plan_.jobs) label_index[j.label] = static_cast<int>(j.index);
        std::size_t desc_labels = 0;
        for (const ParallelSection& s : desc_.sections)
            for (const auto& seq : s.vm_sequences)
                for (const VmActivity& a : seq)
                    if (!a.job_label.empty()) {
                        ++desc_labels;
                        if (!label_index.count(a.job_label))
                            throw ConsistencyError("description job '" + a.job_label +
                                                   "' missing from the plan");
                    }
        if (desc_labels != plan_.total())
            throw ConsistencyError("plan and description disagree on tracked jobs");
        label_index_ = std::move(label_index);
        observed_.resize(plan_.total(), 0);
        observed_set_.assign(plan_.total(), 0);
    }

    void push(double time, EventType type, int vm, std::uint64_t gen) {
        pq_.push(Event{time, ++seq_, type, vm, gen});
    }

    void dispatch(const Event& e) {
        switch (e.type) {
        case EventType::BgSubmit: on_bg_submit(static_cast<std::size_t>(e.vm)); break;
        case EventType::LatencyDone: on_latency_done(e.vm); break;
        case EventType::BootDone: on_boot_done(e.vm); break;
        case EventType::TaskDone: on_task_done(e.vm, e.gen); break;
        }
    }

    void on_bg_submit(std::size_t idx) {
        const TraceJob& job = fragment_[idx];
        Vm vm;
        vm.cores = job.cores;
        vm.memory = cfg_.background_vm_memory;
        vm.image_bytes = cfg_.background_vm_image;
        vm.copy_image = cfg_.background_vm_image > 0;
        vm.image_repo = 0;
        vm.background = true;
        vm.acts.push_back(Vm::Act{false, job.runtime, 0});
        int id = static_cast<int>(vms_.size());
        vms_.push_back(std::move(vm));
        request_vm(id);
        if (idx + 1 < fragment_.size())
            push(fragment_[idx + 1].submit_time, EventType::BgSubmit, static_cast<int>(idx + 1), 0);
    }

    void start_workflow() {
        wf_started_ = true;
        wf_start_ = now_;
        submit_section(0);
    }

    void submit_section(std::size_t s) {
        const ParallelSection& section = desc_.sections[s];
        section_cursor_ = s;
        section_outstanding_ = section.vm_sequences.size();
        int image_repo = cloud_.find_repository(section.definition.image_store);
        int data_repo = cloud_.find_repository(section.definition.data_store);
        if (image_repo < 0)
            throw LookupError("unknown image repository: " + section.definition.image_store);
        if (data_repo < 0)
            throw LookupError("unknown data repository: " + section.definition.data_store);
        for (const auto& seq : section.vm_sequences) {
            Vm vm;
            vm.cores = section.definition.cores;
            vm.perf = section.definition.core_performance;
            vm.memory = section.definition.memory;
            vm.image_bytes = section.definition.image_size;
            vm.copy_image = section.definition.copy_before_boot;
            vm.boot_time = section.definition.boot_time;
            vm.image_repo = image_repo;
            vm.data_repo = data_repo;
            vm.section = static_cast<int>(s);
            for (const VmActivity& a : seq) {
                int obs = a.job_label.empty() ? 0 : label_index_.at(a.job_label);
                vm.acts.push_back(Vm::Act{a.kind == ActivityKind::Network, a.amount, obs});
            }
            int id = static_cast<int>(vms_.size());
            vms_.push_back(std::move(vm));
            request_vm(id);
        }
    }

    void request_vm(int id) {
        const Vm& vm = vms_[static_cast<std::size_t>(id)];
        if (vm.cores > max_cores_ || vm.memory > max_mem_)
            throw CapacityError("VM wants " + std::to_string(vm.cores) + " cores and " +
                                std::to_string(vm.memory) + " bytes; no machine is that large");
        place_queue_.push_back(id);
        try_place();
    }

    void try_place() {
        // strict FIFO: a blocked head blocks everyone behind it
        while (!place_queue_.empty()) {
            int id = place_queue_.front();
            Vm& vm = vms_[static_cast<std::size_t>(id)];
            int host = -1;
            for (std::size_t p = 0; p < cloud_.machines.size(); ++p) {
                if (vm.cores <= cloud_.machines[p].cores && vm.memory <= free_mem_[p]) {
                    host = static_cast<int>(p);
                    break;
                }
            }
            if (host < 0) return;
            place_queue_.pop_front();
            place(id, host);
        }
    }

    void place(int id, int host) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        free_mem_[static_cast<std::size_t>(host)] -= vm.memory;
        vm.host = host;
        if (vm.background) vm.perf = cloud_.machines[static_cast<std::size_t>(host)].core_performance;
        vm.nominal = vm.cores * vm.perf;
        if (vm.copy_image && vm.image_bytes > 0) {
            vm.phase = Phase::ImageLatency;
            push(now_ + repo(vm.image_repo).latency, EventType::LatencyDone, id, 0);
        } else {
            start_boot(id);
        }
    }

    void start_boot(int id) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        if (vm.boot_time > 0) {
            vm.phase = Phase::Boot;
            push(now_ + vm.boot_time, EventType::BootDone, id, 0);
        } else {
            vm.act_idx = 0;
            start_act(id);
        }
    }

    void on_latency_done(int id) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        if (vm.phase == Phase::ImageLatency) {
            vm.phase = Phase::ImageCopy;
            begin_transfer(id, vm.image_repo, static_cast<double>(vm.image_bytes));
        } else if (vm.phase == Phase::ActLatency) {
            vm.phase = Phase::ActTransfer;
            begin_transfer(id, vm.data_repo, vm.acts[vm.act_idx].amount);
        }
    }

    void on_boot_done(int id) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        vm.act_idx = 0;
        start_act(id);
    }

    void start_act(int id) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        if (vm.act_idx >= vm.acts.size()) {
            terminate(id);
            return;
        }
        const Vm::Act& act = vm.acts[vm.act_idx];
        vm.act_accrued = 0;
        if (act.transfer) {
            vm.phase = Phase::ActLatency;
            push(now_ + repo(vm.data_repo).latency, EventType::LatencyDone, id, 0);
        } else {
            vm.phase = Phase::ActCompute;
            vm.task = FluidTask{act.amount, 0, now_, 0, vm.task.gen};
            if (audit_) {
                vm.audit_item = static_cast<int>(audit_->compute_items.size());
                audit_->compute_items.push_back({act.amount, 0});
            }
            pm_compute_[static_cast<std::size_t>(vm.host)].push_back(id);
            if (vm.background) {
                ++bg_started_;
                if (!wf_started_ && bg_started_ >= cfg_.warmup_jobs) start_workflow();
            }
            rebalance_pm(vm.host);
        }
    }

    void begin_transfer(int id, int repo_idx, double bytes) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        vm.task = FluidTask{bytes, 0, now_, 0, vm.task.gen};
        if (audit_) {
            vm.audit_item = static_cast<int>(audit_->transfer_items.size());
            audit_->transfer_items.push_back({bytes, 0});
        }
        repo_active_[static_cast<std::size_t>(repo_idx)].push_back(id);
        rebalance_repo(repo_idx);
    }

    void on_task_done(int id, std::uint64_t gen) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        if (gen != vm.task.gen) return; // superseded by a rebalance
        const double elapsed = vm.task.pending;
        vm.act_accrued += elapsed;
        if (audit_ && vm.audit_item >= 0) {
            auto& item = (vm.phase == Phase::ActCompute)
                             ? audit_->compute_items[static_cast<std::size_t>(vm.audit_item)]
                             : audit_->transfer_items[static_cast<std::size_t>(vm.audit_item)];
            item.delivered += vm.task.rate * elapsed;
        }
        vm.task.remaining = 0;
        vm.audit_item = -1;
        switch (vm.phase) {
        case Phase::ImageCopy:
            leave_repo(vm.image_repo, id);
            rebalance_repo(vm.image_repo);
            start_boot(id);
            break;
        case Phase::ActTransfer:
            leave_repo(vm.data_repo, id);
            rebalance_repo(vm.data_repo);
            ++vm.act_idx;
            start_act(id);
            break;
        case Phase::ActCompute: {
            auto& residents = pm_compute_[static_cast<std::size_t>(vm.host)];
            residents.erase(std::find(residents.begin(), residents.end(), id));
            rebalance_pm(vm.host);
            int obs = vm.acts[vm.act_idx].obs_index;
            if (obs > 0) {
                observed_[static_cast<std::size_t>(obs - 1)] = vm.act_accrued;
                observed_set_[static_cast<std::size_t>(obs - 1)] = 1;
            }
            ++vm.act_idx;
            start_act(id);
            break;
        }
        default:
            throw ConsistencyError("task completion in unexpected VM phase");
        }
    }

    void terminate(int id) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        vm.phase = Phase::Done;
        free_mem_[static_cast<std::size_t>(vm.host)] += vm.memory;
        if (!vm.background) {
            if (--section_outstanding_ == 0) {
                if (section_cursor_ + 1 < desc_.sections.size()) {
                    submit_section(section_cursor_ + 1);
                } else {
                    wf_done_ = true;
                    wf_end_ = now_;
                }
            }
        }
        try_place();
    }

    const Repository& repo(int idx) const { return cloud_.repositories[static_cast<std::size_t>(idx)]; }

    void leave_repo(int repo_idx, int id) {
        auto& active = repo_active_[static_cast<std::size_t>(repo_idx)];
        active.erase(std::find(active.begin(), active.end(), id));
    }

    // Folds progress at the old rate, then schedules completion under the
    // new one. Skipped entirely when the rate is unchanged, which keeps
    // uncontended activities on a single exact segment.
    void retask(int id, double new_rate) {
        Vm& vm = vms_[static_cast<std::size_t>(id)];
        if (vm.task.rate == new_rate) return;
        const double elapsed = now_ - vm.task.last_time;
        if (elapsed > 0) {
            const double done = vm.task.rate * elapsed;
            vm.task.remaining = std::max(0.0, vm.task.remaining - done);
            vm.act_accrued += elapsed;
            if (audit_ && vm.audit_item >= 0) {
                auto& item = (vm.phase == Phase::ActCompute)
                                 ? audit_->compute_items[static_cast<std::size_t>(vm.audit_item)]
                                 : audit_->transfer_items[static_cast<std::size_t>(vm.audit_item)];
                item.delivered += done;
            }
        }
        vm.task.rate = new_rate;
        vm.task.last_time = now_;
        vm.task.pending = vm.task.remaining / new_rate;
        ++vm.task.gen;
        push(now_ + vm.task.pending, EventType::TaskDone, id, vm.task.gen);
    }

    // Max-min fair split of the PM's pooled core capacity, capped at each
    // VM's nominal demand; a VM's progress rate is its share of nominal.
    void rebalance_pm(int host) {
        auto& residents = pm_compute_[static_cast<std::size_t>(host)];
        if (residents.empty()) return;
        const PhysicalMachine& pm = cloud_.machines[static_cast<std::size_t>(host)];
        const double capacity = pm.cores * pm.core_performance;
        std::vector<int> order(residents);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const double ca = vms_[static_cast<std::size_t>(a)].nominal;
            const double cb = vms_[static_cast<std::size_t>(b)].nominal;
            if (ca != cb) return ca < cb;
            return a < b;
        });
        double left = capacity;
        std::size_t remaining = order.size();
        for (int id : order) {
            Vm& vm = vms_[static_cast<std::size_t>(id)];
            const double level = left / static_cast<double>(remaining);
            const double alloc = std::min(vm.nominal, level);
            left -= alloc;
            --remaining;
            retask(id, alloc / vm.nominal);
        }
    }

    // Repositories split bandwidth equally among active transfers.
    void rebalance_repo(int repo_idx) {
        auto& active = repo_active_[static_cast<std::size_t>(repo_idx)];
        if (active.empty()) return;
        const double share =
            repo(repo_idx).bandwidth / static_cast<double>(active.size());
        for (int id : active) retask(id, share);
    }

    void capacity_check() {
        for (std::size_t p = 0; p < cloud_.machines.size(); ++p) {
            const PhysicalMachine& pm = cloud_.machines[p];
            double used = 0;
            for (int id : pm_compute_[p]) {
                const Vm& vm = vms_[static_cast<std::size_t>(id)];
                used += vm.task.rate * vm.nominal;
            }
            audit_->max_core_overshoot =
                std::max(audit_->max_core_overshoot, used - pm.cores * pm.core_performance);
        }
        for (std::size_t r = 0; r < cloud_.repositories.size(); ++r) {
            double used = 0;
            for (int id : repo_active_[r]) used += vms_[static_cast<std::size_t>(id)].task.rate;
            audit_->max_bandwidth_overshoot =
                std::max(audit_->max_bandwidth_overshoot, used - cloud_.repositories[r].bandwidth);
        }
    }

    const WorkflowDescription& desc_;
    const EnactmentPlan& plan_;
    const CloudModel& cloud_;
    const std::vector<TraceJob>& fragment_;
    const SimConfig& cfg_;
    SimAudit* audit_;

    double now_ = 0;
    std::uint64_t seq_ = 0;
    std::size_t events_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventAfter> pq_;
    std::vector<Vm> vms_;
    std::vector<std::uint64_t> free_mem_;
    std::vector<std::vector<int>> pm_compute_;
    std::vector<std::vector<int>> repo_active_;
    std::deque<int> place_queue_;
    std::unordered_map<std::string, int> label_index_;
    std::vector<double> observed_;
    std::vector<char> observed_set_;
    int max_cores_ = 0;
    std::uint64_t max_mem_ = 0;
    std::size_t bg_started_ = 0;
    bool wf_started_ = false;
    bool wf_done_ = false;
    double wf_start_ = 0;
    double wf_end_ = 0;
    std::size_t section_cursor_ = 0;
    std::size_t section_outstanding_ = 0;
};

} // namespace

SimResult simulate(const WorkflowDescription& desc, const EnactmentPlan& plan,
                   const CloudModel& cloud, const std::vector<TraceJob>& fragment,
                   const SimConfig& cfg, SimAudit* audit) {
    if (desc.sections.empty()) throw DomainError("simulate: empty workflow description");
    if (plan.total() == 0) throw DomainError("simulate: empty enactment plan");
    if (cloud.machines.empty() || cloud.repositories.empty())
        throw DomainError("simulate: cloud needs at least one machine and one repository");
    Engine engine(desc, plan, cloud, fragment, cfg, audit);
    return engine.run();
}

SimLog batch_simulate(const WorkflowDescription& desc, const EnactmentPlan& plan,
                      const CloudModel& cloud, const std::vector<FragmentRef>& fragments,
                      const TraceArchive& archive, const SimConfig& cfg, int parallelism) {
    if (fragments.empty()) throw DomainError("batch_simulate: empty fragment list");
    // duplicate timestamps collapse to one entry
    std::vector<FragmentRef> work;
    work.reserve(fragments.size());
    {
        std::vector<FragmentRef> sorted(fragments);
        std::sort(sorted.begin(), sorted.end(),
                  [](const FragmentRef& a, const FragmentRef& b) { return a.t < b.t; });
        for (const FragmentRef& r : sorted)
            if (work.empty() || work.back().t != r.t) work.push_back(r);
    }

    std::vector<SimLogEntry> entries(work.size());
    std::vector<double> walls(work.size(), 0);
    auto run_one = [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        try {
            std::vector<TraceJob> jobs = fragment_jobs(archive, work[i]);
            entries[i].result = simulate(desc, plan, cloud, jobs, cfg, nullptr);
        } catch (const std::exception& e) {
            entries[i].failure = e.what();
        }
        walls[i] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    const int workers = std::max(1, parallelism);
    if (workers == 1 || work.size() == 1) {
        for (std::size_t i = 0; i < work.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const std::size_t n_threads =
            std::min(static_cast<std::size_t>(workers), work.size());
        pool.reserve(n_threads);
        for (std::size_t w = 0; w < n_threads; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= work.size()) return;
                    run_one(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    SimLog log;
    double wall_sum = 0;
    for (std::size_t i = 0; i < work.size(); ++i) {
        log.entries.emplace(work[i].t, std::move(entries[i]));
        wall_sum += walls[i];
    }
    log.mean_sim_wall_seconds = wall_sum / static_cast<double>(work.size());
    return log;
}

std::string render_sim_log(const SimLog& log) {
    std::string out;
    for (const auto& [t, entry] : log.entries) {
        if (entry.ok()) {
            out += "FRAG " + format_fixed(t, 6) + '\n';
            const auto& obs = entry.result->observed;
            for (std::size_t i = 0; i < obs.size(); ++i)
                out += "JOB " + std::to_string(i + 1) + ' ' + format_fixed(obs[i], 6) + '\n';
        } else {
            std::string reason = entry.failure;
            for (char& c : reason)
                if (c == '\n' || c == '\r') c = ' ';
            out += "FRAG " + format_fixed(t, 6) + " FAILED " + reason + '\n';
        }
    }
    return out;
}

SimLog parse_sim_log(std::string_view text) {
    SimLog log;
    SimLogEntry* current = nullptr;
    for_each_line(text, [&](std::size_t line_no, std::string_view line) {
        if (is_comment_or_blank(line)) return;
        auto fields = split_fields(line);
        if (fields[0] == "FRAG") {
            if (fields.size() < 2) throw ParseError(line_no, "FRAG needs a timestamp");
            auto t = parse_double(fields[1]);
            if (!t) throw ParseError(line_no, "bad FRAG timestamp");
            SimLogEntry entry;
            if (fields.size() >= 3) {
                if (fields[2] != "FAILED")
                    throw ParseError(line_no, "unexpected token after FRAG timestamp");
                std::size_t mark = line.find("FAILED");
                std::size_t from = mark + 6;
                if (from < line.size() && line[from] == ' ') ++from;
                entry.failure = std::string(line.substr(from));
                if (entry.failure.empty()) entry.failure = "unknown failure";
            } else {
                entry.result = SimResult{};
            }
            auto [it, fresh] = log.entries.insert_or_assign(*t, std::move(entry));
            if (!fresh) throw ParseError(line_no, "duplicate FRAG timestamp");
            current = &it->second;
        } else if (fields[0] == "JOB") {
            if (!current || !current->result)
                throw ParseError(line_no, "JOB line outside a successful FRAG block");
            if (fields.size() != 3) throw ParseError(line_no, "JOB needs index and seconds");
            auto idx = parse_uint(fields[1]);
            auto val = parse_double(fields[2]);
            if (!idx || *idx == 0 || !val) throw ParseError(line_no, "malformed JOB line");
            if (*val <= 0) throw ParseError(line_no, "observed duration must be positive");
            auto& obs = current->result->observed;
            if (*idx != obs.size() + 1)
                throw ParseError(line_no, "JOB indices must be contiguous from 1");
            obs.push_back(*val);
        } else {
            throw ParseError(line_no, "unknown tag: " + std::string(fields[0]));
        }
    });
    return log;
}

} // namespace backcast
