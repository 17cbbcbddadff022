#include "backcast/workflow.hpp"

#include <algorithm>
#include <unordered_set>

#include "backcast/exceptions.hpp"
#include "backcast/textio.hpp"

namespace backcast {

double EnactmentPlan::r_ex(std::size_t index) const {
    if (index < 1 || index > jobs.size())
        throw DomainError("plan job index " + std::to_string(index) + " out of range 1.." +
                          std::to_string(jobs.size()));
    return jobs[index - 1].r_ex;
}

const PlannedJob* EnactmentPlan::find(std::string_view label) const noexcept {
    for (const PlannedJob& j : jobs)
        if (j.label == label) return &j;
    return nullptr;
}

namespace {

std::vector<std::string_view> split_csv(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(text.substr(pos));
            return out;
        }
        out.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

VmDefinition parse_vmdef_fields(std::size_t line_no, const std::vector<std::string_view>& fields) {
    VmDefinition def;
    bool got_va = false, got_rc = false;
    for (std::string_view field : fields) {
        std::size_t eq = field.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(line_no, "VMDEF field without '=': " + std::string(field));
        std::string_view key = field.substr(0, eq);
        std::string_view value = field.substr(eq + 1);
        if (key == "VA") {
            auto parts = split_csv(value);
            if (parts.size() != 4)
                throw ParseError(line_no, "VA needs name,boot,copyflag,bytes");
            def.image_name = std::string(parts[0]);
            auto boot = parse_double(parts[1]);
            auto flag = parse_int(parts[2]);
            auto bytes = parse_uint(parts[3]);
            if (def.image_name.empty() || !boot || !flag || !bytes)
                throw ParseError(line_no, "malformed VA field");
            if (*boot < 0) throw ParseError(line_no, "negative boot time");
            if (*flag != 0 && *flag != 1) throw ParseError(line_no, "copy flag must be 0 or 1");
            if (*bytes == 0) throw ParseError(line_no, "image size must be positive");
            def.boot_time = *boot;
            def.copy_before_boot = (*flag == 0);
            def.image_size = *bytes;
            got_va = true;
        } else if (key == "RC") {
            auto parts = split_csv(value);
            if (parts.size() != 3)
                throw ParseError(line_no, "RC needs cores,performance,membytes");
            auto cores = parse_int(parts[0]);
            auto perf = parse_double(parts[1]);
            auto mem = parse_uint(parts[2]);
            if (!cores || !perf || !mem) throw ParseError(line_no, "malformed RC field");
            if (*cores < 1) throw ParseError(line_no, "core count must be at least 1");
            if (*perf <= 0) throw ParseError(line_no, "core performance must be positive");
            if (*mem == 0) throw ParseError(line_no, "memory must be positive");
            def.cores = static_cast<int>(*cores);
            def.core_performance = *perf;
            def.memory = *mem;
            got_rc = true;
        } else if (key == "VAST") {
            if (value.empty()) throw ParseError(line_no, "empty VAST repository name");
            def.image_store = std::string(value);
        } else if (key == "DATA") {
            if (value.empty()) throw ParseError(line_no, "empty DATA repository name");
            def.data_store = std::string(value);
        } else {
            throw ParseError(line_no, "unknown VMDEF key: " + std::string(key));
        }
    }
    if (!got_va || !got_rc || def.image_store.empty() || def.data_store.empty())
        throw ParseError(line_no, "VMDEF needs VA, RC, VAST and DATA fields");
    return def;
}

VmActivity parse_activity_token(std::size_t line_no, std::string_view token) {
    VmActivity act;
    char tag = token.front();
    std::string_view rest = token.substr(1);
    std::string_view number = rest;
    std::size_t bang = rest.find('!');
    if (bang != std::string_view::npos) {
        number = rest.substr(0, bang);
        act.job_label = std::string(rest.substr(bang + 1));
        if (act.job_label.empty())
            throw ParseError(line_no, "empty job label in token: " + std::string(token));
    }
    if (tag == 'N') {
        if (!act.job_label.empty())
            throw ParseError(line_no, "network activities cannot be tracked jobs: " + std::string(token));
        act.kind = ActivityKind::Network;
        auto bytes = parse_uint(number);
        if (!bytes || *bytes == 0)
            throw ParseError(line_no, "network token needs a positive integer byte count: " +
                                          std::string(token));
        act.amount = static_cast<double>(*bytes);
    } else if (tag == 'C') {
        act.kind = ActivityKind::Compute;
        auto seconds = parse_double(number);
        if (!seconds || *seconds <= 0)
            throw ParseError(line_no, "compute token needs a positive duration: " + std::string(token));
        act.amount = *seconds;
    } else {
        throw ParseError(line_no, "activity must start with N or C: " + std::string(token));
    }
    return act;
}

} // namespace

WorkflowDescription parse_workflow_description(std::string_view text) {
    WorkflowDescription desc;
    bool in_section = false;
    bool have_def = false;
    std::size_t section_open_line = 0;

    auto close_section = [&](std::size_t line_no) {
        if (!in_section) return;
        if (desc.sections.back().vm_sequences.empty())
            throw ParseError(line_no, "parallel section opened on line " +
                                          std::to_string(section_open_line) + " has no VMSEQ");
    };

    for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
        std::string_view line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        if (is_comment_or_blank(line, "")) return;
        auto fields = split_fields(line);
        std::string_view tag = fields[0];
        if (tag == "PSSTART") {
            if (fields.size() != 1)
                throw ParseError(line_no, "unexpected tokens after PSSTART");
            close_section(line_no);
            desc.sections.emplace_back();
            in_section = true;
            have_def = false;
            section_open_line = line_no;
        } else if (tag == "VMDEF") {
            if (!in_section) throw ParseError(line_no, "VMDEF outside a parallel section");
            if (have_def) throw ParseError(line_no, "second VMDEF in one parallel section");
            desc.sections.back().definition = parse_vmdef_fields(
                line_no, std::vector<std::string_view>(fields.begin() + 1, fields.end()));
            have_def = true;
        } else if (tag == "VMSEQ") {
            if (!in_section || !have_def)
                throw ParseError(line_no, "VMSEQ before any VMDEF");
            if (fields.size() < 2) throw ParseError(line_no, "VMSEQ without activities");
            std::vector<VmActivity> seq;
            for (std::size_t i = 1; i < fields.size(); ++i)
                seq.push_back(parse_activity_token(line_no, fields[i]));
            desc.sections.back().vm_sequences.push_back(std::move(seq));
        } else {
            throw ParseError(line_no, "unknown tag: " + std::string(tag));
        }
    });
    close_section(0);
    if (desc.sections.empty()) throw DomainError("workflow description has no parallel sections");
    return desc;
}

std::string render_workflow_description(const WorkflowDescription& desc) {
    std::string out;
    for (const ParallelSection& section : desc.sections) {
        const VmDefinition& d = section.definition;
        out += "PSSTART\n";
        out += "VMDEF VA=" + d.image_name + ',' + format_double(d.boot_time) + ',' +
               (d.copy_before_boot ? "0" : "1") + ',' + std::to_string(d.image_size);
        out += " RC=" + std::to_string(d.cores) + ',' + format_double(d.core_performance) + ',' +
               std::to_string(d.memory);
        out += " VAST=" + d.image_store + " DATA=" + d.data_store + '\n';
        for (const auto& seq : section.vm_sequences) {
            out += "VMSEQ";
            for (const VmActivity& act : seq) {
                out += ' ';
                out += (act.kind == ActivityKind::Network) ? 'N' : 'C';
                if (act.kind == ActivityKind::Network)
                    out += std::to_string(static_cast<std::uint64_t>(act.amount));
                else
                    out += format_double(act.amount);
                if (!act.job_label.empty()) {
                    out += '!';
                    out += act.job_label;
                }
            }
            out += '\n';
        }
    }
    return out;
}

EnactmentPlan build_plan(const WorkflowDescription& desc,
                         const std::map<std::string, double>& expectations) {
    for (const auto& [label, seconds] : expectations)
        if (seconds <= 0)
            throw DomainError("expectation for job '" + label + "' must be positive");

    struct Candidate {
        double completion;
        PlannedJob job;
    };
    std::vector<Candidate> candidates;
    std::unordered_set<std::string> seen_labels;

    for (std::size_t s = 0; s < desc.sections.size(); ++s) {
        const ParallelSection& section = desc.sections[s];
        for (std::size_t v = 0; v < section.vm_sequences.size(); ++v) {
            double elapsed = 0;
            const auto& seq = section.vm_sequences[v];
            for (std::size_t i = 0; i < seq.size(); ++i) {
                const VmActivity& act = seq[i];
                if (act.kind != ActivityKind::Compute) continue;
                double r = act.amount;
                if (!act.job_label.empty()) {
                    auto it = expectations.find(act.job_label);
                    if (it != expectations.end()) r = it->second;
                }
                elapsed += r;
                if (act.job_label.empty()) continue;
                if (!seen_labels.insert(act.job_label).second)
                    throw DomainError("duplicate tracked-job label: " + act.job_label);
                candidates.push_back({elapsed, PlannedJob{0, act.job_label, r, s, v, i}});
            }
        }
    }
    if (candidates.empty()) throw DomainError("workflow has no tracked jobs");

    // Sections are barriers, so a later section always completes after an
    // earlier one; within a section, projected completion decides and the
    // (vm, token) origin breaks exact ties deterministically.
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.job.section != b.job.section) return a.job.section < b.job.section;
        if (a.completion != b.completion) return a.completion < b.completion;
        if (a.job.vm != b.job.vm) return a.job.vm < b.job.vm;
        return a.job.token < b.job.token;
    });

    EnactmentPlan plan;
    plan.jobs.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        PlannedJob j = std::move(candidates[i].job);
        j.index = i + 1;
        plan.jobs.push_back(std::move(j));
    }
    return plan;
}

std::size_t k_real(std::size_t k, SectionShape shape) {
    if (shape.sections < 1 || shape.jobs_per_section < 1)
        throw DomainError("section shape counts must be at least 1");
    if (k > shape.sections)
        throw DomainError("checkpoint " + std::to_string(k) + " out of range 0.." +
                          std::to_string(shape.sections));
    if (k == 0) return 0;
    std::size_t idx = 1 + shape.jobs_per_section * k;
    if (k == shape.sections) idx += 1;
    return idx;
}

DeviationCase classify_deviation(double r_ex, double r_ob, double magnitude_factor) {
    if (r_ex <= 0 || r_ob <= 0) throw DomainError("classify_deviation: times must be positive");
    if (magnitude_factor <= 0) throw DomainError("classify_deviation: factor must be positive");
    return (r_ob >= magnitude_factor * r_ex) ? DeviationCase::InputDriven
                                             : DeviationCase::BackgroundLoad;
}

double expected_serial_duration(const EnactmentPlan& plan, const ObservedRun& run) {
    if (run.observed.size() > plan.total())
        throw ConsistencyError("observed run has more jobs than the plan");
    double sum = 0;
    for (double r : run.observed) sum += r;
    for (std::size_t i = run.observed.size(); i < plan.total(); ++i) sum += plan.jobs[i].r_ex;
    return sum;
}

std::optional<SectionShape> derive_shape(const EnactmentPlan& plan) {
    if (plan.jobs.empty()) return std::nullopt;
    std::vector<std::size_t> counts;
    std::size_t last_section = 0;
    bool first = true;
    for (const PlannedJob& j : plan.jobs) {
        if (first || j.section != last_section) {
            if (!first && j.section < last_section) return std::nullopt;
            counts.push_back(0);
            last_section = j.section;
            first = false;
        }
        ++counts.back();
    }
    // leading setup job, uniform bulk sections, trailing collector
    if (counts.size() < 3) return std::nullopt;
    if (counts.front() != 1 || counts.back() != 1) return std::nullopt;
    std::size_t per = counts[1];
    for (std::size_t i = 1; i + 1 < counts.size(); ++i)
        if (counts[i] != per) return std::nullopt;
    return SectionShape{counts.size() - 2, per};
}

} // namespace backcast
