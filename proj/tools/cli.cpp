#include "cli.hpp"

#include <algorithm>
#include <optional>
#include <ostream>
#include <string_view>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "backcast/cloudsim.hpp"
#include "backcast/eval.hpp"
#include "backcast/exceptions.hpp"
#include "backcast/metrics.hpp"
#include "backcast/predictor.hpp"
#include "backcast/rng.hpp"
#include "backcast/textio.hpp"
#include "backcast/trace.hpp"
#include "backcast/workflow.hpp"

namespace backcast::cli {

namespace {

// Accumulates the one-line effective-configuration echo every subcommand
// prints before doing any work.
class ConfigEcho {
public:
    ConfigEcho& add(std::string_view key, std::string_view value) {
        line_ += ' ';
        line_ += key;
        line_ += '=';
        line_ += value;
        return *this;
    }
    ConfigEcho& add(std::string_view key, double v) { return add(key, format_double(v)); }
    ConfigEcho& add(std::string_view key, std::size_t v) { return add(key, std::to_string(v)); }
    ConfigEcho& add(std::string_view key, int v) { return add(key, std::to_string(v)); }

    void print(std::ostream& os) const { os << line_ << '\n'; }

private:
    std::string line_ = "config:";
};

using PathPairs = std::vector<std::pair<std::string, std::string>>;

// Records what a run consumed and produced, for later re-runs.
void write_manifest(const std::string& path, const std::string& command, std::uint64_t seed,
                    const PathPairs& inputs, const PathPairs& outputs,
                    const PredictorConfig* predictor) {
    nlohmann::json m;
    m["command"] = command;
    m["seed"] = seed;
    m["inputs"] = nlohmann::json::object();
    for (const auto& [key, value] : inputs) m["inputs"][key] = value;
    m["outputs"] = nlohmann::json::object();
    for (const auto& [key, value] : outputs) m["outputs"][key] = value;
    if (predictor != nullptr) {
        m["predictor"] = {{"S", predictor->primary_window},
                          {"P", predictor->max_evaluations},
                          {"I", predictor->max_iterations},
                          {"ratio", predictor->secondary_span_ratio},
                          {"fn", std::string(to_string(predictor->fn))},
                          {"precision", predictor->precision},
                          {"budget", predictor->time_budget},
                          {"threshold", predictor->trigger_threshold},
                          {"absolute_future_match", predictor->absolute_future_match}};
    }
    write_file(path, m.dump(2) + "\n");
}

struct WorkflowBundle {
    WorkflowDescription desc;
    EnactmentPlan plan;
};

WorkflowBundle load_workflow(const std::string& path) {
    WorkflowBundle b;
    b.desc = parse_workflow_description(read_file(path));
    b.plan = build_plan(b.desc);
    return b;
}

SectionShape require_shape(const EnactmentPlan& plan) {
    const std::optional<SectionShape> shape = derive_shape(plan);
    if (!shape)
        throw ConsistencyError(
            "workflow does not follow the single-setup, uniform-bulk, single-collector "
            "layout checkpointed prediction needs");
    return *shape;
}

// The predictor knobs shared by predict, study, and sweep.
struct PredictorFlags {
    double S = 1000;
    double precision = 1;
    double ratio = 50;
    double budget = 60;
    double threshold = 0;
    std::size_t P = 20;
    std::size_t I = 32;
    std::string fn = "SQD";
    bool absolute = false;

    void attach(CLI::App* sub) {
        sub->add_option("--S", S, "primary window span in seconds");
        sub->add_option("--P", P, "simulated-error evaluations per window");
        sub->add_option("--I", I, "iteration cap");
        sub->add_option("--ratio", ratio, "secondary span as a multiple of the window");
        sub->add_option("--fn", fn, "error function")
            ->check(CLI::IsMember({"SQD", "MAPE", "TADJ_SQD"}));
        sub->add_option("--precision", precision,
                        "target movement in seconds that counts as converged");
        sub->add_option("--budget", budget, "wall-clock budget for one prediction in seconds");
        sub->add_option("--threshold", threshold,
                        "deviation below which no prediction is attempted");
        sub->add_flag("--absolute-future-match", absolute,
                      "minimize |F - E| instead of the signed F - E");
    }

    PredictorConfig to_config(std::uint64_t seed) const {
        PredictorConfig cfg;
        cfg.primary_window = S;
        cfg.precision = precision;
        cfg.max_iterations = I;
        cfg.max_evaluations = P;
        cfg.secondary_span_ratio = ratio;
        cfg.fn = *error_function_from_string(fn);
        cfg.trigger_threshold = threshold;
        cfg.time_budget = budget;
        cfg.seed = seed;
        cfg.absolute_future_match = absolute;
        return cfg;
    }

    void echo(ConfigEcho& c) const {
        c.add("S", S)
            .add("P", P)
            .add("I", I)
            .add("ratio", ratio)
            .add("fn", fn)
            .add("precision", precision)
            .add("budget", budget)
            .add("threshold", threshold)
            .add("absolute-future-match", absolute ? 1 : 0);
    }
};

std::string join_paths(const std::vector<std::string>& paths) {
    std::string out;
    for (const std::string& p : paths) {
        if (!out.empty()) out += ',';
        out += p;
    }
    return out;
}

// ----- synth -----

struct SynthArgs {
    std::uint64_t seed = 0;
    SyntheticProfile profile;
    std::string out_path;
    std::string manifest;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "synth")
        .add("seed", a.seed)
        .add("jobs", a.profile.n_jobs)
        .add("mean-runtime", a.profile.mean_runtime)
        .add("burstiness", a.profile.burstiness)
        .add("period", a.profile.period)
        .add("interarrival", a.profile.mean_interarrival)
        .add("max-cores", a.profile.max_cores)
        .add("out", a.out_path);
    echo.print(out);
    const TraceArchive archive = generate_synthetic_corpus(a.seed, a.profile);
    write_file(a.out_path, render_trace(archive));
    if (!a.manifest.empty())
        write_manifest(a.manifest, "synth", a.seed, {}, {{"trace", a.out_path}}, nullptr);
    out << "wrote " << archive.size() << " jobs spanning " << format_fixed(archive.end_time(), 3)
        << " s to " << a.out_path << '\n';
    return 0;
}

// ----- ingest -----

struct IngestArgs {
    std::vector<std::string> inputs;
    double gap = 0;
    std::string out_path;
    std::string manifest;
};

int run_ingest(const IngestArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "ingest")
        .add("inputs", join_paths(a.inputs))
        .add("gap", a.gap)
        .add("out", a.out_path);
    echo.print(out);
    std::vector<TraceArchive> archives;
    archives.reserve(a.inputs.size());
    std::size_t dropped = 0;
    for (const std::string& path : a.inputs) {
        archives.push_back(parse_trace(read_file(path)));
        dropped += archives.back().dropped_rows();
    }
    TraceArchive merged = archives.size() == 1 ? std::move(archives.front())
                                               : concat_archives(archives, a.gap);
    write_file(a.out_path, render_trace(merged));
    if (!a.manifest.empty()) {
        PathPairs inputs;
        for (const std::string& path : a.inputs) inputs.emplace_back("trace", path);
        write_manifest(a.manifest, "ingest", 0, inputs, {{"archive", a.out_path}}, nullptr);
    }
    out << "ingested " << merged.size() << " jobs (" << dropped << " malformed rows dropped) "
        << "spanning " << format_fixed(merged.end_time(), 3) << " s\n";
    return 0;
}

// ----- simulate -----

struct SimulateArgs {
    std::string archive_path, workflow_path, cloud_path, out_path, manifest;
    double duration = 0;
    std::size_t stride = 1;
    std::size_t limit = 0;
    SimConfig sim;
    int parallel = 1;
};

int run_simulate(const SimulateArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "simulate")
        .add("archive", a.archive_path)
        .add("workflow", a.workflow_path)
        .add("cloud", a.cloud_path)
        .add("duration", a.duration)
        .add("stride", a.stride)
        .add("limit", a.limit)
        .add("warmup", a.sim.warmup_jobs)
        .add("bg-image", a.sim.background_vm_image)
        .add("bg-mem", a.sim.background_vm_memory)
        .add("seed", a.sim.seed)
        .add("parallel", a.parallel)
        .add("out", a.out_path);
    echo.print(out);

    const TraceArchive archive = parse_trace(read_file(a.archive_path));
    const WorkflowBundle wf = load_workflow(a.workflow_path);
    const CloudModel cloud = build_cloud(read_file(a.cloud_path));
    std::vector<FragmentRef> refs = enumerate_fragments(archive, a.duration);
    if (a.stride > 1) {
        std::vector<FragmentRef> strided;
        strided.reserve(refs.size() / a.stride + 1);
        for (std::size_t i = 0; i < refs.size(); i += a.stride) strided.push_back(refs[i]);
        refs = std::move(strided);
    }
    if (a.limit > 0 && refs.size() > a.limit) refs.resize(a.limit);
    if (refs.empty()) throw DomainError("no fragments fit the requested duration");

    const SimLog log =
        batch_simulate(wf.desc, wf.plan, cloud, refs, archive, a.sim, a.parallel);
    write_file(a.out_path, render_sim_log(log));
    if (!a.manifest.empty())
        write_manifest(a.manifest, "simulate", a.sim.seed,
                       {{"archive", a.archive_path},
                        {"workflow", a.workflow_path},
                        {"cloud", a.cloud_path}},
                       {{"simlog", a.out_path}}, nullptr);
    std::size_t failed = 0;
    for (const auto& [t, entry] : log.entries)
        if (!entry.ok()) ++failed;
    out << "simulated " << log.entries.size() << " fragments (" << failed << " failed), mean "
        << format_fixed(log.mean_sim_wall_seconds * 1000.0, 3) << " ms each\n";
    return 0;
}

// ----- cache -----

struct CacheArgs {
    std::string simlog_path, workflow_path, out_path, manifest;
    std::string id = "wf";
};

int run_cache(const CacheArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "cache")
        .add("simlog", a.simlog_path)
        .add("workflow", a.workflow_path)
        .add("id", a.id)
        .add("out", a.out_path);
    echo.print(out);

    const WorkflowBundle wf = load_workflow(a.workflow_path);
    const SectionShape shape = require_shape(wf.plan);
    const SimLog log = parse_sim_log(read_file(a.simlog_path));
    const std::vector<ErrorFunction> fns(std::begin(kAllErrorFunctions),
                                         std::end(kAllErrorFunctions));
    const ErrorCache cache = build_error_cache(wf.plan, log, shape, fns, a.id);
    write_file(a.out_path, render_error_cache(cache));
    if (!a.manifest.empty())
        write_manifest(a.manifest, "cache", 0,
                       {{"simlog", a.simlog_path}, {"workflow", a.workflow_path}},
                       {{"cache", a.out_path}}, nullptr);
    out << "cached " << cache.fragment_timestamps().size() << " fragments at "
        << shape.sections << " checkpoints\n";
    return 0;
}

// ----- shared corpus loading for predict / study / sweep -----

struct CorpusArgs {
    std::string cache_path, simlog_path, workflow_path;
};

struct LoadedCorpus {
    WorkflowBundle wf;
    SimLog log;
    ErrorCache cache;
};

LoadedCorpus load_corpus(const CorpusArgs& a) {
    LoadedCorpus c;
    c.wf = load_workflow(a.workflow_path);
    c.log = parse_sim_log(read_file(a.simlog_path));
    c.cache = parse_error_cache(read_file(a.cache_path));
    const SectionShape shape = require_shape(c.wf.plan);
    if (!(shape == c.cache.shape()))
        throw ConsistencyError("workflow checkpoint shape does not match the error cache");
    return c;
}

void echo_corpus(ConfigEcho& echo, const CorpusArgs& a) {
    echo.add("cache", a.cache_path).add("simlog", a.simlog_path).add("workflow", a.workflow_path);
}

// ----- predict -----

struct PredictArgs {
    CorpusArgs corpus;
    std::size_t k = 1;
    std::uint64_t seed = 0;
    std::optional<double> golden;
    std::string obs_path;
    std::size_t tfilt_budget = 0;
    std::string out_path, manifest;
    PredictorFlags flags;
};

std::vector<double> parse_observations(const std::string& path) {
    std::vector<double> obs;
    for_each_line(read_file(path), [&](std::size_t line_no, std::string_view line) {
        if (is_comment_or_blank(line)) return;
        for (std::string_view token : split_fields(line)) {
            const std::optional<double> v = parse_double(token);
            if (!v)
                throw ParseError(line_no,
                                 "observed duration is not a number: " + std::string(token));
            obs.push_back(*v);
        }
    });
    if (obs.empty()) throw DomainError("observation file holds no durations");
    return obs;
}

FilteredSet filter_stamps(const std::vector<double>& stamps, std::size_t budget, Rng& rng) {
    FilteredSet t_filt;
    if (budget == 0 || budget >= stamps.size()) {
        t_filt.timestamps = stamps;
        t_filt.budget = stamps.size();
    } else {
        t_filt.timestamps =
            sample_without_replacement(std::span<const double>(stamps), budget, rng);
        t_filt.budget = budget;
    }
    return t_filt;
}

int run_predict(const PredictArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "predict");
    echo_corpus(echo, a.corpus);
    echo.add("k", a.k).add("seed", a.seed).add("tfilt-budget", a.tfilt_budget);
    a.flags.echo(echo);
    if (a.golden) echo.add("golden", *a.golden);
    if (!a.obs_path.empty()) echo.add("obs", a.obs_path);
    echo.print(out);

    LoadedCorpus c = load_corpus(a.corpus);
    const SectionShape shape = c.cache.shape();
    if (a.k == 0 || a.k > shape.sections)
        throw DomainError("checkpoint k must lie in 1.." + std::to_string(shape.sections));
    const std::vector<double>& stamps = c.cache.fragment_timestamps();
    if (stamps.empty()) throw DomainError("error cache holds no fragments");

    Rng rng(a.seed);
    ObservedRun run;
    run.checkpoints = a.k;
    if (!a.obs_path.empty()) {
        run.observed = parse_observations(a.obs_path);
        run.t_curr = 0;
    } else {
        double t_g;
        if (a.golden) {
            t_g = *a.golden;
            if (stamps[c.cache.floor_position(t_g)] != t_g)
                throw LookupError("golden timestamp " + format_double(t_g) +
                                  " is not a cached fragment");
        } else {
            t_g = stamps[uniform_below(rng, stamps.size())];
            out << "golden=" << format_double(t_g) << '\n';
        }
        const auto it = c.log.entries.find(t_g);
        if (it == c.log.entries.end() || !it->second.ok())
            throw ConsistencyError("no simulated observations for fragment " +
                                   format_double(t_g));
        const std::vector<double>& obs = it->second.result->observed;
        const std::size_t prefix = k_real(a.k, shape);
        if (obs.size() < prefix)
            throw ConsistencyError("fragment " + format_double(t_g) +
                                   " has fewer observations than checkpoint " +
                                   std::to_string(a.k) + " needs");
        run.observed.assign(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(prefix));
        run.t_curr = t_g;
    }

    const FilteredSet t_filt = filter_stamps(stamps, a.tfilt_budget, rng);
    const PredictorConfig cfg = a.flags.to_config(rng());
    const PredictionOutcome outcome = predict(cfg, c.cache, t_filt, c.wf.plan, run, c.log);

    out << "t_target=" << format_double(outcome.t_target) << " iters=" << outcome.iterations
        << " d_ms=" << format_fixed(outcome.wall_seconds * 1000.0, 3) << '\n';
    if (!a.out_path.empty()) {
        std::string text = "t_target " + format_double(outcome.t_target) + "\n";
        text += "iterations " + std::to_string(outcome.iterations) + "\n";
        text += "truncated " + std::string(outcome.budget_truncated ? "1" : "0") + "\n";
        text += "trajectory";
        for (double t : outcome.trajectory) text += ' ' + format_double(t);
        text += '\n';
        write_file(a.out_path, text);
    }
    if (!a.manifest.empty()) {
        PathPairs outputs;
        if (!a.out_path.empty()) outputs.emplace_back("outcome", a.out_path);
        const PredictorConfig echo_cfg = a.flags.to_config(a.seed);
        write_manifest(a.manifest, "predict", a.seed,
                       {{"cache", a.corpus.cache_path},
                        {"simlog", a.corpus.simlog_path},
                        {"workflow", a.corpus.workflow_path}},
                       outputs, &echo_cfg);
    }
    return 0;
}

// ----- study -----

struct StudyArgs {
    CorpusArgs corpus;
    std::size_t k = 1;
    std::size_t runs = 50;
    std::uint64_t seed = 0;
    std::size_t tfilt_budget = 0;
    int parallel = 1;
    std::string out_path, manifest;
    PredictorFlags flags;
};

int run_study(const StudyArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "study");
    echo_corpus(echo, a.corpus);
    echo.add("k", a.k)
        .add("runs", a.runs)
        .add("seed", a.seed)
        .add("tfilt-budget", a.tfilt_budget)
        .add("parallel", a.parallel);
    a.flags.echo(echo);
    echo.print(out);

    LoadedCorpus c = load_corpus(a.corpus);
    const StudyCorpus corpus{&c.wf.plan, &c.log, &c.cache};
    const PredictorConfig cfg = a.flags.to_config(a.seed);
    const StudyReport report =
        golden_study(cfg, a.k, a.runs, corpus, a.seed, a.tfilt_budget, a.parallel);
    out << render_study_table(report);
    if (!a.out_path.empty()) write_file(a.out_path, render_study_csv(report));
    if (!a.manifest.empty()) {
        PathPairs outputs;
        if (!a.out_path.empty()) outputs.emplace_back("report", a.out_path);
        write_manifest(a.manifest, "study", a.seed,
                       {{"cache", a.corpus.cache_path},
                        {"simlog", a.corpus.simlog_path},
                        {"workflow", a.corpus.workflow_path}},
                       outputs, &cfg);
    }
    return 0;
}

// ----- sweep -----

struct SweepArgs {
    CorpusArgs corpus;
    std::size_t k = 1;
    std::size_t runs = 10;
    std::uint64_t seed = 0;
    std::size_t tfilt_budget = 0;
    int parallel = 1;
    std::string out_path, manifest;
    PredictorFlags flags;
    std::vector<std::size_t> p_list{20};
    std::vector<double> s_list{1000};
    std::vector<std::size_t> i_list{32};
    std::vector<double> ratio_list{50};
    std::vector<std::string> fn_list{"SQD"};
};

std::string render_sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out =
        "P,S,I,ratio,fn,completed,excluded,E_star_avg,E_star_median,F_star_avg,F_star_median,"
        "MAPE_E_avg,MAPE_E_median,MAPE_F_avg,MAPE_F_median,d_ms_avg,d_ms_median,status\n";
    const auto agg = [](const Aggregate& a) {
        return format_sig(a.average, 9) + ',' + format_sig(a.median, 9);
    };
    for (const SweepRow& row : rows) {
        out += std::to_string(row.config.max_evaluations);
        out += ',';
        out += format_double(row.config.primary_window);
        out += ',';
        out += std::to_string(row.config.max_iterations);
        out += ',';
        out += format_double(row.config.secondary_span_ratio);
        out += ',';
        out += to_string(row.config.fn);
        out += ',';
        if (row.ok) {
            const AggregateSet& s = row.report.aggregates;
            out += std::to_string(s.completed);
            out += ',';
            out += std::to_string(s.excluded);
            out += ',';
            out += agg(s.e_star) + ',' + agg(s.f_star) + ',' + agg(s.mape_e) + ',' +
                   agg(s.mape_f) + ',' + agg(s.d_ms);
            out += ",ok\n";
        } else {
            std::string reason = row.failure;
            std::replace(reason.begin(), reason.end(), ',', ';');
            out += "0,0,,,,,,,,,,," + reason + '\n';
        }
    }
    return out;
}

int run_sweep(const SweepArgs& a, std::ostream& out) {
    ConfigEcho echo;
    echo.add("command", "sweep");
    echo_corpus(echo, a.corpus);
    echo.add("k", a.k)
        .add("runs", a.runs)
        .add("seed", a.seed)
        .add("tfilt-budget", a.tfilt_budget)
        .add("parallel", a.parallel)
        .add("fn-list", join_paths(a.fn_list))
        .add("cells", a.p_list.size() * a.s_list.size() * a.i_list.size() * a.ratio_list.size() *
                          a.fn_list.size());
    a.flags.echo(echo);
    echo.print(out);

    LoadedCorpus c = load_corpus(a.corpus);
    const StudyCorpus corpus{&c.wf.plan, &c.log, &c.cache};
    const PredictorConfig base = a.flags.to_config(a.seed);
    SweepGrid grid;
    grid.evaluations = a.p_list;
    grid.windows = a.s_list;
    grid.iterations = a.i_list;
    grid.ratios = a.ratio_list;
    for (const std::string& name : a.fn_list)
        grid.fns.push_back(*error_function_from_string(name));
    const std::vector<SweepRow> rows =
        parameter_sweep(base, grid, a.k, a.runs, corpus, a.seed, a.tfilt_budget, a.parallel);
    const std::string csv = render_sweep_csv(rows);
    if (a.out_path.empty())
        out << csv;
    else
        write_file(a.out_path, csv);
    if (!a.manifest.empty()) {
        PathPairs outputs;
        if (!a.out_path.empty()) outputs.emplace_back("table", a.out_path);
        write_manifest(a.manifest, "sweep", a.seed,
                       {{"cache", a.corpus.cache_path},
                        {"simlog", a.corpus.simlog_path},
                        {"workflow", a.corpus.workflow_path}},
                       outputs, &base);
    }
    out << "swept " << rows.size() << " cells\n";
    return 0;
}

} // namespace

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Background-workload prediction from historic traces", "backcast"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic periodic trace");
    synth->add_option("--seed", synth_args.seed, "random seed");
    synth->add_option("--jobs", synth_args.profile.n_jobs, "job count")
        ->check(CLI::PositiveNumber);
    synth->add_option("--mean-runtime", synth_args.profile.mean_runtime,
                      "mean job runtime in seconds");
    synth->add_option("--burstiness", synth_args.profile.burstiness,
                      "arrival-rate swing in [0, 1]");
    synth->add_option("--period", synth_args.profile.period, "load-cycle period in seconds");
    synth->add_option("--interarrival", synth_args.profile.mean_interarrival,
                      "mean interarrival in seconds");
    synth->add_option("--max-cores", synth_args.profile.max_cores, "largest per-job core count");
    synth->add_option("--out", synth_args.out_path, "trace file to write")->required();
    synth->add_option("--manifest", synth_args.manifest, "manifest file to write");

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand("ingest", "Parse and normalise trace files");
    ingest->add_option("inputs", ingest_args.inputs, "trace files to read")
        ->required()
        ->expected(-1);
    ingest->add_option("--gap", ingest_args.gap, "seconds between joined archives");
    ingest->add_option("--out", ingest_args.out_path, "archive file to write")->required();
    ingest->add_option("--manifest", ingest_args.manifest, "manifest file to write");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Replay fragments under the workflow");
    simulate->add_option("--archive", sim_args.archive_path, "ingested trace file")->required();
    simulate->add_option("--workflow", sim_args.workflow_path, "workflow description file")
        ->required();
    simulate->add_option("--cloud", sim_args.cloud_path, "cloud description file")->required();
    simulate->add_option("--duration", sim_args.duration, "fragment window in seconds")
        ->required()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--stride", sim_args.stride, "keep every Nth fragment")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--limit", sim_args.limit, "cap on fragments (0 keeps all)");
    simulate->add_option("--warmup", sim_args.sim.warmup_jobs,
                         "background jobs started before injection");
    simulate->add_option("--bg-image", sim_args.sim.background_vm_image,
                         "background VM image bytes (0 skips the copy)");
    simulate->add_option("--bg-mem", sim_args.sim.background_vm_memory,
                         "background VM memory bytes");
    simulate->add_option("--seed", sim_args.sim.seed, "random seed");
    simulate->add_option("--parallel", sim_args.parallel, "worker threads")
        ->check(CLI::PositiveNumber);
    simulate->add_option("--out", sim_args.out_path, "simulation log to write")->required();
    simulate->add_option("--manifest", sim_args.manifest, "manifest file to write");

    CacheArgs cache_args;
    CLI::App* cache = app.add_subcommand("cache", "Precompute past and future errors");
    cache->add_option("--simlog", cache_args.simlog_path, "simulation log file")->required();
    cache->add_option("--workflow", cache_args.workflow_path, "workflow description file")
        ->required();
    cache->add_option("--id", cache_args.id, "workflow identifier stored in the cache");
    cache->add_option("--out", cache_args.out_path, "cache file to write")->required();
    cache->add_option("--manifest", cache_args.manifest, "manifest file to write");

    PredictArgs predict_args;
    CLI::App* predict = app.add_subcommand("predict", "Pick the best-matching fragment");
    predict->add_option("--cache", predict_args.corpus.cache_path, "error cache file")
        ->required();
    predict->add_option("--simlog", predict_args.corpus.simlog_path, "simulation log file")
        ->required();
    predict->add_option("--workflow", predict_args.corpus.workflow_path,
                        "workflow description file")
        ->required();
    predict->add_option("--k", predict_args.k, "completed parallel sections")->required();
    predict->add_option("--seed", predict_args.seed, "random seed");
    CLI::Option* golden_opt =
        predict->add_option("--golden", predict_args.golden,
                            "fragment whose simulated observations replay as the live run");
    predict->add_option("--obs", predict_args.obs_path, "file of observed durations")
        ->excludes(golden_opt);
    predict->add_option("--tfilt-budget", predict_args.tfilt_budget,
                        "candidate timestamps kept by pre-filtering (0 keeps all)");
    predict->add_option("--out", predict_args.out_path, "outcome file to write");
    predict->add_option("--manifest", predict_args.manifest, "manifest file to write");
    predict_args.flags.attach(predict);

    StudyArgs study_args;
    CLI::App* study = app.add_subcommand("study", "Golden-fragment accuracy study");
    study->add_option("--cache", study_args.corpus.cache_path, "error cache file")->required();
    study->add_option("--simlog", study_args.corpus.simlog_path, "simulation log file")
        ->required();
    study->add_option("--workflow", study_args.corpus.workflow_path,
                      "workflow description file")
        ->required();
    study->add_option("--k", study_args.k, "completed parallel sections")->required();
    study->add_option("--runs", study_args.runs, "golden runs")->check(CLI::PositiveNumber);
    study->add_option("--seed", study_args.seed, "random seed");
    study->add_option("--tfilt-budget", study_args.tfilt_budget,
                      "candidate timestamps kept per run (0 keeps all)");
    study->add_option("--parallel", study_args.parallel, "worker threads")
        ->check(CLI::PositiveNumber);
    study->add_option("--out", study_args.out_path, "per-run table to write");
    study->add_option("--manifest", study_args.manifest, "manifest file to write");
    study_args.flags.attach(study);

    SweepArgs sweep_args;
    CLI::App* sweep = app.add_subcommand("sweep", "Parameter study over a config grid");
    sweep->add_option("--cache", sweep_args.corpus.cache_path, "error cache file")->required();
    sweep->add_option("--simlog", sweep_args.corpus.simlog_path, "simulation log file")
        ->required();
    sweep->add_option("--workflow", sweep_args.corpus.workflow_path,
                      "workflow description file")
        ->required();
    sweep->add_option("--k", sweep_args.k, "completed parallel sections")->required();
    sweep->add_option("--runs", sweep_args.runs, "golden runs per cell")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--seed", sweep_args.seed, "random seed");
    sweep->add_option("--tfilt-budget", sweep_args.tfilt_budget,
                      "candidate timestamps kept per run (0 keeps all)");
    sweep->add_option("--parallel", sweep_args.parallel, "worker threads")
        ->check(CLI::PositiveNumber);
    sweep->add_option("--P-list", sweep_args.p_list, "evaluation caps to sweep")
        ->delimiter(',');
    sweep->add_option("--S-list", sweep_args.s_list, "window spans to sweep")->delimiter(',');
    sweep->add_option("--I-list", sweep_args.i_list, "iteration caps to sweep")->delimiter(',');
    sweep->add_option("--ratio-list", sweep_args.ratio_list, "secondary ratios to sweep")
        ->delimiter(',');
    sweep->add_option("--fn-list", sweep_args.fn_list, "error functions to sweep")
        ->delimiter(',')
        ->check(CLI::IsMember({"SQD", "MAPE", "TADJ_SQD"}));
    sweep->add_option("--out", sweep_args.out_path, "cell table to write");
    sweep->add_option("--manifest", sweep_args.manifest, "manifest file to write");
    sweep_args.flags.attach(sweep);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return run_synth(synth_args, out);
        if (ingest->parsed()) return run_ingest(ingest_args, out);
        if (simulate->parsed()) return run_simulate(sim_args, out);
        if (cache->parsed()) return run_cache(cache_args, out);
        if (predict->parsed()) return run_predict(predict_args, out);
        if (study->parsed()) return run_study(study_args, out);
        if (sweep->parsed()) return run_sweep(sweep_args, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    err << "error: no subcommand selected\n";
    return 1;
}

} // namespace backcast::cli
