#include <doctest.h>

#include <backcast/metrics.hpp>
#include <backcast/textio.hpp>
#include <backcast/trace.hpp>
#include <backcast/workflow.hpp>

#include <json.hpp>

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../tools/cli.hpp"
#include "support.hpp"

using namespace backcast;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliResult r;
    r.code = cli::dispatch(std::move(args), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// One full artifact chain, produced through the real subcommands and
// shared read-only by the test cases below.
struct Pipeline {
    testsupport::TempDir dir;
    std::string trace, wf, cloud, sim, cache;
    double golden_t = 0;

    std::string path(const std::string& name) const { return dir.file(name); }
};

const Pipeline& pipeline() {
    static Pipeline instance;
    static const bool built = [] {
        Pipeline& p = instance;
        p.trace = p.path("trace.txt");
        p.wf = p.path("workflow.txt");
        p.cloud = p.path("cloud.txt");
        p.sim = p.path("sim.txt");
        p.cache = p.path("cache.txt");
        write_file(p.wf, testsupport::demo_workflow(3, 2, 0.25));
        write_file(p.cloud, testsupport::small_cloud(2, 6));

        auto step = [](std::vector<std::string> args) {
            CliResult r = run_cli(std::move(args));
            if (r.code != 0)
                throw std::runtime_error("pipeline step failed: " + r.err + r.out);
        };
        step({"synth", "--seed", "5", "--jobs", "700", "--mean-runtime", "40", "--burstiness",
              "0.9", "--period", "3000", "--interarrival", "10", "--max-cores", "3", "--out",
              p.trace});
        step({"simulate", "--archive", p.trace, "--workflow", p.wf, "--cloud", p.cloud,
              "--duration", "500", "--stride", "7", "--warmup", "10", "--seed", "1", "--parallel",
              "2", "--out", p.sim});
        step({"cache", "--simlog", p.sim, "--workflow", p.wf, "--id", "demo", "--out", p.cache});

        const ErrorCache cache = parse_error_cache(read_file(p.cache));
        if (cache.fragment_timestamps().empty())
            throw std::runtime_error("pipeline produced an empty cache");
        p.golden_t = cache.fragment_timestamps().front();
        return true;
    }();
    (void)built;
    return instance;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    if (!current.empty()) lines.push_back(current);
    return lines;
}

// Per-run study rows minus the wall-clock column, the one field reruns may
// legitimately change.
std::vector<std::string> csv_rows_without_timings(const std::string& csv) {
    std::vector<std::string> rows = split_lines(csv);
    for (std::string& row : rows) {
        const std::size_t cut = row.rfind(',');
        if (cut != std::string::npos) row.resize(cut);
    }
    return rows;
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"frobnicate"}).code == 1);
    CHECK(run_cli({"predict", "--simlog", "x", "--workflow", "y", "--k", "1"}).code == 1);
    CHECK(run_cli({"synth", "--jobs", "0", "--out", "t.txt"}).code == 1);
    CHECK(run_cli({"study", "--cache", "a", "--simlog", "b", "--workflow", "c", "--k", "1",
                   "--runs", "0"})
              .code == 1);
    CHECK(run_cli({"predict", "--cache", "a", "--simlog", "b", "--workflow", "c", "--k", "1",
                   "--fn", "WAT"})
              .code == 1);
}

TEST_CASE("help is not an error") {
    CliResult top = run_cli({"--help"});
    CHECK(top.code == 0);
    CHECK(top.out.find("backcast") != std::string::npos);
    CHECK(run_cli({"predict", "--help"}).code == 0);
}

TEST_CASE("synthetic traces are reproduced byte for byte") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string again = scratch.file("again.txt");
    CliResult r = run_cli({"synth", "--seed", "5", "--jobs", "700", "--mean-runtime", "40",
                           "--burstiness", "0.9", "--period", "3000", "--interarrival", "10",
                           "--max-cores", "3", "--out", again});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("command=synth") != std::string::npos);
    CHECK(r.out.find("wrote 700 jobs") != std::string::npos);
    CHECK(read_file(again) == read_file(p.trace));
}

TEST_CASE("ingest joins archives with the requested gap") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string joined = scratch.file("joined.txt");
    CliResult r = run_cli({"ingest", p.trace, p.trace, "--gap", "100", "--out", joined});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("ingested 1400 jobs") != std::string::npos);
    TraceArchive merged = parse_trace(read_file(joined));
    CHECK(merged.size() == 1400);

    CHECK(run_cli({"ingest", scratch.file("missing.txt"), "--out", joined}).code == 2);
}

TEST_CASE("simulation logs do not depend on the worker count") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string serial = scratch.file("serial.txt");
    CliResult r = run_cli({"simulate", "--archive", p.trace, "--workflow", p.wf, "--cloud",
                           p.cloud, "--duration", "500", "--stride", "7", "--warmup", "10",
                           "--seed", "1", "--parallel", "1", "--out", serial});
    REQUIRE(r.code == 0);
    CHECK(read_file(serial) == read_file(p.sim));
    SimLog log = parse_sim_log(read_file(serial));
    CHECK(log.entries.size() >= 20);

    CliResult none = run_cli({"simulate", "--archive", p.trace, "--workflow", p.wf, "--cloud",
                              p.cloud, "--duration", "1000000", "--out",
                              scratch.file("none.txt")});
    CHECK(none.code == 2);
    CHECK(none.err.find("no fragments fit") != std::string::npos);
}

TEST_CASE("cached errors reject a workflow of the wrong shape") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string other_wf = scratch.file("other.txt");
    write_file(other_wf, testsupport::demo_workflow(2, 2, 0.25));
    CliResult r = run_cli({"cache", "--simlog", p.sim, "--workflow", other_wf, "--out",
                           scratch.file("cache.txt")});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error:", 0) == 0);

    const std::string flat_wf = scratch.file("flat.txt");
    write_file(flat_wf,
               "PSSTART\nVMDEF VA=img,0,1,1000 RC=1,1,1048576 VAST=s DATA=s\nVMSEQ C10!a\n");
    CHECK(run_cli({"cache", "--simlog", p.sim, "--workflow", flat_wf, "--out",
                   scratch.file("flat-cache.txt")})
              .code == 2);
}

TEST_CASE("predict reports its selection and reproduces its artifact") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string outcome = scratch.file("outcome.txt");
    const std::string manifest = scratch.file("manifest.json");
    const std::string golden = format_double(p.golden_t);
    const std::vector<std::string> base = {
        "predict", "--cache", p.cache,  "--simlog", p.sim, "--workflow", p.wf,
        "--k",     "2",       "--seed", "3",        "--S", "300",        "--P",
        "6",       "--I",     "4",      "--ratio",  "10",  "--golden",   golden};

    std::vector<std::string> with_out = base;
    with_out.insert(with_out.end(), {"--out", outcome, "--manifest", manifest});
    CliResult r = run_cli(with_out);
    REQUIRE(r.code == 0);

    const std::vector<std::string> lines = split_lines(r.out);
    REQUIRE(!lines.empty());
    const std::string& last = lines.back();
    REQUIRE(last.rfind("t_target=", 0) == 0);
    CHECK(last.find(" iters=") != std::string::npos);
    CHECK(last.find(" d_ms=") != std::string::npos);

    const std::string t_text = last.substr(9, last.find(' ') - 9);
    const ErrorCache cache = parse_error_cache(read_file(p.cache));
    const auto& stamps = cache.fragment_timestamps();
    const double t_target = *parse_double(t_text);
    CHECK(std::find(stamps.begin(), stamps.end(), t_target) != stamps.end());

    // the outcome artifact has no wall-clock field, so a rerun matches
    const std::string first_artifact = read_file(outcome);
    CHECK(first_artifact.find("t_target " + t_text + "\n") == 0);
    std::vector<std::string> rerun = base;
    rerun.insert(rerun.end(), {"--out", outcome});
    REQUIRE(run_cli(rerun).code == 0);
    CHECK(read_file(outcome) == first_artifact);

    const nlohmann::json m = nlohmann::json::parse(read_file(manifest));
    CHECK(m["command"] == "predict");
    CHECK(m["seed"] == 3);
    CHECK(m["inputs"]["cache"] == p.cache);
    CHECK(m["outputs"]["outcome"] == outcome);
    CHECK(m["predictor"]["S"] == 300.0);
    CHECK(m["predictor"]["fn"] == "SQD");
}

TEST_CASE("replayed observations match the golden shortcut") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;

    // hand the same prefix over as an explicit observation file
    SimLog log = parse_sim_log(read_file(p.sim));
    const auto& obs = log.entries.at(p.golden_t).result->observed;
    const std::size_t prefix = k_real(2, SectionShape{3, 4});
    REQUIRE(obs.size() >= prefix);
    std::string obs_text;
    for (std::size_t i = 0; i < prefix; ++i) obs_text += format_double(obs[i]) + "\n";
    const std::string obs_path = scratch.file("obs.txt");
    write_file(obs_path, obs_text);

    const std::vector<std::string> common = {"--cache", p.cache,  "--simlog", p.sim,
                                             "--workflow", p.wf,  "--k",      "2",
                                             "--seed",     "3",   "--S",      "300",
                                             "--P",        "6",   "--I",      "4",
                                             "--ratio",    "10"};
    std::vector<std::string> via_golden = {"predict", "--golden", format_double(p.golden_t)};
    via_golden.insert(via_golden.end(), common.begin(), common.end());
    std::vector<std::string> via_obs = {"predict", "--obs", obs_path};
    via_obs.insert(via_obs.end(), common.begin(), common.end());

    CliResult a = run_cli(via_golden);
    CliResult b = run_cli(via_obs);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const std::string line_a = split_lines(a.out).back();
    const std::string line_b = split_lines(b.out).back();
    CHECK(line_a.substr(0, line_a.find(" d_ms=")) == line_b.substr(0, line_b.find(" d_ms=")));

    std::vector<std::string> both = via_obs;
    both.insert(both.end(), {"--golden", format_double(p.golden_t)});
    CHECK(run_cli(both).code == 1); // the two run sources exclude each other
}

TEST_CASE("predict rejects bad checkpoints and unknown fragments") {
    const Pipeline& p = pipeline();
    const std::vector<std::string> common = {"--cache", p.cache, "--simlog", p.sim,
                                             "--workflow", p.wf};
    auto with = [&](std::vector<std::string> extra) {
        std::vector<std::string> args = {"predict"};
        args.insert(args.end(), common.begin(), common.end());
        args.insert(args.end(), extra.begin(), extra.end());
        return run_cli(args);
    };
    CliResult zero = with({"--k", "0"});
    CHECK(zero.code == 2);
    CHECK(zero.err.rfind("error:", 0) == 0);
    CHECK(with({"--k", "9"}).code == 2);
    CHECK(with({"--k", "2", "--golden", "123456.675"}).code == 2);
}

TEST_CASE("a prediction without a named run draws its own golden fragment") {
    const Pipeline& p = pipeline();
    CliResult r = run_cli({"predict", "--cache", p.cache, "--simlog", p.sim, "--workflow", p.wf,
                           "--k", "2", "--seed", "8", "--S", "300", "--P", "6", "--I", "2",
                           "--ratio", "10"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("golden=") != std::string::npos);
}

TEST_CASE("studies render a table and a stable per-run file") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string csv2 = scratch.file("parallel.csv");
    const std::string csv1 = scratch.file("serial.csv");
    const std::vector<std::string> common = {
        "study", "--cache", p.cache, "--simlog", p.sim,  "--workflow", p.wf, "--k", "2",
        "--runs", "4",      "--seed", "9",       "--S",  "300",        "--P", "6",  "--I",
        "3",      "--ratio", "10"};

    std::vector<std::string> parallel = common;
    parallel.insert(parallel.end(), {"--parallel", "2", "--out", csv2});
    CliResult r = run_cli(parallel);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("study: 4 runs at checkpoint k=2") != std::string::npos);
    CHECK(r.out.find("baseline: random selection") != std::string::npos);

    std::vector<std::string> serial = common;
    serial.insert(serial.end(), {"--parallel", "1", "--out", csv1});
    REQUIRE(run_cli(serial).code == 0);

    const std::string header = "run_id, t_g, t_target, k, E_star, F_star, MAPE_E, MAPE_F, d_ms";
    std::vector<std::string> a = split_lines(read_file(csv2));
    REQUIRE(!a.empty());
    CHECK(a.front() == header);
    CHECK(csv_rows_without_timings(read_file(csv2)) ==
          csv_rows_without_timings(read_file(csv1)));
}

TEST_CASE("sweeps write one row per grid cell") {
    const Pipeline& p = pipeline();
    testsupport::TempDir scratch;
    const std::string table = scratch.file("sweep.csv");
    CliResult r = run_cli({"sweep", "--cache", p.cache, "--simlog", p.sim, "--workflow", p.wf,
                           "--k", "2", "--runs", "2", "--seed", "11", "--P-list", "4,6",
                           "--S-list", "300", "--I-list", "2", "--ratio-list", "10", "--fn-list",
                           "SQD,MAPE", "--out", table});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("swept 4 cells") != std::string::npos);
    std::vector<std::string> lines = split_lines(read_file(table));
    REQUIRE(lines.size() == 5);
    CHECK(lines[0].rfind("P,S,I,ratio,fn,", 0) == 0);
    CHECK(lines[1].rfind("4,300,2,10,SQD,", 0) == 0);
    CHECK(lines[2].rfind("4,300,2,10,MAPE,", 0) == 0);
    CHECK(lines[3].rfind("6,300,2,10,SQD,", 0) == 0);
    CHECK(lines[4].rfind("6,300,2,10,MAPE,", 0) == 0);
}

TEST_SUITE_END();
