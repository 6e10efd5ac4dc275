#include "fixlocus/baselines.hpp"
#include "fixlocus/call_tree.hpp"
#include "fixlocus/diff.hpp"
#include "fixlocus/errors.hpp"
#include "fixlocus/ranker.hpp"
#include "fixlocus/synth.hpp"
#include "fixlocus/trace_io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using namespace fixlocus;

namespace {

// exit code protocol, kept machine-readable for CI use
constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kEmptyFilter = 2;
constexpr int kNoDifferences = 3;
constexpr int kEmptyRanking = 4;

bool color_enabled() {
    return std::getenv("FIXLOCUS_NO_COLOR") == nullptr;
}

void log_error(const std::string& message) {
    if (color_enabled()) {
        std::cerr << "\x1b[31merror:\x1b[0m " << message << "\n";
    } else {
        std::cerr << "error: " << message << "\n";
    }
}

void log_info(const std::string& message) {
    std::cerr << message << "\n";
}

void write_output(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write output file '" + path + "'");
    }
    out << data;
}

std::vector<NormalizeRule> load_rules(const std::string& path) {
    if (path.empty()) {
        return {};
    }
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open pattern file '" + path + "'");
    }
    return parse_normalize_rules(in);
}

Trace load_trace(const std::string& path, const std::vector<NormalizeRule>& rules) {
    Trace trace = parse_trace_file(path);
    if (!rules.empty()) {
        trace = apply_normalize_rules(std::move(trace), rules);
    }
    return trace;
}

struct PipelineOptions {
    std::string baseline_path;
    std::string failure_path;
    std::string pattern_path;
    bool value_sensitive = false;
    bool per_thread = false;
};

std::vector<Sib> detect_sibs(const Trace& baseline, const Trace& failure,
                             const PipelineOptions& opts) {
    if (opts.per_thread) {
        return extract_sibs_per_thread(baseline, failure, opts.value_sensitive);
    }
    return extract_sibs(diff_traces(baseline, failure, opts.value_sensitive), baseline, failure);
}

int cmd_filter_methods(const std::string& trace_path, const std::string& app_package,
                       const std::string& out_path) {
    Trace trace = parse_trace_file(trace_path);
    MethodList list;
    try {
        list = filter_boundary_methods(trace, app_package);
    } catch (const EmptyResult& e) {
        log_error(e.what());
        return kEmptyFilter;
    }
    write_output(out_path, write_method_list(list));
    log_info("wrote " + std::to_string(list.methods.size()) + " boundary methods");
    return kOk;
}

int cmd_detect(const PipelineOptions& opts, const std::string& out_path) {
    auto rules = load_rules(opts.pattern_path);
    Trace baseline = load_trace(opts.baseline_path, rules);
    Trace failure = load_trace(opts.failure_path, rules);
    auto sibs = detect_sibs(baseline, failure, opts);
    if (sibs.empty()) {
        log_info("no behavioral differences");
        return kNoDifferences;
    }
    write_output(out_path, write_sib_report(sibs));
    log_info("detected " + std::to_string(sibs.size()) + " suspicious invocation block(s)");
    return kOk;
}

int cmd_rank(const PipelineOptions& opts, const std::string& csv_path,
             const std::string& dot_path) {
    auto rules = load_rules(opts.pattern_path);
    Trace baseline = load_trace(opts.baseline_path, rules);
    Trace failure = load_trace(opts.failure_path, rules);
    auto sibs = detect_sibs(baseline, failure, opts);
    if (sibs.empty()) {
        log_info("no behavioral differences");
        return kNoDifferences;
    }
    FailureCallTree tree = build_failure_tree(failure, sibs);
    std::vector<RankedCandidate> ranking;
    try {
        ranking = rank(tree, sibs, failure.app_package);
    } catch (const EmptyRanking& e) {
        log_error(e.what());
        return kEmptyRanking;
    }
    write_output(csv_path, emit_csv(ranking));
    write_output(dot_path, emit_dot(tree));
    log_info("ranked " + std::to_string(ranking.size()) + " candidate method(s)");
    return kOk;
}

int cmd_synth(const std::string& source, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override) {
    GeneratedScenario scenario;
    if (auto builtin = builtin_scenario(source)) {
        scenario = std::move(*builtin);
    } else {
        ScenarioSpec spec = parse_scenario_file(source);
        if (seed_override) {
            spec.seed = *seed_override;
        }
        scenario = generate_scenario(spec);
    }
    fs::create_directories(out_dir);
    write_trace_file(scenario.baseline, (fs::path(out_dir) / "baseline.trace").string());
    write_trace_file(scenario.failure, (fs::path(out_dir) / "failure.trace").string());
    {
        fs::path truth_path = fs::path(out_dir) / "truth.txt";
        std::ofstream out(truth_path, std::ios::binary);
        if (!out) {
            throw Error("cannot write '" + truth_path.string() + "'");
        }
        out << write_ground_truth(scenario.truth, scenario.baseline.app_package);
    }
    log_info("wrote baseline.trace, failure.trace, truth.txt to " + out_dir);
    return kOk;
}

struct ScenarioDir {
    std::string name;
    fs::path dir;
};

ScenarioOutcome evaluate_scenario(const ScenarioDir& sdir, bool value_sensitive,
                                  const std::vector<NormalizeRule>& rules) {
    ScenarioOutcome outcome;
    outcome.name = sdir.name;
    outcome.rankings["fixlocus"] = std::nullopt;
    outcome.rankings["naive"] = std::nullopt;
    outcome.rankings["ochiai"] = std::nullopt;

    Trace baseline = load_trace((sdir.dir / "baseline.trace").string(), rules);
    Trace failure = load_trace((sdir.dir / "failure.trace").string(), rules);
    {
        std::ifstream in(sdir.dir / "truth.txt");
        if (!in) {
            throw Error("missing truth.txt in " + sdir.dir.string());
        }
        GroundTruth truth = parse_ground_truth(in);
        for (const auto& m : truth.fix_methods) {
            outcome.truth.insert(m.canonical());
        }
    }

    auto hunks = diff_traces(baseline, failure, value_sensitive);
    auto sibs = extract_sibs(hunks, baseline, failure);
    if (!sibs.empty()) {
        try {
            FailureCallTree tree = build_failure_tree(failure, sibs);
            auto ranked = rank(tree, sibs, failure.app_package);
            std::vector<std::string> names;
            names.reserve(ranked.size());
            for (const auto& cand : ranked) {
                names.push_back(cand.method.canonical());
            }
            outcome.rankings["fixlocus"] = std::move(names);
        } catch (const EmptyRanking&) {
            // counted as not-in-ranking
        }
    }

    {
        std::vector<std::string> names;
        for (const auto& m : naive_ranking(baseline, failure)) {
            names.push_back(m.canonical());
        }
        outcome.rankings["naive"] = std::move(names);
    }

    if (fs::exists(sdir.dir / "coverage.matrix")) {
        std::ifstream in(sdir.dir / "coverage.matrix");
        CoverageMatrix matrix = parse_coverage(in);
        std::vector<std::string> names;
        for (const auto& [entity, score] : ochiai(matrix)) {
            if (score > 0.0) {
                names.push_back(entity);
            }
        }
        outcome.rankings["ochiai"] = std::move(names);
    }
    return outcome;
}

int cmd_compare(const std::string& corpus_dir, int jobs, bool value_sensitive,
                const std::string& pattern_path, const std::string& out_path) {
    auto rules = load_rules(pattern_path);

    std::vector<ScenarioDir> dirs;
    if (!fs::is_directory(corpus_dir)) {
        log_error("corpus directory '" + corpus_dir + "' does not exist");
        return kInputError;
    }
    for (const auto& entry : fs::directory_iterator(corpus_dir)) {
        if (entry.is_directory() && fs::exists(entry.path() / "baseline.trace")) {
            dirs.push_back({entry.path().filename().string(), entry.path()});
        }
    }
    std::sort(dirs.begin(), dirs.end(),
              [](const ScenarioDir& a, const ScenarioDir& b) { return a.name < b.name; });
    if (dirs.empty()) {
        log_error("no scenarios in '" + corpus_dir + "'");
        return kInputError;
    }

    std::vector<ScenarioOutcome> outcomes(dirs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&]() {
        while (true) {
            std::size_t index = next.fetch_add(1);
            if (index >= dirs.size()) {
                return;
            }
            try {
                outcomes[index] = evaluate_scenario(dirs[index], value_sensitive, rules);
            } catch (const std::exception& e) {
                failures.fetch_add(1);
                ScenarioOutcome broken;
                broken.name = dirs[index].name;
                broken.rankings["fixlocus"] = std::nullopt;
                broken.rankings["naive"] = std::nullopt;
                broken.rankings["ochiai"] = std::nullopt;
                outcomes[index] = std::move(broken);
                log_error(dirs[index].name + ": " + e.what());
            }
        }
    };
    int degree = std::max(1, jobs);
    if (degree == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < degree; ++i) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    write_output(out_path, write_comparison_csv({"fixlocus", "naive", "ochiai"}, outcomes));
    log_info("compared " + std::to_string(dirs.size()) + " scenario(s), " +
             std::to_string(failures.load()) + " failed");
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fault localization for framework-upgrade regressions: compares a "
                 "passing-environment trace with a failing-environment trace and ranks "
                 "the app methods most likely to need the fix."};
    app.require_subcommand(1);

    std::string trace_path, app_package, out_path;
    PipelineOptions pipeline;
    std::string csv_path = "ranking.csv";
    std::string dot_path = "failure-tree.dot";
    std::string synth_source, synth_out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::string corpus_dir;
    int jobs = 1;

    auto* filter = app.add_subcommand("filter-methods",
                                      "Extract the boundary methods to instrument from a "
                                      "full method trace");
    filter->add_option("--trace", trace_path, "Trace file")->required();
    filter->add_option("--app-package", app_package, "App root package name")->required();
    filter->add_option("--out", out_path, "Method list output (stdout when omitted)");

    auto add_pipeline_options = [&](CLI::App* cmd) {
        cmd->add_option("--baseline", pipeline.baseline_path, "Passing-environment trace")
            ->required();
        cmd->add_option("--failure", pipeline.failure_path, "Failing-environment trace")
            ->required();
        cmd->add_flag("--value-sensitive", pipeline.value_sensitive,
                      "Treat calls with different arguments/returns as different");
        cmd->add_flag("--per-thread", pipeline.per_thread,
                      "Diff each thread's interactions separately");
        cmd->add_option("--normalize", pipeline.pattern_path,
                        "Extra value normalization patterns (pattern<TAB>replacement per line)");
    };

    auto* detect = app.add_subcommand("detect",
                                      "Diff the traces and report suspicious invocation blocks");
    add_pipeline_options(detect);
    detect->add_option("--out-report", out_path, "Block report output (stdout when omitted)");

    auto* rank_cmd = app.add_subcommand("rank",
                                        "Run the full pipeline and write the candidate "
                                        "ranking (CSV) and failure call tree (DOT)");
    add_pipeline_options(rank_cmd);
    rank_cmd->add_option("--out-csv", csv_path, "Ranking output (default ranking.csv)");
    rank_cmd->add_option("--out-dot", dot_path, "Call tree output (default failure-tree.dot)");

    auto* synth = app.add_subcommand("synth",
                                     "Generate a baseline/failure trace pair with known "
                                     "ground truth from a scenario file or built-in name");
    synth->add_option("scenario", synth_source, "Scenario file path or built-in name")
        ->required();
    synth->add_option("--out-dir", synth_out_dir, "Output directory (default .)");
    synth->add_option("--seed", seed_override, "Override the scenario seed");

    auto* compare = app.add_subcommand("compare",
                                       "Evaluate techniques over a corpus of scenario "
                                       "directories and write a comparison report");
    compare->add_option("--corpus", corpus_dir, "Directory of scenario directories")->required();
    compare->add_option("--jobs", jobs, "Parallel scenario evaluations (default 1)")
        ->check(CLI::PositiveNumber);
    compare->add_flag("--value-sensitive", pipeline.value_sensitive,
                      "Value-sensitive diffing for the trace techniques");
    compare->add_option("--normalize", pipeline.pattern_path, "Extra normalization patterns");
    compare->add_option("--out-report", out_path, "Report output (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (filter->parsed()) {
            return cmd_filter_methods(trace_path, app_package, out_path);
        }
        if (detect->parsed()) {
            return cmd_detect(pipeline, out_path);
        }
        if (rank_cmd->parsed()) {
            return cmd_rank(pipeline, csv_path, dot_path);
        }
        if (synth->parsed()) {
            return cmd_synth(synth_source, synth_out_dir, seed_override);
        }
        if (compare->parsed()) {
            return cmd_compare(corpus_dir, jobs, pipeline.value_sensitive,
                               pipeline.pattern_path, out_path);
        }
    } catch (const std::exception& e) {
        log_error(e.what());
        return kInputError;
    }
    return kOk;
}
