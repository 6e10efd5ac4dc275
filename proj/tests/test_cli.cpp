#include "fixlocus/synth.hpp"
#include "fixlocus/trace_io.hpp"

#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace fixlocus;

namespace {

std::string binary_path() {
    const char* path = std::getenv("FIXLOCUS_BIN");
    REQUIRE_MESSAGE(path != nullptr,
                    "FIXLOCUS_BIN must point at the fixlocus binary (ctest sets it)");
    return path;
}

struct TempDir {
    fs::path path;

    TempDir() {
        auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path = fs::temp_directory_path() /
               ("fixlocus_test_" + std::to_string(::getpid()) + "_" + std::to_string(stamp));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run(const std::string& args) {
    std::string cmd = binary_path() + " " + args + " 2>/dev/null";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void spit(const fs::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary);
    out << data;
}

} // namespace

TEST_CASE("synth writes the trace pair and ground truth") {
    TempDir tmp;
    CHECK(run("synth goodweather --out-dir " + (tmp.path / "gw").string()) == 0);
    CHECK(fs::exists(tmp.path / "gw" / "baseline.trace"));
    CHECK(fs::exists(tmp.path / "gw" / "failure.trace"));
    CHECK(fs::exists(tmp.path / "gw" / "truth.txt"));

    CHECK(run("synth nosuch-scenario --out-dir " + (tmp.path / "x").string()) == 1);
}

TEST_CASE("filter-methods exit codes") {
    TempDir tmp;
    run("synth goodweather --out-dir " + tmp.path.string());
    fs::path trace = tmp.path / "baseline.trace";
    fs::path out = tmp.path / "methods.txt";

    CHECK(run("filter-methods --trace " + trace.string() +
              " --app-package org.asdtm.goodweather --out " + out.string()) == 0);
    std::ifstream in(out);
    MethodList list = parse_method_list(in);
    CHECK(list.methods.size() >= 4);

    // wrong package prefix
    CHECK(run("filter-methods --trace " + trace.string() + " --app-package com.wrong --out " +
              (tmp.path / "none.txt").string()) == 2);

    // malformed input
    spit(tmp.path / "broken.trace", "#trace v1 app=a.b env=x\nnot-a-line\n");
    CHECK(run("filter-methods --trace " + (tmp.path / "broken.trace").string() +
              " --app-package a.b --out " + (tmp.path / "none2.txt").string()) == 1);
}

TEST_CASE("detect exit codes") {
    TempDir tmp;
    run("synth goodweather --out-dir " + tmp.path.string());
    fs::path baseline = tmp.path / "baseline.trace";
    fs::path failure = tmp.path / "failure.trace";

    CHECK(run("detect --baseline " + baseline.string() + " --failure " + failure.string() +
              " --out-report " + (tmp.path / "sibs.csv").string()) == 0);
    CHECK(slurp(tmp.path / "sibs.csv").starts_with("sib,kind,weight"));

    // identical pair: nothing to report
    CHECK(run("detect --baseline " + baseline.string() + " --failure " + baseline.string() +
              " --out-report " + (tmp.path / "empty.csv").string()) == 3);
    CHECK_FALSE(fs::exists(tmp.path / "empty.csv"));

    // app mismatch
    Trace other;
    other.app_package = "com.other";
    other.env_label = "x";
    spit(tmp.path / "other.trace", write_trace(other));
    CHECK(run("detect --baseline " + baseline.string() + " --failure " +
              (tmp.path / "other.trace").string() + " --out-report " +
              (tmp.path / "no.csv").string()) == 1);
}

TEST_CASE("rank produces the csv and dot pair and leaves inputs untouched") {
    TempDir tmp;
    run("synth goodweather --out-dir " + tmp.path.string());
    fs::path baseline = tmp.path / "baseline.trace";
    fs::path failure = tmp.path / "failure.trace";
    std::string baseline_before = slurp(baseline);

    fs::path csv = tmp.path / "ranking.csv";
    fs::path dot = tmp.path / "tree.dot";
    CHECK(run("rank --baseline " + baseline.string() + " --failure " + failure.string() +
              " --out-csv " + csv.string() + " --out-dot " + dot.string()) == 0);

    std::string ranking = slurp(csv);
    CHECK(ranking.starts_with("rank,method,score,S,D,evidence\n"));
    CHECK(ranking.find("gpsRequestLocation") != std::string::npos);
    CHECK(slurp(dot).starts_with("digraph failure_call_tree {"));
    CHECK(slurp(baseline) == baseline_before);

    // identical pair writes nothing
    CHECK(run("rank --baseline " + baseline.string() + " --failure " + baseline.string() +
              " --out-csv " + (tmp.path / "n.csv").string() + " --out-dot " +
              (tmp.path / "n.dot").string()) == 3);
    CHECK_FALSE(fs::exists(tmp.path / "n.csv"));
    CHECK_FALSE(fs::exists(tmp.path / "n.dot"));
}

TEST_CASE("rank exits with 4 when no app method reaches a block") {
    // the only difference sits before any failure event, so it anchors at
    // the entry point and no app method can explain it
    TempDir tmp;
    const MethodRef entry = synthetic_entry_point();
    const MethodRef app_m{"app.demo", "Flow", "run", ""};
    auto api = [&](std::int64_t seq, const std::string& name) {
        TraceEvent ev;
        ev.seq = seq;
        ev.thread = 1;
        ev.direction = Direction::ApiCall;
        ev.callee = {"fw.api", "Service", name, ""};
        ev.ret = ReturnValue::void_value();
        ev.stack = {{entry, Origin::Framework}, {app_m, Origin::App}};
        return ev;
    };
    auto cb = [&](std::int64_t seq, const std::string& name) {
        TraceEvent ev;
        ev.seq = seq;
        ev.thread = 1;
        ev.direction = Direction::Callback;
        ev.callee = {"app.demo", "Handler", name, ""};
        ev.ret = ReturnValue::void_value();
        ev.stack = {{entry, Origin::Framework}};
        return ev;
    };
    Trace baseline{"app.demo", "b", {api(0, "x1"), api(1, "x2"), cb(2, "onA"), cb(3, "onB")}};
    Trace failure{"app.demo", "f", {cb(0, "onA"), cb(1, "onB")}};
    spit(tmp.path / "b.trace", write_trace(baseline));
    spit(tmp.path / "f.trace", write_trace(failure));

    CHECK(run("rank --baseline " + (tmp.path / "b.trace").string() + " --failure " +
              (tmp.path / "f.trace").string() + " --out-csv " + (tmp.path / "r.csv").string() +
              " --out-dot " + (tmp.path / "r.dot").string()) == 4);
}

TEST_CASE("rank runs twice with byte-identical outputs") {
    TempDir tmp;
    run("synth goodweather --out-dir " + tmp.path.string());
    auto invoke = [&](const std::string& tag) {
        fs::path csv = tmp.path / (tag + ".csv");
        fs::path dot = tmp.path / (tag + ".dot");
        CHECK(run("rank --baseline " + (tmp.path / "baseline.trace").string() + " --failure " +
                  (tmp.path / "failure.trace").string() + " --out-csv " + csv.string() +
                  " --out-dot " + dot.string()) == 0);
        return slurp(csv) + "\x01" + slurp(dot);
    };
    CHECK(invoke("first") == invoke("second"));
}

TEST_CASE("compare evaluates a corpus directory") {
    TempDir tmp;
    fs::path corpus = tmp.path / "corpus";
    run("synth goodweather --out-dir " + (corpus / "gw").string());

    // a second scenario from a spec file, plus a coverage matrix
    spit(tmp.path / "demo.scenario",
         "#scenario v1 app=com.demo.app\n"
         "kind\tINSERT_BLOCK\n"
         "site\tcom.demo.app.Flow.load()\n"
         "block\t3\n"
         "noise\t5\n"
         "seed\t9\n"
         "root\tcom.demo.app.Main.start()\n"
         "api\tcom.demo.app.Main.start()\tfw.ui.Window.open()\t-\tvoid\n"
         "call\tcom.demo.app.Main.start()\tcom.demo.app.Flow.load()\n"
         "api\tcom.demo.app.Flow.load()\tfw.io.Disk.read(String)\t/cfg\tdata\n");
    CHECK(run("synth " + (tmp.path / "demo.scenario").string() + " --out-dir " +
              (corpus / "demo").string()) == 0);
    spit(corpus / "demo" / "coverage.matrix",
         "#coverage v1\n"
         "t1\tFAIL\tcom.demo.app.Flow.load()\n"
         "t2\tPASS\tcom.demo.app.Main.start()\n");

    fs::path report = tmp.path / "report.csv";
    CHECK(run("compare --corpus " + corpus.string() + " --jobs 2 --out-report " +
              report.string()) == 0);
    std::string csv = slurp(report);
    CHECK(csv.starts_with("scenario,fixlocus,naive,ochiai\n"));
    CHECK(csv.find("\ndemo,1,2,1\n") != std::string::npos); // fix first, naive second, ochiai first
    CHECK(csv.find("\ngw,1,1,-\n") != std::string::npos);  // no coverage matrix: ochiai is "-"
    CHECK(csv.find("Top-1,") != std::string::npos);
    CHECK(csv.find("Not in the ranking,") != std::string::npos);

    // deterministic
    fs::path report2 = tmp.path / "report2.csv";
    CHECK(run("compare --corpus " + corpus.string() + " --jobs 4 --out-report " +
              report2.string()) == 0);
    CHECK(slurp(report2) == csv);

    // empty corpus
    fs::create_directories(tmp.path / "empty");
    CHECK(run("compare --corpus " + (tmp.path / "empty").string() + " --out-report " +
              (tmp.path / "r.csv").string()) == 1);
}

TEST_CASE("synth with a fixed spec and seed is reproducible") {
    TempDir tmp;
    spit(tmp.path / "s.scenario",
         "#scenario v1 app=com.demo.app\n"
         "kind\tREPLACE_BLOCK\n"
         "site\tcom.demo.app.Main.start()\n"
         "block\t2\n"
         "noise\t20\n"
         "seed\t31\n"
         "root\tcom.demo.app.Main.start()\n"
         "api\tcom.demo.app.Main.start()\tfw.ui.Window.open()\t-\tvoid\n");
    CHECK(run("synth " + (tmp.path / "s.scenario").string() + " --out-dir " +
              (tmp.path / "a").string()) == 0);
    CHECK(run("synth " + (tmp.path / "s.scenario").string() + " --out-dir " +
              (tmp.path / "b").string()) == 0);
    CHECK(slurp(tmp.path / "a" / "baseline.trace") == slurp(tmp.path / "b" / "baseline.trace"));
    CHECK(slurp(tmp.path / "a" / "failure.trace") == slurp(tmp.path / "b" / "failure.trace"));
    CHECK(slurp(tmp.path / "a" / "truth.txt") == slurp(tmp.path / "b" / "truth.txt"));

    // invalid spec: site missing from the topology
    spit(tmp.path / "bad.scenario",
         "#scenario v1 app=com.demo.app\n"
         "kind\tINSERT_BLOCK\n"
         "site\tcom.demo.app.Ghost.gone()\n"
         "root\tcom.demo.app.Main.start()\n"
         "api\tcom.demo.app.Main.start()\tfw.ui.Window.open()\t-\tvoid\n");
    CHECK(run("synth " + (tmp.path / "bad.scenario").string() + " --out-dir " +
              (tmp.path / "bad").string()) == 1);
}
