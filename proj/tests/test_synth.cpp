#include "fixlocus/synth.hpp"

#include "fixlocus/call_tree.hpp"
#include "fixlocus/diff.hpp"
#include "fixlocus/errors.hpp"
#include "fixlocus/ranker.hpp"
#include "fixlocus/trace_io.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>
#include <sstream>

using namespace fixlocus;
using namespace fixlocus::testing;

namespace {

ScenarioSpec demo_spec(IncompatKind kind, int block, int noise, std::uint64_t seed) {
    ScenarioSpec spec;
    spec.app_package = "com.demo.notes";
    spec.env_baseline = "api-25";
    spec.env_failure = "api-26";
    spec.kind = kind;
    spec.block_size = block;
    spec.noise = noise;
    spec.seed = seed;

    MethodRef on_create = m("com.demo.notes", "Main", "onCreate");
    MethodRef on_click = m("com.demo.notes", "Main", "onClick");
    MethodRef push = m("com.demo.notes", "Sync", "push");
    spec.site = push;
    spec.roots = {on_create, on_click};

    AppMethodSpec create{on_create, {}};
    create.body.push_back(MethodAction::api_call(
        {m("fw.ui", "Window", "init"), {}, ReturnValue::void_value()}));
    create.body.push_back(MethodAction::internal_call(push));

    AppMethodSpec push_body{push, {}};
    push_body.body.push_back(MethodAction::api_call(
        {m("fw.net", "Http", "post", "String"), {"/sync"}, ReturnValue::of("201")}));
    push_body.body.push_back(MethodAction::api_call(
        {m("fw.net", "Http", "close"), {}, ReturnValue::void_value()}));

    AppMethodSpec click{on_click, {}};
    click.body.push_back(MethodAction::api_call(
        {m("fw.ui", "Toast", "show"), {}, ReturnValue::void_value()}));

    spec.methods = {create, push_body, click};
    return spec;
}

std::vector<Sib> sibs_of(const GeneratedScenario& scenario) {
    return extract_sibs(diff_traces(scenario.baseline, scenario.failure, false),
                        scenario.baseline, scenario.failure);
}

} // namespace

TEST_CASE("generated traces are valid and share the app package") {
    for (auto kind : {IncompatKind::InsertBlock, IncompatKind::DeleteBlock,
                      IncompatKind::ReplaceBlock, IncompatKind::PermissionDenial}) {
        CAPTURE(to_string(kind));
        auto scenario = generate_scenario(demo_spec(kind, 3, 7, 42));
        CHECK(validate_trace(scenario.baseline).empty());
        CHECK(validate_trace(scenario.failure).empty());
        CHECK(scenario.baseline.app_package == scenario.failure.app_package);
        CHECK(scenario.baseline.env_label == "api-25");
        CHECK(scenario.failure.env_label == "api-26");
    }
}

TEST_CASE("INSERT_BLOCK adds exactly the block beneath the site") {
    ScenarioSpec spec = demo_spec(IncompatKind::InsertBlock, 3, 0, 1);
    auto scenario = generate_scenario(spec);
    CHECK(scenario.failure.events.size() == scenario.baseline.events.size() + 3);

    std::vector<TraceEvent> extra;
    for (const auto& ev : scenario.failure.events) {
        if (ev.callee.package == "fw.upgrade") {
            extra.push_back(ev);
        }
    }
    REQUIRE(extra.size() == 3);
    for (const auto& ev : extra) {
        // the inserted calls run beneath the injection site's stack
        CHECK(ev.stack.back().method == spec.site);
    }
}

TEST_CASE("DELETE_BLOCK of one call leaves a single baseline-only event") {
    auto scenario = generate_scenario(demo_spec(IncompatKind::DeleteBlock, 1, 0, 1));
    CHECK(scenario.baseline.events.size() == scenario.failure.events.size() + 1);
    auto sibs = sibs_of(scenario);
    REQUIRE(sibs.size() == 1);
    CHECK(sibs[0].origin_kind == HunkKind::Deleted);
    CHECK(sibs[0].weight == 1);
}

TEST_CASE("generation is a pure function of the scenario description") {
    ScenarioSpec spec = demo_spec(IncompatKind::ReplaceBlock, 4, 25, 77);
    auto first = generate_scenario(spec);
    auto second = generate_scenario(spec);
    CHECK(write_trace(first.baseline) == write_trace(second.baseline));
    CHECK(write_trace(first.failure) == write_trace(second.failure));
    CHECK(first.truth == second.truth);

    ScenarioSpec other = spec;
    other.seed = 78;
    auto third = generate_scenario(other);
    CHECK(write_trace(first.baseline) != write_trace(third.baseline));
}

TEST_CASE("noise-free runs of the pure kinds give one block with the block size") {
    for (auto kind : {IncompatKind::InsertBlock, IncompatKind::DeleteBlock,
                      IncompatKind::ReplaceBlock}) {
        for (int block = 1; block <= 6; ++block) {
            CAPTURE(to_string(kind));
            CAPTURE(block);
            auto scenario = generate_scenario(demo_spec(kind, block, 0, 11));
            auto sibs = sibs_of(scenario);
            REQUIRE(sibs.size() == 1);
            CHECK(sibs[0].weight == block);
        }
    }
}

TEST_CASE("permission denial is one inserted check plus one deleted callback block") {
    auto scenario = generate_scenario(demo_spec(IncompatKind::PermissionDenial, 3, 0, 5));
    auto sibs = sibs_of(scenario);
    REQUIRE(sibs.size() == 2);
    CHECK(sibs[0].origin_kind == HunkKind::Inserted);
    CHECK(sibs[0].weight == 1);
    CHECK(sibs[0].events[0].callee.class_name == "PermissionGate");
    CHECK(sibs[1].origin_kind == HunkKind::Deleted);
    CHECK(sibs[1].weight == 3);
    for (const auto& ev : sibs[1].events) {
        CHECK(ev.direction == Direction::Callback);
    }
    // the fix spans the site and its direct caller
    CHECK(scenario.truth.fix_methods ==
          std::set<MethodRef>{m("com.demo.notes", "Sync", "push"),
                              m("com.demo.notes", "Main", "onCreate")});
}

TEST_CASE("noise never creates or removes differences") {
    for (auto kind : {IncompatKind::InsertBlock, IncompatKind::DeleteBlock,
                      IncompatKind::ReplaceBlock, IncompatKind::PermissionDenial}) {
        auto quiet = generate_scenario(demo_spec(kind, 2, 0, 3));
        auto noisy = generate_scenario(demo_spec(kind, 2, 50, 3));
        auto quiet_sibs = sibs_of(quiet);
        auto noisy_sibs = sibs_of(noisy);
        CAPTURE(to_string(kind));
        REQUIRE(noisy_sibs.size() == quiet_sibs.size());
        for (std::size_t i = 0; i < quiet_sibs.size(); ++i) {
            CHECK(noisy_sibs[i].origin_kind == quiet_sibs[i].origin_kind);
            CHECK(noisy_sibs[i].weight == quiet_sibs[i].weight);
        }
    }
}

TEST_CASE("the site appears in the failure tree and reaches every block") {
    for (auto kind : {IncompatKind::InsertBlock, IncompatKind::DeleteBlock,
                      IncompatKind::ReplaceBlock, IncompatKind::PermissionDenial}) {
        for (int noise : {0, 10, 50}) {
            CAPTURE(to_string(kind));
            CAPTURE(noise);
            ScenarioSpec spec = demo_spec(kind, 3, noise, 17);
            auto scenario = generate_scenario(spec);
            auto sibs = sibs_of(scenario);
            auto tree = build_failure_tree(scenario.failure, sibs);

            const std::vector<MethodRef> site_path{synthetic_entry_point(),
                                                   m("com.demo.notes", "Main", "onCreate"),
                                                   spec.site};
            const TreeNode* node = tree.find(site_path);
            REQUIRE(node != nullptr);
            std::set<int> all;
            for (const auto& sib : sibs) {
                all.insert(sib.id);
            }
            CHECK(reachable_sibs(tree, *node) == all);
        }
    }
}

TEST_CASE("invalid scenarios are rejected with a reason") {
    ScenarioSpec spec = demo_spec(IncompatKind::InsertBlock, 1, 0, 1);
    spec.site = m("com.demo.notes", "Ghost", "gone");
    CHECK_THROWS_WITH_AS(generate_scenario(spec), doctest::Contains("Ghost"), InvalidSpec);

    spec = demo_spec(IncompatKind::InsertBlock, 0, 0, 1);
    CHECK_THROWS_AS(generate_scenario(spec), InvalidSpec);

    spec = demo_spec(IncompatKind::InsertBlock, 1, 0, 1);
    spec.roots.clear();
    CHECK_THROWS_AS(generate_scenario(spec), InvalidSpec);

    // two callers for one method break the forest shape
    spec = demo_spec(IncompatKind::InsertBlock, 1, 0, 1);
    spec.methods[2].body.push_back(
        MethodAction::internal_call(m("com.demo.notes", "Sync", "push")));
    CHECK_THROWS_AS(generate_scenario(spec), InvalidSpec);

    // deleting from a site that never calls out cannot be anchored
    spec = demo_spec(IncompatKind::DeleteBlock, 1, 0, 1);
    spec.methods[1].body.clear();
    CHECK_THROWS_AS(generate_scenario(spec), InvalidSpec);
}

TEST_CASE("scenario files round-trip through write and parse") {
    ScenarioSpec spec = demo_spec(IncompatKind::PermissionDenial, 2, 9, 123);
    std::string tex = write_scenario_spec(spec);
    std::istringstream in(tex);
    ScenarioSpec parsed = parse_scenario_spec(in);
    CHECK(parsed == spec);
    CHECK(write_scenario_spec(parsed) == tex);

    std::istringstream missing("#scenario v1 app=a.b\nsite\ta.b.C.d()\n");
    CHECK_THROWS_AS(parse_scenario_spec(missing), MalformedLine);
}

TEST_CASE("ground truth files round-trip") {
    auto scenario = generate_scenario(demo_spec(IncompatKind::PermissionDenial, 2, 0, 8));
    std::string tex = write_ground_truth(scenario.truth, "com.demo.notes");
    std::istringstream in(tex);
    CHECK(parse_ground_truth(in) == scenario.truth);
}

TEST_CASE("goodweather failure inserts the permission probe and loses the callbacks") {
    auto scenario = goodweather_scenario();
    CHECK(validate_trace(scenario.baseline).empty());
    CHECK(validate_trace(scenario.failure).empty());

    auto has_method = [](const Trace& trace, const std::string& name) {
        return std::any_of(trace.events.begin(), trace.events.end(), [&](const TraceEvent& ev) {
            return ev.callee.method == name;
        });
    };
    CHECK(has_method(scenario.failure, "checkSelfPermission"));
    CHECK_FALSE(has_method(scenario.baseline, "checkSelfPermission"));
    CHECK(has_method(scenario.baseline, "onLocationChanged"));
    CHECK_FALSE(has_method(scenario.failure, "onLocationChanged"));
    CHECK(has_method(scenario.baseline, "requestLocationUpdates"));
    CHECK_FALSE(has_method(scenario.failure, "requestLocationUpdates"));
}

TEST_CASE("goodweather pipeline puts the two fix methods on top") {
    auto scenario = goodweather_scenario();
    auto sibs = sibs_of(scenario);
    auto tree = build_failure_tree(scenario.failure, sibs);
    auto ranking = rank(tree, sibs, scenario.failure.app_package);

    REQUIRE(ranking.size() >= 2);
    CHECK(ranking[0].method.method == "gpsRequestLocation");
    CHECK(ranking[1].method.method == "onOptionsItemSelected");

    // the evidence of both top candidates names the two key framework calls
    for (int i : {0, 1}) {
        std::set<std::string> callees;
        for (const auto& sib : ranking[static_cast<std::size_t>(i)].evidence) {
            for (const auto& callee : sib.callees()) {
                callees.insert(callee.method);
            }
        }
        CHECK(callees.contains("checkSelfPermission"));
        CHECK(callees.contains("requestLocationUpdates"));
    }

    CHECK(builtin_scenario("goodweather").has_value());
    CHECK_FALSE(builtin_scenario("nosuch").has_value());
}
