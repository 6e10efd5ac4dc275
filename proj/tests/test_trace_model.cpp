#include "fixlocus/trace.hpp"

#include "test_support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace fixlocus;
using namespace fixlocus::testing;

namespace {

Trace small_trace() {
    Trace trace;
    trace.app_package = "app.demo";
    trace.env_label = "env-a";
    const MethodRef entry = synthetic_entry_point();
    const MethodRef caller = m("app.demo", "Flow", "run");
    trace.events = {
        event(0, m("app.demo", "Handler", "onStart"), {entry}, trace.app_package),
        event(1, m("fw.api", "Service", "op"), {entry, caller}, trace.app_package),
        event(2, m("fw.api", "Service", "op2"), {entry, caller}, trace.app_package),
    };
    return trace;
}

bool mentions_rule(const std::vector<Violation>& violations, const char* rule,
                   std::int64_t seq) {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) {
        return v.rule == rule && v.seq == seq;
    });
}

} // namespace

TEST_CASE("canonical method text round-trips") {
    MethodRef ref = m("android.location", "LocationManager", "requestLocationUpdates",
                      "String,long,float,LocationListener");
    auto parsed = MethodRef::parse(ref.canonical());
    REQUIRE(parsed.has_value());
    CHECK(*parsed == ref);

    // empty descriptor
    MethodRef plain = m("app.demo", "Flow", "run");
    CHECK(MethodRef::parse(plain.canonical()) == plain);

    // the synthetic entry point parses too
    CHECK(MethodRef::parse("<root>.Main.main()") == synthetic_entry_point());

    CHECK_FALSE(MethodRef::parse("no_parens").has_value());
    CHECK_FALSE(MethodRef::parse("onlymethod()").has_value());
    CHECK_FALSE(MethodRef::parse("Cls.m()").has_value());
}

TEST_CASE("origin follows the app package prefix") {
    CHECK(is_app_package("app.demo", "app.demo"));
    CHECK(is_app_package("app.demo.ui", "app.demo"));
    CHECK_FALSE(is_app_package("app.demonstration", "app.demo"));
    CHECK_FALSE(is_app_package("fw.api", "app.demo"));
    CHECK(origin_of(m("app.demo.ui", "View", "draw"), "app.demo") == Origin::App);
    CHECK(origin_of(m("fw.api", "Service", "op"), "app.demo") == Origin::Framework);
}

TEST_CASE("well-formed trace has no violations") {
    CHECK(validate_trace(small_trace()).empty());
}

TEST_CASE("duplicate seq is reported with the offending seq") {
    Trace trace = small_trace();
    trace.events.push_back(trace.events[1]);
    trace.events.back().seq = 5;
    trace.events.push_back(trace.events.back());
    auto violations = validate_trace(trace);
    CHECK(mentions_rule(violations, rules::seq_unique, 5));
}

TEST_CASE("out-of-order seq is reported") {
    Trace trace = small_trace();
    std::swap(trace.events[0].seq, trace.events[2].seq);
    auto violations = validate_trace(trace);
    CHECK(mentions_rule(violations, rules::seq_sorted, 0));
}

TEST_CASE("API_CALL into the app package violates the direction rule") {
    Trace trace = small_trace();
    trace.events[1].callee = m("app.demo", "Helper", "inside");
    // keep the recorded direction: the rule must flag the inconsistency
    auto violations = validate_trace(trace);
    CHECK(mentions_rule(violations, rules::direction_consistent, 1));
}

TEST_CASE("callback callee must belong to the app") {
    Trace trace = small_trace();
    trace.events[0].callee = m("fw.api", "Service", "notify");
    CHECK(mentions_rule(validate_trace(trace), rules::direction_consistent, 0));
}

TEST_CASE("empty stack and diverging entry points are violations") {
    Trace trace = small_trace();
    trace.events[1].stack.clear();
    CHECK(mentions_rule(validate_trace(trace), rules::stack_non_empty, 1));

    trace = small_trace();
    trace.events[2].stack[0] = frame(m("other", "Entry", "go"), trace.app_package);
    CHECK(mentions_rule(validate_trace(trace), rules::single_entry_point, 2));
}

TEST_CASE("raw identity tokens in values are flagged") {
    Trace trace = small_trace();
    trace.events[1].args = {"Intent@3ac4f1"};
    CHECK(mentions_rule(validate_trace(trace), rules::values_normalized, 1));
}

TEST_CASE("stored frame origins must match the derived ones") {
    Trace trace = small_trace();
    trace.events[1].stack[1].origin = Origin::Framework; // app caller mislabeled
    CHECK(mentions_rule(validate_trace(trace), rules::frame_origin, 1));
}

TEST_CASE("validate_trace is pure") {
    Trace trace = small_trace();
    trace.events[0].seq = 2;
    trace.events[2].seq = 0;
    auto first = validate_trace(trace);
    auto second = validate_trace(trace);
    CHECK(first == second);
    CHECK_FALSE(first.empty());
}

TEST_CASE("entry point of an empty trace is absent") {
    Trace trace;
    trace.app_package = "app.demo";
    CHECK_FALSE(trace.entry_point().has_value());
    CHECK(validate_trace(trace).empty());
    CHECK(small_trace().entry_point() == synthetic_entry_point());
}
