#ifndef FIXLOCUS_SYNTH_HPP
#define FIXLOCUS_SYNTH_HPP

#include "fixlocus/trace.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fixlocus {

/// One framework call an app method performs while it runs.
struct BoundaryCall {
    MethodRef callee;
    std::vector<std::string> args;
    ReturnValue ret;

    bool operator==(const BoundaryCall&) const = default;
};

/// Ordered body entry of an app method: either a boundary call or an
/// internal call into another app method.
struct MethodAction {
    enum class Kind { Api, Call };

    Kind kind = Kind::Api;
    BoundaryCall api;   // when kind == Api
    MethodRef child;    // when kind == Call

    static MethodAction api_call(BoundaryCall call) {
        MethodAction a;
        a.kind = Kind::Api;
        a.api = std::move(call);
        return a;
    }
    static MethodAction internal_call(MethodRef target) {
        MethodAction a;
        a.kind = Kind::Call;
        a.child = std::move(target);
        return a;
    }

    bool operator==(const MethodAction&) const = default;
};

struct AppMethodSpec {
    MethodRef method;
    std::vector<MethodAction> body;

    bool operator==(const AppMethodSpec&) const = default;
};

enum class IncompatKind {
    InsertBlock,      // upgraded framework forces extra calls
    DeleteBlock,      // previously required calls disappear
    ReplaceBlock,     // one call block is swapped for another
    PermissionDenial, // a denied check suppresses a callback block
};

const char* to_string(IncompatKind k);
std::optional<IncompatKind> incompat_kind_from_string(const std::string& text);

/// A synthetic app (callback roots plus internal call forest) and the
/// upgrade effect to inject at one of its methods.
struct ScenarioSpec {
    std::string app_package;
    std::string env_baseline = "baseline";
    std::string env_failure = "upgraded";
    std::vector<AppMethodSpec> methods; // declaration order
    std::vector<MethodRef> roots;       // callback script, in order
    IncompatKind kind = IncompatKind::InsertBlock;
    MethodRef site;
    int block_size = 1;
    int noise = 0;
    std::uint64_t seed = 0;

    bool operator==(const ScenarioSpec&) const = default;
};

struct GroundTruth {
    std::set<MethodRef> fix_methods;
    std::set<MethodRef> sib_callees;

    bool operator==(const GroundTruth&) const = default;
};

struct GeneratedScenario {
    Trace baseline;
    Trace failure;
    GroundTruth truth;
};

/// Deterministically renders the scenario into a baseline/failure trace
/// pair differing only by the injected effect, plus the ground truth.
/// Noise interactions are spliced identically into both traces and never
/// produce differences. Throws InvalidSpec.
GeneratedScenario generate_scenario(const ScenarioSpec& spec);

/// Built-in scenario modeled on a location-permission policy change: the
/// failing environment answers a permission probe with DENIED and the
/// location callbacks never arrive, leaving the app waiting on a spinner.
GeneratedScenario goodweather_scenario();

/// Looks up a built-in scenario by name ("goodweather").
std::optional<GeneratedScenario> builtin_scenario(const std::string& name);

/// Scenario file: `#scenario v1 app=<pkg>` header followed by
/// key<TAB>value lines (kind, site, block, noise, seed, env_baseline,
/// env_failure, root, api, call). Throws MalformedLine / InvalidSpec.
ScenarioSpec parse_scenario_spec(std::istream& in);
ScenarioSpec parse_scenario_file(const std::string& path);
std::string write_scenario_spec(const ScenarioSpec& spec);

/// Ground truth file: `#truth v1 app=<pkg>`, then `fix <method>` and
/// `sib <method>` lines.
std::string write_ground_truth(const GroundTruth& truth, const std::string& app_package);
GroundTruth parse_ground_truth(std::istream& in);

} // namespace fixlocus

#endif
