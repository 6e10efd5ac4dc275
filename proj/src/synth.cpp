#include "fixlocus/synth.hpp"

#include "fixlocus/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <sstream>

namespace fixlocus {

const char* to_string(IncompatKind k) {
    switch (k) {
    case IncompatKind::InsertBlock:
        return "INSERT_BLOCK";
    case IncompatKind::DeleteBlock:
        return "DELETE_BLOCK";
    case IncompatKind::ReplaceBlock:
        return "REPLACE_BLOCK";
    case IncompatKind::PermissionDenial:
        return "PERMISSION_DENIAL";
    }
    return "";
}

std::optional<IncompatKind> incompat_kind_from_string(const std::string& tex) {
    if (tex == "INSERT_BLOCK") {
        return IncompatKind::InsertBlock;
    }
    if (tex == "DELETE_BLOCK") {
        return IncompatKind::DeleteBlock;
    }
    if (tex == "REPLACE_BLOCK") {
        return IncompatKind::ReplaceBlock;
    }
    if (tex == "PERMISSION_DENIAL") {
        return IncompatKind::PermissionDenial;
    }
    return std::nullopt;
}

namespace {

// Event awaiting sequence numbers. Callbacks carry an empty owner path
// (the framework calls straight into the app); API calls carry the app
// call path from the root method to the calling method.
struct ProtoEvent {
    Direction direction = Direction::ApiCall;
    MethodRef callee;
    std::vector<std::string> args;
    ReturnValue ret;
    std::vector<MethodRef> owner;
};

ProtoEvent api_proto(MethodRef callee, std::vector<std::string> args, ReturnValue ret,
                     std::vector<MethodRef> owner) {
    ProtoEvent p;
    p.direction = Direction::ApiCall;
    p.callee = std::move(callee);
    p.args = std::move(args);
    p.ret = std::move(ret);
    p.owner = std::move(owner);
    return p;
}

ProtoEvent callback_proto(MethodRef callee, std::vector<std::string> args, ReturnValue ret) {
    ProtoEvent p;
    p.direction = Direction::Callback;
    p.callee = std::move(callee);
    p.args = std::move(args);
    p.ret = std::move(ret);
    return p;
}

Trace materialize(const std::vector<ProtoEvent>& protos, const std::string& app_package,
                  const std::string& env_label, const MethodRef& entry) {
    Trace trace;
    trace.app_package = app_package;
    trace.env_label = env_label;
    trace.events.reserve(protos.size());
    std::int64_t seq = 0;
    for (const auto& proto : protos) {
        TraceEvent ev;
        ev.seq = seq++;
        ev.thread = 1;
        ev.direction = proto.direction;
        ev.callee = proto.callee;
        ev.args = proto.args;
        ev.ret = proto.ret;
        ev.stack.push_back({entry, origin_of(entry, app_package)});
        for (const auto& m : proto.owner) {
            ev.stack.push_back({m, origin_of(m, app_package)});
        }
        trace.events.push_back(std::move(ev));
    }
    return trace;
}

struct Topology {
    std::map<std::string, const AppMethodSpec*> by_canonical;
    std::map<std::string, std::string> caller_of; // callee canonical -> caller canonical
    AppMethodSpec empty_body;
};

Topology check_topology(const ScenarioSpec& spec) {
    if (spec.app_package.empty()) {
        throw InvalidSpec("app package is empty");
    }
    if (spec.roots.empty()) {
        throw InvalidSpec("no callback roots");
    }
    if (spec.block_size < 1) {
        throw InvalidSpec("block size must be at least 1");
    }
    if (spec.noise < 0) {
        throw InvalidSpec("noise must be non-negative");
    }

    Topology topo;
    std::map<std::string, MethodRef> known;
    auto declare = [&](const MethodRef& m) { known.emplace(m.canonical(), m); };

    for (const auto& ms : spec.methods) {
        if (!is_app_package(ms.method.package, spec.app_package)) {
            throw InvalidSpec("method " + ms.method.canonical() + " is outside the app package");
        }
        if (!topo.by_canonical.emplace(ms.method.canonical(), &ms).second) {
            throw InvalidSpec("method " + ms.method.canonical() + " declared twice");
        }
        declare(ms.method);
        for (const auto& action : ms.body) {
            if (action.kind == MethodAction::Kind::Api) {
                if (is_app_package(action.api.callee.package, spec.app_package)) {
                    throw InvalidSpec("api callee " + action.api.callee.canonical() +
                                      " must be a framework method");
                }
            } else {
                if (!is_app_package(action.child.package, spec.app_package)) {
                    throw InvalidSpec("call target " + action.child.canonical() +
                                      " must be an app method");
                }
                declare(action.child);
                auto [it, inserted] =
                    topo.caller_of.emplace(action.child.canonical(), ms.method.canonical());
                if (!inserted) {
                    throw InvalidSpec("method " + action.child.canonical() +
                                      " has more than one caller");
                }
            }
        }
    }
    for (const auto& root : spec.roots) {
        if (!is_app_package(root.package, spec.app_package)) {
            throw InvalidSpec("root " + root.canonical() + " must be an app method");
        }
        declare(root);
        if (topo.caller_of.contains(root.canonical())) {
            throw InvalidSpec("root " + root.canonical() + " is also an internal call target");
        }
    }

    if (!known.contains(spec.site.canonical())) {
        throw InvalidSpec("injection site " + spec.site.canonical() +
                          " does not occur in the topology");
    }

    // every method must be reachable from the callback roots
    std::set<std::string> reachable;
    std::vector<const MethodRef*> work;
    for (const auto& root : spec.roots) {
        if (!reachable.insert(root.canonical()).second) {
            throw InvalidSpec("root " + root.canonical() + " listed twice");
        }
        work.push_back(&root);
    }
    while (!work.empty()) {
        const MethodRef* cur = work.back();
        work.pop_back();
        auto it = topo.by_canonical.find(cur->canonical());
        if (it == topo.by_canonical.end()) {
            continue;
        }
        for (const auto& action : it->second->body) {
            if (action.kind != MethodAction::Kind::Call) {
                continue;
            }
            if (!reachable.insert(action.child.canonical()).second) {
                throw InvalidSpec("method " + action.child.canonical() +
                                  " is called from more than one place");
            }
            work.push_back(&action.child);
        }
    }
    for (const auto& [canonical, m] : known) {
        if (!reachable.contains(canonical)) {
            throw InvalidSpec("method " + canonical + " is not reachable from any root");
        }
    }
    return topo;
}

struct WalkResult {
    std::vector<ProtoEvent> protos;
    std::size_t site_window_end = 0;
    bool site_emits_events = false;
    std::vector<MethodRef> site_path;
};

void walk_method(const MethodRef& method, const Topology& topo, const ScenarioSpec& spec,
                 std::vector<MethodRef>& path, WalkResult& out) {
    path.push_back(method);
    bool is_site = method == spec.site;
    std::size_t events_before = out.protos.size();
    if (is_site) {
        out.site_path = path;
    }
    auto it = topo.by_canonical.find(method.canonical());
    if (it != topo.by_canonical.end()) {
        for (const auto& action : it->second->body) {
            if (action.kind == MethodAction::Kind::Api) {
                out.protos.push_back(
                    api_proto(action.api.callee, action.api.args, action.api.ret, path));
            } else {
                walk_method(action.child, topo, spec, path, out);
            }
        }
    }
    if (is_site) {
        out.site_window_end = out.protos.size();
        out.site_emits_events = out.protos.size() > events_before;
    }
    path.pop_back();
}

MethodRef fw_method(std::string package, std::string cls, std::string method,
                    std::string descriptor = "") {
    return MethodRef{std::move(package), std::move(cls), std::move(method),
                     std::move(descriptor)};
}

} // namespace

GeneratedScenario generate_scenario(const ScenarioSpec& spec) {
    Topology topo = check_topology(spec);

    WalkResult walk;
    {
        std::vector<MethodRef> path;
        for (const auto& root : spec.roots) {
            walk.protos.push_back(callback_proto(root, {}, ReturnValue::void_value()));
            walk_method(root, topo, spec, path, walk);
        }
    }

    bool needs_site_events = spec.kind == IncompatKind::DeleteBlock ||
                             spec.kind == IncompatKind::PermissionDenial;
    if (needs_site_events && !walk.site_emits_events) {
        throw InvalidSpec("kind " + std::string(to_string(spec.kind)) + " needs site " +
                          spec.site.canonical() + " to perform at least one boundary call");
    }

    // benign framework chatter, spliced identically into both traces;
    // attributed to the context of the preceding event so anchors of
    // later deleted blocks stay inside the site's subtree
    std::size_t splice_at = walk.site_window_end;
    std::mt19937_64 rng(spec.seed);
    for (int k = 0; k < spec.noise; ++k) {
        std::size_t pos = 1 + static_cast<std::size_t>(rng() % walk.protos.size());
        const ProtoEvent& before = walk.protos[pos - 1];
        std::vector<MethodRef> owner =
            before.owner.empty() ? std::vector<MethodRef>{before.callee} : before.owner;
        walk.protos.insert(walk.protos.begin() + static_cast<std::ptrdiff_t>(pos),
                           api_proto(fw_method("fw.env", "Ticker", "tick", "int"),
                                     {std::to_string(k)}, ReturnValue::void_value(),
                                     std::move(owner)));
        if (pos <= splice_at) {
            ++splice_at;
        }
    }

    std::vector<ProtoEvent> baseline_protos = walk.protos;
    std::vector<ProtoEvent> failure_protos = walk.protos;
    GroundTruth truth;
    truth.fix_methods.insert(spec.site);

    auto splice = [&](std::vector<ProtoEvent>& protos, std::vector<ProtoEvent> block) {
        protos.insert(protos.begin() + static_cast<std::ptrdiff_t>(splice_at),
                      std::make_move_iterator(block.begin()),
                      std::make_move_iterator(block.end()));
    };

    switch (spec.kind) {
    case IncompatKind::InsertBlock: {
        std::vector<ProtoEvent> block;
        for (int i = 0; i < spec.block_size; ++i) {
            MethodRef m = fw_method("fw.upgrade", "Migration", "step" + std::to_string(i));
            truth.sib_callees.insert(m);
            block.push_back(api_proto(m, {}, ReturnValue::void_value(), walk.site_path));
        }
        splice(failure_protos, std::move(block));
        break;
    }
    case IncompatKind::DeleteBlock: {
        std::vector<ProtoEvent> block;
        for (int i = 0; i < spec.block_size; ++i) {
            MethodRef m = fw_method("fw.legacy", "Cleanup", "step" + std::to_string(i));
            truth.sib_callees.insert(m);
            block.push_back(api_proto(m, {}, ReturnValue::void_value(), walk.site_path));
        }
        splice(baseline_protos, std::move(block));
        break;
    }
    case IncompatKind::ReplaceBlock: {
        std::vector<ProtoEvent> old_block;
        std::vector<ProtoEvent> new_block;
        for (int i = 0; i < spec.block_size; ++i) {
            MethodRef legacy = fw_method("fw.legacy", "Service", "call" + std::to_string(i));
            MethodRef upgraded = fw_method("fw.upgrade", "Service", "call" + std::to_string(i));
            truth.sib_callees.insert(upgraded);
            old_block.push_back(api_proto(legacy, {}, ReturnValue::void_value(), walk.site_path));
            new_block.push_back(
                api_proto(upgraded, {}, ReturnValue::void_value(), walk.site_path));
        }
        splice(baseline_protos, std::move(old_block));
        splice(failure_protos, std::move(new_block));
        break;
    }
    case IncompatKind::PermissionDenial: {
        MethodRef check = fw_method("fw.permissions", "PermissionGate", "check", "String");
        MethodRef note = fw_method("fw.log", "Logger", "note", "String");
        MethodRef listener{spec.app_package, "SuppressedListener", "onUpdate", "Data"};
        truth.sib_callees.insert(check);
        truth.sib_callees.insert(listener);
        auto caller = topo.caller_of.find(spec.site.canonical());
        if (caller != topo.caller_of.end()) {
            // the fix usually spans the denied method and its caller
            truth.fix_methods.insert(*MethodRef::parse(caller->second));
        }

        std::vector<ProtoEvent> old_block;
        old_block.push_back(api_proto(note, {"protected resource"}, ReturnValue::void_value(),
                                      walk.site_path));
        for (int i = 0; i < spec.block_size; ++i) {
            old_block.push_back(
                callback_proto(listener, {"Data@<id>"}, ReturnValue::void_value()));
        }
        std::vector<ProtoEvent> new_block;
        new_block.push_back(api_proto(check, {"protected resource"},
                                      ReturnValue::of("DENIED"), walk.site_path));
        new_block.push_back(api_proto(note, {"protected resource"}, ReturnValue::void_value(),
                                      walk.site_path));
        splice(baseline_protos, std::move(old_block));
        splice(failure_protos, std::move(new_block));
        break;
    }
    }

    GeneratedScenario out;
    const MethodRef& entry = synthetic_entry_point();
    out.baseline = materialize(baseline_protos, spec.app_package, spec.env_baseline, entry);
    out.failure = materialize(failure_protos, spec.app_package, spec.env_failure, entry);
    out.truth = std::move(truth);
    return out;
}

GeneratedScenario goodweather_scenario() {
    const std::string app = "org.asdtm.goodweather";
    const MethodRef entry{"com.android.internal.os", "ZygoteInit", "main", "String[]"};
    const MethodRef on_options{app, "MainActivity", "onOptionsItemSelected", "MenuItem"};
    const MethodRef gps_request{app, "MainActivity", "gpsRequestLocation", ""};
    const MethodRef on_location{app, "MainActivity", "onLocationChanged", "Location"};
    const MethodRef log_d{"android.util", "Log", "d", "String,String"};
    const MethodRef request_updates{"android.location", "LocationManager",
                                    "requestLocationUpdates",
                                    "String,long,float,LocationListener"};
    const MethodRef check_permission{"android.support.v4.content", "ContextCompat",
                                     "checkSelfPermission", "Context,String"};
    const MethodRef set_visibility{"android.widget", "ProgressBar", "setVisibility", "int"};
    const MethodRef remove_updates{"android.location", "LocationManager", "removeUpdates",
                                   "LocationListener"};

    auto event = [&](std::int64_t seq, Direction dir, const MethodRef& callee,
                     std::vector<std::string> args, ReturnValue ret,
                     std::vector<MethodRef> stack) {
        TraceEvent ev;
        ev.seq = seq;
        ev.thread = 1;
        ev.direction = dir;
        ev.callee = callee;
        ev.args = std::move(args);
        ev.ret = std::move(ret);
        for (auto& m : stack) {
            ev.stack.push_back({m, origin_of(m, app)});
        }
        return ev;
    };

    const std::vector<MethodRef> at_entry{entry};
    const std::vector<MethodRef> in_gps{entry, on_options, gps_request};
    const std::vector<MethodRef> in_location{entry, on_location};

    GeneratedScenario out;
    out.baseline.app_package = app;
    out.baseline.env_label = "api-22";
    out.baseline.events = {
        event(0, Direction::Callback, on_options, {"MenuItem@<id>"}, ReturnValue::of("true"),
              at_entry),
        event(1, Direction::ApiCall, log_d, {"GoodWeather", "requesting location updates"},
              ReturnValue::of("34"), in_gps),
        event(2, Direction::ApiCall, request_updates, {"gps", "0", "0.0", "LocationListener@<id>"},
              ReturnValue::void_value(), in_gps),
        event(3, Direction::ApiCall, set_visibility, {"0"}, ReturnValue::void_value(), in_gps),
        event(4, Direction::Callback, on_location, {"Location@<id>"}, ReturnValue::void_value(),
              at_entry),
        event(5, Direction::ApiCall, remove_updates, {"LocationListener@<id>"},
              ReturnValue::void_value(), in_location),
        event(6, Direction::ApiCall, set_visibility, {"8"}, ReturnValue::void_value(),
              in_location),
    };

    out.failure.app_package = app;
    out.failure.env_label = "api-23";
    out.failure.events = {
        event(0, Direction::Callback, on_options, {"MenuItem@<id>"}, ReturnValue::of("true"),
              at_entry),
        event(1, Direction::ApiCall, check_permission,
              {"Context@<id>", "android.permission.ACCESS_FINE_LOCATION"},
              ReturnValue::of("DENIED"), in_gps),
        event(2, Direction::ApiCall, log_d, {"GoodWeather", "location permission denied"},
              ReturnValue::of("31"), in_gps),
        event(3, Direction::ApiCall, set_visibility, {"0"}, ReturnValue::void_value(), in_gps),
    };

    out.truth.fix_methods = {gps_request, on_options};
    out.truth.sib_callees = {check_permission, request_updates, on_location, remove_updates,
                             set_visibility};
    return out;
}

std::optional<GeneratedScenario> builtin_scenario(const std::string& name) {
    if (name == "goodweather") {
        return goodweather_scenario();
    }
    return std::nullopt;
}

namespace {

constexpr const char* kScenarioHeaderPrefix = "#scenario v1 app=";
constexpr const char* kTruthHeaderPrefix = "#truth v1 app=";

MethodRef parse_method_or_throw(const std::string& tex, std::size_t line) {
    auto ref = MethodRef::parse(tex);
    if (!ref) {
        throw MalformedLine(line, "cannot parse method '" + tex + "'");
    }
    return *ref;
}

long long parse_number(const std::string& tex, std::size_t line, const char* what) {
    try {
        std::size_t used = 0;
        long long value = std::stoll(tex, &used);
        if (used != tex.size()) {
            throw std::invalid_argument(tex);
        }
        return value;
    } catch (const std::exception&) {
        throw MalformedLine(line, std::string("cannot parse ") + what + " '" + tex + "'");
    }
}

ReturnValue ret_from_field(const std::string& tex) {
    if (tex == "void") {
        return ReturnValue::void_value();
    }
    if (tex == "?") {
        return ReturnValue::unrecorded();
    }
    return ReturnValue::of(tex);
}

std::string ret_to_field(const ReturnValue& ret) {
    switch (ret.kind) {
    case ReturnValue::Kind::Void:
        return "void";
    case ReturnValue::Kind::Unrecorded:
        return "?";
    case ReturnValue::Kind::Value:
        return ret.text;
    }
    return {};
}

} // namespace

ScenarioSpec parse_scenario_spec(std::istream& in) {
    ScenarioSpec spec;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        throw MalformedLine(1, "empty input, expected scenario header");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (!text::starts_with(line, kScenarioHeaderPrefix)) {
        throw MalformedLine(1, "expected header '#scenario v1 app=<package>'");
    }
    spec.app_package = line.substr(std::string(kScenarioHeaderPrefix).size());

    std::map<std::string, std::size_t> method_index;
    auto body_of = [&](const MethodRef& owner) -> std::vector<MethodAction>& {
        auto [it, inserted] = method_index.emplace(owner.canonical(), spec.methods.size());
        if (inserted) {
            spec.methods.push_back({owner, {}});
        }
        return spec.methods[it->second].body;
    };

    bool have_kind = false, have_site = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto fields = text::split(line, '\t');
        const std::string& key = fields[0];
        auto need = [&](std::size_t n) {
            if (fields.size() != n) {
                throw MalformedLine(line_no, "'" + key + "' expects " + std::to_string(n - 1) +
                                                 " field(s)");
            }
        };
        if (key == "env_baseline") {
            need(2);
            spec.env_baseline = fields[1];
        } else if (key == "env_failure") {
            need(2);
            spec.env_failure = fields[1];
        } else if (key == "kind") {
            need(2);
            auto kind = incompat_kind_from_string(fields[1]);
            if (!kind) {
                throw MalformedLine(line_no, "unknown kind '" + fields[1] + "'");
            }
            spec.kind = *kind;
            have_kind = true;
        } else if (key == "site") {
            need(2);
            spec.site = parse_method_or_throw(fields[1], line_no);
            have_site = true;
        } else if (key == "block") {
            need(2);
            spec.block_size = static_cast<int>(parse_number(fields[1], line_no, "block size"));
        } else if (key == "noise") {
            need(2);
            spec.noise = static_cast<int>(parse_number(fields[1], line_no, "noise"));
        } else if (key == "seed") {
            need(2);
            spec.seed = static_cast<std::uint64_t>(parse_number(fields[1], line_no, "seed"));
        } else if (key == "root") {
            need(2);
            spec.roots.push_back(parse_method_or_throw(fields[1], line_no));
        } else if (key == "api") {
            need(5);
            MethodRef owner = parse_method_or_throw(fields[1], line_no);
            BoundaryCall call;
            call.callee = parse_method_or_throw(fields[2], line_no);
            if (fields[3] != "-") {
                call.args = text::split(fields[3], ';');
            }
            call.ret = ret_from_field(fields[4]);
            body_of(owner).push_back(MethodAction::api_call(std::move(call)));
        } else if (key == "call") {
            need(3);
            MethodRef owner = parse_method_or_throw(fields[1], line_no);
            MethodRef child = parse_method_or_throw(fields[2], line_no);
            body_of(owner).push_back(MethodAction::internal_call(std::move(child)));
        } else {
            throw MalformedLine(line_no, "unknown key '" + key + "'");
        }
    }
    if (!have_kind) {
        throw MalformedLine(line_no, "scenario is missing 'kind'");
    }
    if (!have_site) {
        throw MalformedLine(line_no, "scenario is missing 'site'");
    }
    return spec;
}

ScenarioSpec parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open scenario file '" + path + "'");
    }
    return parse_scenario_spec(in);
}

std::string write_scenario_spec(const ScenarioSpec& spec) {
    std::string out = kScenarioHeaderPrefix + spec.app_package + "\n";
    out += "env_baseline\t" + spec.env_baseline + "\n";
    out += "env_failure\t" + spec.env_failure + "\n";
    out += "kind\t" + std::string(to_string(spec.kind)) + "\n";
    out += "site\t" + spec.site.canonical() + "\n";
    out += "block\t" + std::to_string(spec.block_size) + "\n";
    out += "noise\t" + std::to_string(spec.noise) + "\n";
    out += "seed\t" + std::to_string(spec.seed) + "\n";
    for (const auto& root : spec.roots) {
        out += "root\t" + root.canonical() + "\n";
    }
    for (const auto& ms : spec.methods) {
        for (const auto& action : ms.body) {
            if (action.kind == MethodAction::Kind::Api) {
                out += "api\t" + ms.method.canonical() + "\t" + action.api.callee.canonical() +
                       "\t" + (action.api.args.empty() ? "-" : text::join(action.api.args, ";")) +
                       "\t" + ret_to_field(action.api.ret) + "\n";
            } else {
                out += "call\t" + ms.method.canonical() + "\t" + action.child.canonical() + "\n";
            }
        }
    }
    return out;
}

std::string write_ground_truth(const GroundTruth& truth, const std::string& app_package) {
    std::string out = kTruthHeaderPrefix + app_package + "\n";
    for (const auto& m : truth.fix_methods) {
        out += "fix\t" + m.canonical() + "\n";
    }
    for (const auto& m : truth.sib_callees) {
        out += "sib\t" + m.canonical() + "\n";
    }
    return out;
}

GroundTruth parse_ground_truth(std::istream& in) {
    GroundTruth truth;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw MalformedLine(1, "empty input, expected truth header");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (!text::starts_with(line, kTruthHeaderPrefix)) {
        throw MalformedLine(1, "expected header '#truth v1 app=<package>'");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto fields = text::split(line, '\t');
        if (fields.size() != 2 || (fields[0] != "fix" && fields[0] != "sib")) {
            throw MalformedLine(line_no, "expected 'fix<TAB>method' or 'sib<TAB>method'");
        }
        MethodRef m = parse_method_or_throw(fields[1], line_no);
        (fields[0] == "fix" ? truth.fix_methods : truth.sib_callees).insert(std::move(m));
    }
    return truth;
}

} // namespace fixlocus
