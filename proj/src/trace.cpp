#include "fixlocus/trace.hpp"

#include "fixlocus/trace_io.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <unordered_set>

namespace fixlocus {

std::string MethodRef::canonical() const {
    std::string out;
    out.reserve(package.size() + class_name.size() + method.size() + descriptor.size() + 4);
    out += package;
    out += '.';
    out += class_name;
    out += '.';
    out += method;
    out += '(';
    out += descriptor;
    out += ')';
    return out;
}

std::optional<MethodRef> MethodRef::parse(const std::string& tex) {
    std::size_t open = tex.find('(');
    if (open == std::string::npos || tex.back() != ')' || open + 1 > tex.size() - 1) {
        return std::nullopt;
    }
    std::string descriptor = tex.substr(open + 1, tex.size() - open - 2);
    std::string path = tex.substr(0, open);

    // method is the last dot component, class the one before, package the rest
    std::size_t method_dot = path.rfind('.');
    if (method_dot == std::string::npos) {
        return std::nullopt;
    }
    std::size_t class_dot = path.rfind('.', method_dot == 0 ? 0 : method_dot - 1);
    if (class_dot == std::string::npos) {
        return std::nullopt;
    }
    MethodRef ref;
    ref.package = path.substr(0, class_dot);
    ref.class_name = path.substr(class_dot + 1, method_dot - class_dot - 1);
    ref.method = path.substr(method_dot + 1);
    ref.descriptor = std::move(descriptor);
    if (ref.package.empty() || ref.class_name.empty() || ref.method.empty()) {
        return std::nullopt;
    }
    return ref;
}

const char* to_string(Direction d) {
    return d == Direction::ApiCall ? "API_CALL" : "CALLBACK";
}

const char* to_string(Origin o) {
    return o == Origin::App ? "APP" : "FRAMEWORK";
}

std::optional<Direction> direction_from_string(const std::string& tex) {
    if (tex == "API_CALL") {
        return Direction::ApiCall;
    }
    if (tex == "CALLBACK") {
        return Direction::Callback;
    }
    return std::nullopt;
}

bool is_app_package(const std::string& package, const std::string& app_package) {
    if (app_package.empty()) {
        return false;
    }
    if (package == app_package) {
        return true;
    }
    return package.size() > app_package.size() && package[app_package.size()] == '.' &&
           text::starts_with(package, app_package);
}

Origin origin_of(const MethodRef& method, const std::string& app_package) {
    return is_app_package(method.package, app_package) ? Origin::App : Origin::Framework;
}

std::optional<MethodRef> Trace::entry_point() const {
    if (events.empty() || events.front().stack.empty()) {
        return std::nullopt;
    }
    return events.front().stack.front().method;
}

const MethodRef& synthetic_entry_point() {
    static const MethodRef entry{"<root>", "Main", "main", ""};
    return entry;
}

std::string Violation::describe() const {
    std::string out;
    if (seq >= 0) {
        out += "seq " + std::to_string(seq) + ": ";
    }
    out += rule;
    if (!detail.empty()) {
        out += " (" + detail + ")";
    }
    return out;
}

namespace {

bool serializable_value(const std::string& v) {
    return v.find_first_of("\t\n\r") == std::string::npos;
}

void check_values(const TraceEvent& ev, std::vector<Violation>& out) {
    for (const auto& arg : ev.args) {
        if (!serializable_value(arg) || arg.find(';') != std::string::npos) {
            out.push_back({ev.seq, rules::values_serializable,
                           "arg contains a separator or control character"});
        }
        if (normalize_value(arg) != arg) {
            out.push_back({ev.seq, rules::values_normalized, "arg '" + arg + "'"});
        }
    }
    if (ev.args.size() == 1 && ev.args[0] == "-") {
        out.push_back({ev.seq, rules::values_serializable,
                       "single arg '-' is indistinguishable from no args"});
    }
    if (ev.ret.kind == ReturnValue::Kind::Value) {
        if (!serializable_value(ev.ret.text) || ev.ret.text == "void" || ev.ret.text == "?" ||
            ev.ret.text.empty()) {
            out.push_back({ev.seq, rules::values_serializable,
                           "return value is empty or collides with a reserved token"});
        } else if (normalize_value(ev.ret.text) != ev.ret.text) {
            out.push_back({ev.seq, rules::values_normalized, "ret '" + ev.ret.text + "'"});
        }
    }
}

void check_methods(const TraceEvent& ev, std::vector<Violation>& out) {
    auto check = [&](const MethodRef& m, const char* where) {
        if (m.package.empty() || m.class_name.empty() || m.method.empty()) {
            out.push_back({ev.seq, rules::method_non_empty, where});
        }
    };
    check(ev.callee, "callee");
    for (const auto& frame : ev.stack) {
        check(frame.method, "stack frame");
    }
}

} // namespace

std::vector<Violation> validate_trace(const Trace& trace) {
    std::vector<Violation> out;

    std::optional<MethodRef> entry;
    std::int64_t prev_seq = -1;
    std::unordered_set<std::int64_t> seen_seq;

    for (const auto& ev : trace.events) {
        if (ev.seq < 0) {
            out.push_back({ev.seq, rules::seq_non_negative, ""});
        }
        if (!seen_seq.insert(ev.seq).second) {
            out.push_back({ev.seq, rules::seq_unique, ""});
        } else if (ev.seq <= prev_seq) {
            out.push_back({ev.seq, rules::seq_sorted,
                           "follows seq " + std::to_string(prev_seq)});
        }
        prev_seq = std::max(prev_seq, ev.seq);

        check_methods(ev, out);
        check_values(ev, out);

        if (ev.stack.empty()) {
            out.push_back({ev.seq, rules::stack_non_empty, ""});
            continue;
        }
        if (!entry) {
            entry = ev.stack.front().method;
        } else if (!(ev.stack.front().method == *entry)) {
            out.push_back({ev.seq, rules::single_entry_point,
                           "stack starts at " + ev.stack.front().method.canonical() +
                               ", trace entry is " + entry->canonical()});
        }

        for (const auto& frame : ev.stack) {
            if (frame.origin != origin_of(frame.method, trace.app_package)) {
                out.push_back({ev.seq, rules::frame_origin, frame.method.canonical()});
            }
        }

        Origin callee_origin = origin_of(ev.callee, trace.app_package);
        Origin caller_origin = origin_of(ev.stack.back().method, trace.app_package);
        if (ev.direction == Direction::ApiCall) {
            if (callee_origin != Origin::Framework) {
                out.push_back({ev.seq, rules::direction_consistent,
                               "API_CALL callee " + ev.callee.canonical() +
                                   " belongs to the app package"});
            }
            if (caller_origin != Origin::App) {
                out.push_back({ev.seq, rules::direction_consistent,
                               "API_CALL immediate caller " +
                                   ev.stack.back().method.canonical() + " is not an app method"});
            }
        } else if (callee_origin != Origin::App) {
            out.push_back({ev.seq, rules::direction_consistent,
                           "CALLBACK callee " + ev.callee.canonical() +
                               " is not an app method"});
        }
    }
    return out;
}

} // namespace fixlocus
