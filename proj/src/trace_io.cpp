#include "fixlocus/trace_io.hpp"

#include "fixlocus/errors.hpp"
#include "text_util.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <regex>
#include <sstream>

namespace fixlocus {

namespace {

constexpr const char* kTraceHeaderPrefix = "#trace v1 app=";
constexpr const char* kMethodsHeaderPrefix = "#methods app=";

bool is_hex(char c) {
    return std::isxdigit(static_cast<unsigned char>(c)) != 0;
}

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

bool is_ident(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '.';
}

bool is_digit(char c) {
    return std::isdigit(static_cast<unsigned char>(c)) != 0;
}

// TypeName@hexdigits -> TypeName@<id>
std::string strip_identity_hashes(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_ident_start(s[i])) {
            std::size_t j = i;
            while (j < s.size() && is_ident(s[j])) {
                ++j;
            }
            if (j < s.size() && s[j] == '@') {
                std::size_t k = j + 1;
                while (k < s.size() && is_hex(s[k])) {
                    ++k;
                }
                bool hex_run = k > j + 1;
                bool run_ends = k == s.size() || !is_ident(s[k]);
                if (hex_run && run_ends) {
                    out.append(s, i, j - i);
                    out += "@<id>";
                    i = k;
                    continue;
                }
            }
            out.append(s, i, j - i);
            i = j;
            continue;
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

// standalone decimal runs longer than 12 digits -> <ts>
std::string strip_long_decimals(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_digit(s[i]) && (i == 0 || !is_ident(s[i - 1]))) {
            std::size_t j = i;
            while (j < s.size() && is_digit(s[j])) {
                ++j;
            }
            if (j - i > 12 && (j == s.size() || !is_ident(s[j]))) {
                out += "<ts>";
                i = j;
                continue;
            }
            out.append(s, i, j - i);
            i = j;
            continue;
        }
        out.push_back(s[i]);
        ++i;
    }
    return out;
}

std::int64_t parse_int(const std::string& field, std::size_t line, const char* what) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw MalformedLine(line, std::string("cannot parse ") + what + " '" + field + "'");
    }
    return value;
}

MethodRef parse_method(const std::string& tex, std::size_t line, const char* what) {
    auto ref = MethodRef::parse(tex);
    if (!ref) {
        throw MalformedLine(line, std::string("cannot parse ") + what + " '" + tex + "'");
    }
    return *ref;
}

std::string ret_to_text(const ReturnValue& ret) {
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

ReturnValue ret_from_text(const std::string& tex) {
    if (tex == "void") {
        return ReturnValue::void_value();
    }
    if (tex == "?") {
        return ReturnValue::unrecorded();
    }
    return ReturnValue::of(tex);
}

} // namespace

std::string normalize_value(const std::string& raw) {
    return strip_long_decimals(strip_identity_hashes(raw));
}

std::string normalize_value(const std::string& raw, const std::vector<NormalizeRule>& extra) {
    std::string value = normalize_value(raw);
    for (const auto& rule : extra) {
        value = std::regex_replace(value, std::regex(rule.pattern), rule.replacement);
    }
    return value;
}

Trace apply_normalize_rules(Trace trace, const std::vector<NormalizeRule>& extra) {
    for (auto& ev : trace.events) {
        for (auto& arg : ev.args) {
            arg = normalize_value(arg, extra);
        }
        if (ev.ret.kind == ReturnValue::Kind::Value) {
            ev.ret.text = normalize_value(ev.ret.text, extra);
        }
    }
    return trace;
}

std::vector<NormalizeRule> parse_normalize_rules(std::istream& in) {
    std::vector<NormalizeRule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto fields = text::split(line, '\t');
        if (fields.size() != 2 || fields[0].empty()) {
            throw MalformedLine(line_no, "expected pattern<TAB>replacement");
        }
        try {
            std::regex probe(fields[0]);
        } catch (const std::regex_error& e) {
            throw MalformedLine(line_no, std::string("bad pattern: ") + e.what());
        }
        rules.push_back({fields[0], fields[1]});
    }
    return rules;
}

Trace parse_trace(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        throw MalformedLine(1, "empty input, expected trace header");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (!text::starts_with(line, kTraceHeaderPrefix)) {
        throw MalformedLine(1, "expected header '#trace v1 app=<package> env=<label>'");
    }
    std::string rest = line.substr(std::string(kTraceHeaderPrefix).size());
    std::size_t env_pos = rest.find(" env=");
    if (env_pos == std::string::npos) {
        throw MalformedLine(1, "header missing env=<label>");
    }
    trace.app_package = rest.substr(0, env_pos);
    trace.env_label = rest.substr(env_pos + 5);
    if (trace.app_package.empty()) {
        throw MalformedLine(1, "header has empty app package");
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
        if (fields.size() != 7) {
            throw MalformedLine(line_no, "expected 7 tab-separated fields, got " +
                                             std::to_string(fields.size()));
        }
        TraceEvent ev;
        ev.seq = parse_int(fields[0], line_no, "seq");
        ev.thread = parse_int(fields[1], line_no, "thread");
        auto dir = direction_from_string(fields[2]);
        if (!dir) {
            throw MalformedLine(line_no, "direction must be API_CALL or CALLBACK, got '" +
                                             fields[2] + "'");
        }
        ev.direction = *dir;
        ev.callee = parse_method(fields[3], line_no, "callee");
        if (fields[4] != "-") {
            for (auto& arg : text::split(fields[4], ';')) {
                ev.args.push_back(normalize_value(arg));
            }
        }
        ev.ret = ret_from_text(fields[5]);
        if (ev.ret.kind == ReturnValue::Kind::Value) {
            ev.ret.text = normalize_value(ev.ret.text);
        }
        if (fields[6].empty()) {
            throw MalformedLine(line_no, "stack field is empty");
        }
        for (auto& frame_text : text::split_top_level(fields[6], ',')) {
            StackFrame frame;
            frame.method = parse_method(frame_text, line_no, "stack frame");
            frame.origin = origin_of(frame.method, trace.app_package);
            ev.stack.push_back(std::move(frame));
        }
        trace.events.push_back(std::move(ev));
    }

    auto violations = validate_trace(trace);
    if (!violations.empty()) {
        std::vector<std::string> described;
        described.reserve(violations.size());
        for (const auto& v : violations) {
            described.push_back(v.describe());
        }
        throw InvariantViolation(std::move(described));
    }
    return trace;
}

Trace parse_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open trace file '" + path + "'");
    }
    return parse_trace(in);
}

std::string write_trace(const Trace& trace) {
    std::string out = kTraceHeaderPrefix + trace.app_package + " env=" + trace.env_label + "\n";
    for (const auto& ev : trace.events) {
        out += std::to_string(ev.seq);
        out += '\t';
        out += std::to_string(ev.thread);
        out += '\t';
        out += to_string(ev.direction);
        out += '\t';
        out += ev.callee.canonical();
        out += '\t';
        out += ev.args.empty() ? "-" : text::join(ev.args, ";");
        out += '\t';
        out += ret_to_text(ev.ret);
        out += '\t';
        out += text::join(ev.stack, ",",
                          [](const StackFrame& f) { return f.method.canonical(); });
        out += '\n';
    }
    return out;
}

void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write trace file '" + path + "'");
    }
    out << write_trace(trace);
}

MethodList filter_boundary_methods(const Trace& full_trace, const std::string& app_package) {
    MethodList list;
    list.app_package = app_package;
    for (const auto& ev : full_trace.events) {
        if (ev.stack.empty()) {
            continue;
        }
        Origin callee_origin = origin_of(ev.callee, app_package);
        Origin caller_origin = origin_of(ev.stack.back().method, app_package);
        bool boundary = ev.direction == Direction::ApiCall
                            ? callee_origin == Origin::Framework && caller_origin == Origin::App
                            : callee_origin == Origin::App;
        if (boundary) {
            list.methods.insert(ev.callee);
        }
    }
    if (list.methods.empty()) {
        throw EmptyResult(app_package);
    }
    return list;
}

std::string write_method_list(const MethodList& list) {
    std::string out = kMethodsHeaderPrefix + list.app_package + "\n";
    for (const auto& m : list.methods) {
        out += m.canonical();
        out += '\n';
    }
    return out;
}

MethodList parse_method_list(std::istream& in) {
    MethodList list;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw MalformedLine(1, "empty input, expected method list header");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (!text::starts_with(line, kMethodsHeaderPrefix)) {
        throw MalformedLine(1, "expected header '#methods app=<package>'");
    }
    list.app_package = line.substr(std::string(kMethodsHeaderPrefix).size());
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line[0] == '#') {
            continue;
        }
        list.methods.insert(parse_method(line, line_no, "method"));
    }
    return list;
}

} // namespace fixlocus
