#ifndef FIXLOCUS_TRACE_IO_HPP
#define FIXLOCUS_TRACE_IO_HPP

#include "fixlocus/trace.hpp"

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace fixlocus {

/// The boundary methods a logger has to monitor for one app: callback
/// targets inside the app package plus the framework methods the app
/// package calls.
struct MethodList {
    std::string app_package;
    std::set<MethodRef> methods;

    bool operator==(const MethodList&) const = default;
};

/// A user-supplied value rewrite applied after the built-in rules.
struct NormalizeRule {
    std::string pattern;     // ECMAScript regex
    std::string replacement; // std::regex_replace format string
};

/// Rewrites value noise so equal behavior diffs as equal text:
/// `Type@hexdigits` becomes `Type@<id>` and decimal runs longer than
/// 12 digits (timestamps) become `<ts>`. Idempotent.
std::string normalize_value(const std::string& raw);

/// normalize_value followed by the given extra rules, in order.
std::string normalize_value(const std::string& raw, const std::vector<NormalizeRule>& extra);

/// Re-normalizes every arg and return value of the trace with the extra
/// rules. Used when a pattern file is supplied on the command line.
Trace apply_normalize_rules(Trace trace, const std::vector<NormalizeRule>& extra);

/// Parses a pattern file: one `pattern<TAB>replacement` per line,
/// `#` starts a comment. Throws MalformedLine.
std::vector<NormalizeRule> parse_normalize_rules(std::istream& in);

/// Reads a trace file. Values are passed through normalize_value while
/// reading, so already-normalized files round-trip untouched. Throws
/// MalformedLine for format errors and InvariantViolation when the
/// parsed trace fails validate_trace.
Trace parse_trace(std::istream& in);
Trace parse_trace_file(const std::string& path);

/// Serializes a valid trace. Byte-deterministic; parse_trace inverts it.
std::string write_trace(const Trace& trace);
void write_trace_file(const Trace& trace, const std::string& path);

/// Extracts the boundary methods of `full_trace` under the given app
/// package: callees of events whose direction invariant holds with that
/// prefix, deduplicated. Throws EmptyResult when nothing matches.
MethodList filter_boundary_methods(const Trace& full_trace, const std::string& app_package);

/// Method list file: `#methods app=<package>` header, one canonical
/// MethodRef per line, sorted.
std::string write_method_list(const MethodList& list);
MethodList parse_method_list(std::istream& in);

} // namespace fixlocus

#endif
