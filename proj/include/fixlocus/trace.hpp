#ifndef FIXLOCUS_TRACE_HPP
#define FIXLOCUS_TRACE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fixlocus {

/// Identity of a method: `package.Class.method(descriptor)`.
/// The descriptor is the parameter-type list as text and may be empty
/// when the recorder did not capture it.
struct MethodRef {
    std::string package;
    std::string class_name;
    std::string method;
    std::string descriptor;

    std::string canonical() const;

    /// Parses the canonical form. Returns nullopt when the text does not
    /// have at least `pkg.Class.method(` plus a closing paren.
    static std::optional<MethodRef> parse(const std::string& text);

    bool operator==(const MethodRef&) const = default;
    auto operator<=>(const MethodRef&) const = default;
};

enum class Direction {
    ApiCall,  // app -> framework
    Callback, // framework -> app
};

enum class Origin {
    App,
    Framework,
};

const char* to_string(Direction d);
const char* to_string(Origin o);
std::optional<Direction> direction_from_string(const std::string& text);

/// True when `package` equals the app package or lives beneath it.
bool is_app_package(const std::string& package, const std::string& app_package);

/// Origin of a method relative to an app package prefix.
Origin origin_of(const MethodRef& method, const std::string& app_package);

/// One caller on the stack captured with a boundary event.
struct StackFrame {
    MethodRef method;
    Origin origin = Origin::Framework;

    bool operator==(const StackFrame&) const = default;
};

/// Return value of a boundary call. `void` and "not recorded" are
/// distinct from any textual value.
struct ReturnValue {
    enum class Kind { Value, Void, Unrecorded };

    Kind kind = Kind::Void;
    std::string text; // meaningful only when kind == Value

    static ReturnValue void_value() { return {Kind::Void, {}}; }
    static ReturnValue unrecorded() { return {Kind::Unrecorded, {}}; }
    static ReturnValue of(std::string value) { return {Kind::Value, std::move(value)}; }

    bool operator==(const ReturnValue&) const = default;
};

/// One recorded interaction crossing the app/framework border.
/// `stack` runs from the entry point (outermost) to the immediate
/// caller of `callee`; internal calls between the two sides are never
/// events of their own, they only show up inside stacks.
struct TraceEvent {
    std::int64_t seq = 0;
    std::int64_t thread = 0;
    Direction direction = Direction::ApiCall;
    MethodRef callee;
    std::vector<std::string> args;
    ReturnValue ret;
    std::vector<StackFrame> stack;

    bool operator==(const TraceEvent&) const = default;
};

/// Ordered boundary-call record of one test execution in one environment.
struct Trace {
    std::string app_package;
    std::string env_label;
    std::vector<TraceEvent> events;

    /// stack[0] of the first event, i.e. the method every stack starts at.
    /// Empty traces have no entry point.
    std::optional<MethodRef> entry_point() const;

    bool operator==(const Trace&) const = default;
};

/// Entry point used for traces that do not come from a real device.
const MethodRef& synthetic_entry_point();

/// One broken invariant. `seq` is negative for trace-level violations.
struct Violation {
    std::int64_t seq = -1;
    std::string rule;
    std::string detail;

    std::string describe() const;

    bool operator==(const Violation&) const = default;
};

// Rule identifiers used by validate_trace.
namespace rules {
inline constexpr const char* seq_sorted = "seq sorted";
inline constexpr const char* seq_unique = "seq values unique";
inline constexpr const char* seq_non_negative = "seq non-negative";
inline constexpr const char* stack_non_empty = "stack non-empty";
inline constexpr const char* single_entry_point = "single entry point";
inline constexpr const char* direction_consistent = "direction consistent with app package";
inline constexpr const char* frame_origin = "stack origins consistent";
inline constexpr const char* values_normalized = "values normalized";
inline constexpr const char* values_serializable = "values serializable";
inline constexpr const char* method_non_empty = "method parts non-empty";
} // namespace rules

/// Checks every Trace and TraceEvent invariant. Violations are data,
/// not failures: the returned list is empty iff the trace is valid.
std::vector<Violation> validate_trace(const Trace& trace);

} // namespace fixlocus

#endif
