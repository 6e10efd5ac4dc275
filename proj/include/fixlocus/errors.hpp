#ifndef FIXLOCUS_ERRORS_HPP
#define FIXLOCUS_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace fixlocus {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A line of an input file does not follow the expected format.
class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_number(line) {}

    std::size_t line_number;
};

/// Parsed data violates the trace model invariants.
class InvariantViolation : public Error {
public:
    explicit InvariantViolation(std::vector<std::string> violation_list)
        : Error(join(violation_list)), violations(std::move(violation_list)) {}

    std::vector<std::string> violations;

private:
    static std::string join(const std::vector<std::string>& vs) {
        std::string out = "trace invariants violated:";
        for (const auto& v : vs) {
            out += "\n  ";
            out += v;
        }
        return out;
    }
};

/// The two traces were not recorded for the same app package.
class AppMismatch : public Error {
public:
    AppMismatch(const std::string& lhs, const std::string& rhs)
        : Error("app package mismatch: '" + lhs + "' vs '" + rhs + "'") {}
};

/// Boundary filtering matched nothing; usually a wrong package prefix.
class EmptyResult : public Error {
public:
    explicit EmptyResult(const std::string& app_package)
        : Error("no boundary method matches package prefix '" + app_package + "'") {}
};

/// Tree construction requires at least one suspicious block.
class NoSibs : public Error {
public:
    NoSibs() : Error("no suspicious invocation blocks: nothing to localize") {}
};

/// A block anchor names a caller path that never occurs in the failure trace.
class AnchorNotInTrace : public Error {
public:
    explicit AnchorNotInTrace(const std::string& path)
        : Error("anchor path not present in failure trace: " + path) {}
};

/// No app-origin method reaches any suspicious block.
class EmptyRanking : public Error {
public:
    explicit EmptyRanking(const std::string& app_package)
        : Error("no app-origin candidate for package '" + app_package +
                "' (wrong package instrumented?)") {}
};

/// A coverage matrix without failing tests cannot be scored.
class NoFailingTest : public Error {
public:
    NoFailingTest() : Error("coverage matrix has no failing test") {}
};

/// A scenario specification is not generatable.
class InvalidSpec : public Error {
public:
    explicit InvalidSpec(const std::string& reason) : Error("invalid scenario: " + reason) {}
};

} // namespace fixlocus

#endif
