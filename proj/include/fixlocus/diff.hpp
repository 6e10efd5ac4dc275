#ifndef FIXLOCUS_DIFF_HPP
#define FIXLOCUS_DIFF_HPP

#include "fixlocus/trace.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fixlocus {

/// Projection of a TraceEvent used as the diff's notion of equality.
/// The payload is populated only under value-sensitive diffing.
struct DiffKey {
    Direction direction = Direction::ApiCall;
    std::string callee; // canonical text
    std::optional<std::string> payload;

    bool operator==(const DiffKey&) const = default;
    auto operator<=>(const DiffKey&) const = default;
};

enum class HunkKind {
    Inserted, // present only in the failure trace
    Deleted,  // present only in the baseline trace
    Replaced, // both sides present and different
};

const char* to_string(HunkKind k);

/// Half-open index range into a trace's event list.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return begin == end; }

    bool operator==(const Span&) const = default;
};

/// One maximal non-matching region of the alignment.
struct Hunk {
    HunkKind kind = HunkKind::Replaced;
    Span baseline_span;
    Span failure_span;

    bool operator==(const Hunk&) const = default;
};

/// A contiguous block of differing boundary calls. `events` holds the
/// failure-side calls for Inserted/Replaced blocks and the baseline-side
/// calls for Deleted ones; `weight` is their count. The anchor locates
/// the block in the failure execution.
struct Sib {
    int id = 0;
    std::vector<TraceEvent> events;
    int weight = 0;
    std::vector<StackFrame> anchor_stack;
    HunkKind origin_kind = HunkKind::Replaced;

    /// Distinct callees of the block's events, first occurrence first.
    std::vector<MethodRef> callees() const;

    bool operator==(const Sib&) const = default;
};

/// One DiffKey per event, in seq order.
std::vector<DiffKey> project_keys(const Trace& trace, bool value_sensitive);

/// Longest-common-subsequence diff of the two projected key sequences.
/// Among equal-length alignments the canonical one is chosen: matched
/// (baseline, failure) index pairs are lexicographically minimal, so ties
/// resolve toward matching earlier baseline elements. Throws AppMismatch
/// when the traces belong to different app packages.
std::vector<Hunk> diff_traces(const Trace& baseline, const Trace& failure, bool value_sensitive);

/// Turns hunks into weighted suspicious blocks. Ids are consecutive from
/// zero in hunk order. Deleted blocks anchor at the stack of the nearest
/// preceding failure event, or at the entry-point-only stack when the
/// hunk sits before every failure event.
std::vector<Sib> extract_sibs(const std::vector<Hunk>& hunks, const Trace& baseline,
                              const Trace& failure);

/// Per-thread variant: each thread's event subsequences are diffed
/// independently, so cross-thread reorderings do not show up as blocks.
/// Deleted blocks anchor at the nearest preceding failure event of the
/// same thread. Ids are consecutive in (thread, block) order.
std::vector<Sib> extract_sibs_per_thread(const Trace& baseline, const Trace& failure,
                                         bool value_sensitive);

/// Report consumed by the `detect` command: CSV with one record per
/// block (id, kind, weight, callees, anchor). Byte-deterministic.
std::string write_sib_report(const std::vector<Sib>& sibs);

} // namespace fixlocus

#endif
