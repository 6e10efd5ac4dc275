#ifndef FIXLOCUS_BASELINES_HPP
#define FIXLOCUS_BASELINES_HPP

#include "fixlocus/trace.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fixlocus {

enum class Verdict { Pass, Fail };

/// Coverage of one test over ranked entities (methods or statements).
struct CoverageRow {
    std::string test_id;
    Verdict verdict = Verdict::Pass;
    std::set<std::string> covered;

    bool operator==(const CoverageRow&) const = default;
};

/// Spectrum input for SBFL: entities in ranking-tie order plus per-test
/// coverage rows.
struct CoverageMatrix {
    std::vector<std::string> entities;
    std::vector<CoverageRow> tests;

    bool operator==(const CoverageMatrix&) const = default;
};

/// `#coverage v1` header, then `testId<TAB>PASS|FAIL<TAB>entity;...`
/// per line. Entities are ordered by first appearance.
CoverageMatrix parse_coverage(std::istream& in);
std::string write_coverage(const CoverageMatrix& matrix);

/// The weakest comparison technique: app methods mentioned by the trace
/// differences, in the order the differences occur. A method's position
/// is its 1-based index.
std::vector<MethodRef> naive_ranking(const Trace& baseline, const Trace& failure);

/// Ochiai suspiciousness ef / sqrt((ef+nf)(ef+ep)) per entity, sorted
/// descending with ties kept in entity order. Entities with a zero
/// denominator score zero. Throws NoFailingTest.
std::vector<std::pair<std::string, double>> ochiai(const CoverageMatrix& matrix);

/// Best 1-based rank of any ground-truth member, or nullopt when none
/// of them appears in the ranking.
std::optional<int> achieved_rank(const std::vector<std::string>& ranking,
                                 const std::set<std::string>& truth);

/// Cumulative Top-1/Top-5/Top-10 and not-in-ranking counts per technique.
struct TopKCounts {
    int top1 = 0;
    int top5 = 0;
    int top10 = 0;
    int not_in_ranking = 0;

    bool operator==(const TopKCounts&) const = default;
};

struct TopKReport {
    std::map<std::string, TopKCounts> per_technique;

    bool operator==(const TopKReport&) const = default;
};

/// One evaluation scenario: per-technique rankings (absent when a
/// technique could not run) and the ground-truth method set.
struct ScenarioOutcome {
    std::string name;
    std::map<std::string, std::optional<std::vector<std::string>>> rankings;
    std::set<std::string> truth;
};

/// Counts, per technique, how often the best ground-truth member landed
/// in the top 1/5/10 positions. Counts are cumulative; a technique that
/// did not run for a scenario counts as not-in-ranking.
TopKReport topk_report(const std::vector<ScenarioOutcome>& scenarios);

/// Comparison CSV: one row per scenario with the achieved rank of each
/// technique (`-` when not found), followed by the cumulative rows.
std::string write_comparison_csv(const std::vector<std::string>& techniques,
                                 const std::vector<ScenarioOutcome>& scenarios);

} // namespace fixlocus

#endif
