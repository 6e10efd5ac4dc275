#include "fixlocus/baselines.hpp"

#include "fixlocus/diff.hpp"
#include "fixlocus/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <cmath>
#include <istream>

namespace fixlocus {

CoverageMatrix parse_coverage(std::istream& in) {
    CoverageMatrix matrix;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw MalformedLine(1, "empty input, expected '#coverage v1'");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "#coverage v1") {
        throw MalformedLine(1, "expected header '#coverage v1'");
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
        if (fields.size() != 3) {
            throw MalformedLine(line_no, "expected testId<TAB>PASS|FAIL<TAB>entities");
        }
        CoverageRow row;
        row.test_id = fields[0];
        if (fields[1] == "PASS") {
            row.verdict = Verdict::Pass;
        } else if (fields[1] == "FAIL") {
            row.verdict = Verdict::Fail;
        } else {
            throw MalformedLine(line_no, "verdict must be PASS or FAIL, got '" + fields[1] + "'");
        }
        if (!fields[2].empty()) {
            for (auto& entity : text::split(fields[2], ';')) {
                if (entity.empty()) {
                    continue;
                }
                if (seen.insert(entity).second) {
                    matrix.entities.push_back(entity);
                }
                row.covered.insert(entity);
            }
        }
        matrix.tests.push_back(std::move(row));
    }
    return matrix;
}

std::string write_coverage(const CoverageMatrix& matrix) {
    std::string out = "#coverage v1\n";
    for (const auto& row : matrix.tests) {
        out += row.test_id;
        out += '\t';
        out += row.verdict == Verdict::Pass ? "PASS" : "FAIL";
        out += '\t';
        out += text::join(row.covered, ";", [](const std::string& e) { return e; });
        out += '\n';
    }
    return out;
}

std::vector<MethodRef> naive_ranking(const Trace& baseline, const Trace& failure) {
    auto hunks = diff_traces(baseline, failure, false);
    auto sibs = extract_sibs(hunks, baseline, failure);

    std::vector<MethodRef> ranking;
    auto add = [&](const MethodRef& m) {
        if (origin_of(m, failure.app_package) != Origin::App) {
            return;
        }
        if (std::find(ranking.begin(), ranking.end(), m) == ranking.end()) {
            ranking.push_back(m);
        }
    };
    // a developer reads the textual diff top to bottom: the differing
    // calls first, then the recorded caller stack left to right
    for (const auto& sib : sibs) {
        for (const auto& ev : sib.events) {
            add(ev.callee);
        }
        for (const auto& frame : sib.anchor_stack) {
            add(frame.method);
        }
    }
    return ranking;
}

std::vector<std::pair<std::string, double>> ochiai(const CoverageMatrix& matrix) {
    int total_failing = 0;
    for (const auto& row : matrix.tests) {
        if (row.verdict == Verdict::Fail) {
            ++total_failing;
        }
    }
    if (total_failing == 0) {
        throw NoFailingTest();
    }

    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(matrix.entities.size());
    for (const auto& entity : matrix.entities) {
        int ef = 0, ep = 0;
        for (const auto& row : matrix.tests) {
            if (!row.covered.contains(entity)) {
                continue;
            }
            (row.verdict == Verdict::Fail ? ef : ep)++;
        }
        int nf = total_failing - ef;
        double denom = std::sqrt(static_cast<double>(ef + nf) * static_cast<double>(ef + ep));
        scored.emplace_back(entity, denom == 0.0 ? 0.0 : ef / denom);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& x, const auto& y) { return x.second > y.second; });
    return scored;
}

std::optional<int> achieved_rank(const std::vector<std::string>& ranking,
                                 const std::set<std::string>& truth) {
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (truth.contains(ranking[i])) {
            return static_cast<int>(i) + 1;
        }
    }
    return std::nullopt;
}

TopKReport topk_report(const std::vector<ScenarioOutcome>& scenarios) {
    TopKReport report;
    for (const auto& scenario : scenarios) {
        for (const auto& [technique, ranking] : scenario.rankings) {
            auto& counts = report.per_technique[technique];
            std::optional<int> rank_pos;
            if (ranking) {
                rank_pos = achieved_rank(*ranking, scenario.truth);
            }
            if (!rank_pos) {
                ++counts.not_in_ranking;
                continue;
            }
            if (*rank_pos <= 1) {
                ++counts.top1;
            }
            if (*rank_pos <= 5) {
                ++counts.top5;
            }
            if (*rank_pos <= 10) {
                ++counts.top10;
            }
        }
    }
    return report;
}

std::string write_comparison_csv(const std::vector<std::string>& techniques,
                                 const std::vector<ScenarioOutcome>& scenarios) {
    std::string out = "scenario";
    for (const auto& tech : techniques) {
        out += ',';
        out += text::csv_field(tech);
    }
    out += '\n';

    for (const auto& scenario : scenarios) {
        out += text::csv_field(scenario.name);
        for (const auto& tech : techniques) {
            out += ',';
            auto it = scenario.rankings.find(tech);
            std::optional<int> rank_pos;
            if (it != scenario.rankings.end() && it->second) {
                rank_pos = achieved_rank(*it->second, scenario.truth);
            }
            out += rank_pos ? std::to_string(*rank_pos) : "-";
        }
        out += '\n';
    }

    TopKReport report = topk_report(scenarios);
    auto row = [&](const char* label, auto pick) {
        out += label;
        for (const auto& tech : techniques) {
            out += ',';
            auto it = report.per_technique.find(tech);
            out += it == report.per_technique.end() ? "0" : std::to_string(pick(it->second));
        }
        out += '\n';
    };
    row("Top-1", [](const TopKCounts& c) { return c.top1; });
    row("Top-5", [](const TopKCounts& c) { return c.top5; });
    row("Top-10", [](const TopKCounts& c) { return c.top10; });
    row("Not in the ranking", [](const TopKCounts& c) { return c.not_in_ranking; });
    return out;
}

} // namespace fixlocus
