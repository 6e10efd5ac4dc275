#include "fixlocus/ranker.hpp"

#include "fixlocus/errors.hpp"
#include "text_util.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace fixlocus {

namespace {

constexpr int kUnreachable = std::numeric_limits<int>::max();

struct SubtreeFacts {
    int reach_weight = 0;            // summed weight of blocks in the subtree
    int carrier_dist = kUnreachable; // edges to the nearest block carrier
};

SubtreeFacts score_subtree(const TreeNode& node, const FailureCallTree& tree,
                           std::vector<MethodRef>& path,
                           std::map<std::string, NodeScore>& scores) {
    path.push_back(node.method);
    SubtreeFacts facts;
    for (int id : node.attached_sibs) {
        facts.reach_weight += tree.sib_weights.at(id);
    }
    if (!node.attached_sibs.empty()) {
        facts.carrier_dist = 0;
    }
    for (const auto& child : node.children) {
        SubtreeFacts sub = score_subtree(child, tree, path, scores);
        facts.reach_weight += sub.reach_weight;
        if (sub.carrier_dist != kUnreachable) {
            facts.carrier_dist = std::min(facts.carrier_dist, sub.carrier_dist + 1);
        }
    }

    NodeScore score;
    score.path = path_key(path);
    if (facts.reach_weight > 0) {
        score.S = static_cast<double>(facts.reach_weight) / tree.total_sib_weight;
        score.D = 1.0 / (1.0 + facts.carrier_dist);
        score.score = score.S * score.D;
    }
    scores.emplace(score.path, score);
    path.pop_back();
    return facts;
}

struct MethodBest {
    double score = -1.0;
    std::int64_t node_first_seq = 0;
    int node_depth = 0;
    std::string node_path;
    const TreeNode* node = nullptr;
    NodeScore node_score;
    std::int64_t method_first_seq = std::numeric_limits<std::int64_t>::max();
    MethodRef method;
};

} // namespace

std::map<std::string, NodeScore> score_nodes(const FailureCallTree& tree) {
    std::map<std::string, NodeScore> scores;
    std::vector<MethodRef> path;
    score_subtree(tree.root, tree, path, scores);
    return scores;
}

std::vector<RankedCandidate> rank(const FailureCallTree& tree, const std::vector<Sib>& sibs,
                                  const std::string& app_package) {
    auto scores = score_nodes(tree);

    std::map<std::string, MethodBest> best_per_method; // canonical method -> best node

    std::vector<MethodRef> path;
    std::function<void(const TreeNode&)> collect = [&](const TreeNode& node) {
        path.push_back(node.method);
        if (node.depth > 0 && origin_of(node.method, app_package) == Origin::App) {
            const NodeScore& ns = scores.at(path_key(path));
            auto& best = best_per_method[node.method.canonical()];
            best.method = node.method;
            best.method_first_seq = std::min(best.method_first_seq, node.first_seq);
            bool better =
                best.node == nullptr || ns.score > best.score ||
                (ns.score == best.score &&
                 std::tie(node.first_seq, node.depth, ns.path) <
                     std::tie(best.node_first_seq, best.node_depth, best.node_path));
            if (better) {
                best.score = ns.score;
                best.node_first_seq = node.first_seq;
                best.node_depth = node.depth;
                best.node_path = ns.path;
                best.node = &node;
                best.node_score = ns;
            }
        }
        for (const auto& child : node.children) {
            collect(child);
        }
        path.pop_back();
    };
    collect(tree.root);

    std::vector<RankedCandidate> candidates;
    std::map<std::string, std::int64_t> first_seq;
    for (const auto& [canonical, best] : best_per_method) {
        first_seq[canonical] = best.method_first_seq;
        if (best.score <= 0.0) {
            continue; // reaches no suspicious block, so there is no evidence to show
        }
        RankedCandidate cand;
        cand.method = best.method;
        cand.score = best.node_score;
        for (int id : reachable_sibs(tree, *best.node)) {
            cand.evidence.push_back(sibs[static_cast<std::size_t>(id)]);
        }
        candidates.push_back(std::move(cand));
    }
    if (candidates.empty()) {
        throw EmptyRanking(app_package);
    }

    std::sort(candidates.begin(), candidates.end(),
              [&](const RankedCandidate& x, const RankedCandidate& y) {
                  if (x.score.score != y.score.score) {
                      return x.score.score > y.score.score;
                  }
                  std::int64_t fx = first_seq.at(x.method.canonical());
                  std::int64_t fy = first_seq.at(y.method.canonical());
                  if (fx != fy) {
                      return fx < fy;
                  }
                  return x.method.canonical() < y.method.canonical();
              });
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        candidates[i].rank = static_cast<int>(i) + 1;
    }
    return candidates;
}

std::string emit_csv(const std::vector<RankedCandidate>& ranking) {
    std::string out = "rank,method,score,S,D,evidence\n";
    for (const auto& cand : ranking) {
        std::string evidence = text::join(cand.evidence, "|", [](const Sib& sib) {
            std::string entry = std::to_string(sib.id);
            entry += ':';
            entry += to_string(sib.origin_kind);
            entry += ':';
            entry += std::to_string(sib.weight);
            entry += ":[";
            entry += text::join(sib.callees(), ",",
                                [](const MethodRef& m) { return m.canonical(); });
            entry += ']';
            return entry;
        });
        out += std::to_string(cand.rank);
        out += ',';
        out += text::csv_field(cand.method.canonical());
        out += ',';
        out += text::format_score(cand.score.score);
        out += ',';
        out += text::format_score(cand.score.S);
        out += ',';
        out += text::format_score(cand.score.D);
        out += ',';
        out += text::csv_field(evidence);
        out += '\n';
    }
    return out;
}

} // namespace fixlocus
