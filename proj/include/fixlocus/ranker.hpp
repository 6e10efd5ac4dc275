#ifndef FIXLOCUS_RANKER_HPP
#define FIXLOCUS_RANKER_HPP

#include "fixlocus/call_tree.hpp"
#include "fixlocus/diff.hpp"

#include <map>
#include <string>
#include <vector>

namespace fixlocus {

/// Two-factor score of one tree node. S is the fraction of total block
/// weight reachable from the node; D = 1/(1+d) where d is the edge
/// distance to the nearest reachable block carrier. Nodes reaching no
/// block score zero (their D is reported as zero as well).
struct NodeScore {
    std::string path;
    double S = 0.0;
    double D = 0.0;
    double score = 0.0;

    bool operator==(const NodeScore&) const = default;
};

/// One suggested fix locus: an app method, its best node score, and the
/// suspicious blocks reachable from that node as supporting evidence.
struct RankedCandidate {
    int rank = 0;
    MethodRef method;
    NodeScore score;
    std::vector<Sib> evidence; // sorted by id

    bool operator==(const RankedCandidate&) const = default;
};

/// Scores every node of the tree. The root always has S = 1; block
/// carriers have D = 1.
std::map<std::string, NodeScore> score_nodes(const FailureCallTree& tree);

/// Aggregates node scores per app method (best node wins), drops
/// framework methods, the entry point and zero-score methods, and
/// orders candidates by score, then earliest occurrence in the failure
/// trace, then canonical text. `sibs` must be the blocks the tree was
/// built with. Throws EmptyRanking when no candidate remains.
std::vector<RankedCandidate> rank(const FailureCallTree& tree, const std::vector<Sib>& sibs,
                                  const std::string& app_package);

/// CSV with header `rank,method,score,S,D,evidence`. Evidence entries
/// are `sibId:kind:weight:[callees]` joined by `|`; scores use six
/// decimal places. Byte-deterministic.
std::string emit_csv(const std::vector<RankedCandidate>& ranking);

} // namespace fixlocus

#endif
