#ifndef FIXLOCUS_CALL_TREE_HPP
#define FIXLOCUS_CALL_TREE_HPP

#include "fixlocus/diff.hpp"
#include "fixlocus/trace.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fixlocus {

/// Node of the failure call tree. Identity is the full root-to-node
/// method path: the same method reached through two different callers
/// yields two nodes. Children keep first-occurrence order.
struct TreeNode {
    MethodRef method;
    std::vector<TreeNode> children;
    std::set<int> attached_sibs;
    int depth = 0;
    std::int64_t first_seq = -1; // earliest failure seq whose path touches this node

    bool operator==(const TreeNode&) const = default;
};

/// Caller tree of the failing execution with the suspicious blocks
/// attached where their anchors point.
struct FailureCallTree {
    TreeNode root;
    int total_sib_weight = 0;
    int max_depth = 0;
    std::map<int, int> sib_weights; // block id -> weight

    /// Node addressed by a root-to-node method path; nullptr when the
    /// path does not exist. path[0] must equal the root method.
    const TreeNode* find(std::span<const MethodRef> path) const;
};

/// Joined canonical text of a root-to-node path, used as a map key.
std::string path_key(std::span<const MethodRef> path);

/// Merges every failure event's stack (extended with the callee as leaf
/// frame) into a prefix tree and attaches each block at its anchor node.
/// Throws NoSibs when `sibs` is empty and AnchorNotInTrace when an
/// anchor path never occurs in the failure trace.
FailureCallTree build_failure_tree(const Trace& failure, const std::vector<Sib>& sibs);

/// Ids of the blocks attached at `node` or any of its descendants.
std::set<int> reachable_sibs(const FailureCallTree& tree, const TreeNode& node);

/// DOT rendering of the tree: one vertex per node labeled with the
/// canonical method text, block-carrying nodes additionally labeled with
/// `sibs=<ids>`. Byte-deterministic; children appear in first-occurrence
/// order of the failure trace.
std::string emit_dot(const FailureCallTree& tree);

} // namespace fixlocus

#endif
