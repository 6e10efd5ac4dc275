#include "fixlocus/call_tree.hpp"

#include "fixlocus/errors.hpp"
#include "text_util.hpp"

#include <algorithm>

namespace fixlocus {

std::string path_key(std::span<const MethodRef> path) {
    return text::join(path, "/", [](const MethodRef& m) { return m.canonical(); });
}

namespace {

void insert_path(TreeNode& node, std::span<const MethodRef> path, std::int64_t seq) {
    if (node.first_seq < 0 || seq < node.first_seq) {
        node.first_seq = seq;
    }
    if (path.empty()) {
        return;
    }
    auto it = std::find_if(node.children.begin(), node.children.end(),
                           [&](const TreeNode& c) { return c.method == path.front(); });
    if (it == node.children.end()) {
        TreeNode child;
        child.method = path.front();
        child.depth = node.depth + 1;
        node.children.push_back(std::move(child));
        it = std::prev(node.children.end());
    }
    insert_path(*it, path.subspan(1), seq);
}

std::vector<MethodRef> frames_to_methods(const std::vector<StackFrame>& frames) {
    std::vector<MethodRef> methods;
    methods.reserve(frames.size());
    for (const auto& f : frames) {
        methods.push_back(f.method);
    }
    return methods;
}

int compute_max_depth(const TreeNode& node) {
    int depth = node.depth;
    for (const auto& c : node.children) {
        depth = std::max(depth, compute_max_depth(c));
    }
    return depth;
}

void collect_sibs(const TreeNode& node, std::set<int>& out) {
    out.insert(node.attached_sibs.begin(), node.attached_sibs.end());
    for (const auto& c : node.children) {
        collect_sibs(c, out);
    }
}

void escape_label(const std::string& raw, std::string& out) {
    for (char c : raw) {
        if (c == '"' || c == '\\') {
            out.push_back('\\');
        }
        out.push_back(c);
    }
}

struct DotWriter {
    std::string vertices;
    std::string edges;
    int next_id = 0;

    void visit(const TreeNode& node) {
        int id = next_id++;
        vertices += "  n" + std::to_string(id) + " [label=\"";
        escape_label(node.method.canonical(), vertices);
        if (!node.attached_sibs.empty()) {
            vertices += "\\nsibs=";
            vertices += text::join(node.attached_sibs, ",",
                                   [](int s) { return std::to_string(s); });
        }
        vertices += "\"];\n";
        for (const auto& c : node.children) {
            // children take ids in preorder, so the next vertex id is known
            edges += "  n" + std::to_string(id) + " -> n" + std::to_string(next_id) + ";\n";
            visit(c);
        }
    }
};

} // namespace

const TreeNode* FailureCallTree::find(std::span<const MethodRef> path) const {
    if (path.empty() || !(path.front() == root.method)) {
        return nullptr;
    }
    const TreeNode* cur = &root;
    for (std::size_t i = 1; i < path.size(); ++i) {
        auto it = std::find_if(cur->children.begin(), cur->children.end(),
                               [&](const TreeNode& c) { return c.method == path[i]; });
        if (it == cur->children.end()) {
            return nullptr;
        }
        cur = &*it;
    }
    return cur;
}

FailureCallTree build_failure_tree(const Trace& failure, const std::vector<Sib>& sibs) {
    if (sibs.empty()) {
        throw NoSibs();
    }

    FailureCallTree tree;
    if (auto entry = failure.entry_point()) {
        tree.root.method = *entry;
    } else {
        tree.root.method = sibs.front().anchor_stack.front().method;
    }
    tree.root.depth = 0;

    for (const auto& ev : failure.events) {
        std::vector<MethodRef> path = frames_to_methods(ev.stack);
        path.push_back(ev.callee);
        if (!(path.front() == tree.root.method)) {
            throw AnchorNotInTrace(path_key(path));
        }
        insert_path(tree.root, std::span<const MethodRef>(path).subspan(1), ev.seq);
    }

    for (const auto& sib : sibs) {
        std::vector<MethodRef> anchor = frames_to_methods(sib.anchor_stack);
        const TreeNode* found = tree.find(anchor);
        if (found == nullptr) {
            throw AnchorNotInTrace(path_key(anchor));
        }
        // const_cast is contained: the tree is ours and still under construction
        const_cast<TreeNode*>(found)->attached_sibs.insert(sib.id);
        tree.total_sib_weight += sib.weight;
        tree.sib_weights[sib.id] = sib.weight;
    }

    tree.max_depth = compute_max_depth(tree.root);
    return tree;
}

std::set<int> reachable_sibs(const FailureCallTree& tree, const TreeNode& node) {
    (void)tree;
    std::set<int> out;
    collect_sibs(node, out);
    return out;
}

std::string emit_dot(const FailureCallTree& tree) {
    DotWriter writer;
    writer.visit(tree.root);
    std::string out = "digraph failure_call_tree {\n";
    out += writer.vertices;
    out += writer.edges;
    out += "}\n";
    return out;
}

} // namespace fixlocus
