#ifndef TTN_DIMENSION_TREE_HPP
#define TTN_DIMENSION_TREE_HPP

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ttn/rng.hpp"

namespace ttn {

/// A tree node is a sorted list of 1-based variable indices.
using NodeSet = std::vector<int>;

inline std::string node_to_string(const NodeSet& node) {
    std::ostringstream os;
    for (std::size_t i = 0; i < node.size(); ++i) {
        if (i) os << ',';
        os << node[i];
    }
    return os.str();
}

/// Dimension partition tree over {1,...,d}: the root is {1,...,d}, the
/// children of every interior node partition it, and the leaves are exactly
/// the singletons.
class DimensionTree {
public:
    /// Build from an arbitrary collection of subsets, checking all structural
    /// requirements. Throws std::invalid_argument with a description of the
    /// first violation found.
    static DimensionTree validate(std::vector<NodeSet> nodes) {
        if (nodes.empty()) throw std::invalid_argument("tree: empty node set");
        for (auto& n : nodes) {
            if (n.empty()) throw std::invalid_argument("tree: empty node");
            std::sort(n.begin(), n.end());
            if (std::adjacent_find(n.begin(), n.end()) != n.end())
                throw std::invalid_argument("tree: node with repeated variable");
        }
        std::sort(nodes.begin(), nodes.end(), node_less);
        if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
            throw std::invalid_argument("tree: duplicate nodes");

        // The root must be {1,...,d} covering every variable present.
        int d = 0;
        for (const auto& n : nodes) d = std::max(d, n.back());
        NodeSet root(d);
        std::iota(root.begin(), root.end(), 1);
        if (!std::binary_search(nodes.begin(), nodes.end(), root, node_less))
            throw std::invalid_argument("tree: missing root {1,...,d}");

        DimensionTree tree;
        tree.d_ = d;
        tree.nodes_ = std::move(nodes);
        tree.build_structure();
        return tree;
    }

    /// Binary tree splitting each node's ordered variable list as evenly as
    /// possible, the left child taking ceil(k/2) variables.
    static DimensionTree balanced_binary(int d) {
        if (d < 2) throw std::invalid_argument("balanced_binary: d must be >= 2");
        NodeSet all(d);
        std::iota(all.begin(), all.end(), 1);
        std::vector<NodeSet> nodes;
        split_balanced(all, nodes);
        return validate(std::move(nodes));
    }

    /// Binary tree from recursive uniformly random bipartitions.
    static DimensionTree random_binary(int d, Rng& rng) {
        if (d < 2) throw std::invalid_argument("random_binary: d must be >= 2");
        NodeSet all(d);
        std::iota(all.begin(), all.end(), 1);
        std::vector<NodeSet> nodes;
        split_random(all, nodes, rng);
        return validate(std::move(nodes));
    }

    /// Balanced binary shape applied to a uniformly random permutation of the
    /// variables.
    static DimensionTree random_balanced(int d, Rng& rng) {
        if (d < 2) throw std::invalid_argument("random_balanced: d must be >= 2");
        NodeSet perm(d);
        std::iota(perm.begin(), perm.end(), 1);
        for (int i = d - 1; i > 0; --i)
            std::swap(perm[i], perm[static_cast<int>(rng.below(i + 1))]);
        std::vector<NodeSet> nodes;
        split_balanced(perm, nodes);
        return validate(std::move(nodes));
    }

    int dimension() const { return d_; }
    int node_count() const { return static_cast<int>(nodes_.size()); }
    int depth() const { return depth_; }

    const NodeSet& node(int id) const { return nodes_[id]; }
    int root() const { return root_; }
    int parent(int id) const { return parent_[id]; }
    const std::vector<int>& children(int id) const { return children_[id]; }
    int level(int id) const { return level_[id]; }
    bool is_leaf(int id) const { return children_[id].empty(); }
    bool is_root(int id) const { return id == root_; }

    /// Node id of the singleton leaf {nu}.
    int leaf_of(int nu) const {
        if (nu < 1 || nu > d_) throw std::out_of_range("tree: variable out of range");
        return leaf_of_[nu - 1];
    }

    /// Ids of all leaves in variable order {1},...,{d}.
    std::vector<int> leaves() const {
        std::vector<int> out(leaf_of_);
        return out;
    }

    /// Id of a node given its variable set; -1 when absent.
    int find(const NodeSet& vars) const {
        NodeSet key = vars;
        std::sort(key.begin(), key.end());
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), key, node_less);
        if (it == nodes_.end() || *it != key) return -1;
        return static_cast<int>(it - nodes_.begin());
    }

    /// All nodes except the root, deepest level first, ties broken by
    /// lexicographic order of the variable lists. Children always precede
    /// their parents.
    std::vector<int> nodes_by_decreasing_level() const {
        std::vector<int> ids;
        ids.reserve(nodes_.size() - 1);
        for (int id = 0; id < node_count(); ++id)
            if (id != root_) ids.push_back(id);
        std::sort(ids.begin(), ids.end(), [this](int a, int b) {
            if (level_[a] != level_[b]) return level_[a] > level_[b];
            return node_less(nodes_[a], nodes_[b]);
        });
        return ids;
    }

    /// Sorted complement of a node's variable set in {1,...,d}.
    NodeSet complement(int id) const {
        NodeSet out;
        const NodeSet& in = nodes_[id];
        std::size_t j = 0;
        for (int nu = 1; nu <= d_; ++nu) {
            if (j < in.size() && in[j] == nu) {
                ++j;
            } else {
                out.push_back(nu);
            }
        }
        return out;
    }

    const std::vector<NodeSet>& all_nodes() const { return nodes_; }

private:
    static bool node_less(const NodeSet& a, const NodeSet& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }

    static void split_balanced(const NodeSet& vars, std::vector<NodeSet>& out) {
        NodeSet sorted = vars;
        std::sort(sorted.begin(), sorted.end());
        out.push_back(sorted);
        if (vars.size() == 1) return;
        std::size_t left = (vars.size() + 1) / 2;
        NodeSet lhs(vars.begin(), vars.begin() + left);
        NodeSet rhs(vars.begin() + left, vars.end());
        split_balanced(lhs, out);
        split_balanced(rhs, out);
    }

    static void split_random(const NodeSet& vars, std::vector<NodeSet>& out, Rng& rng) {
        out.push_back(vars);
        if (vars.size() == 1) return;
        NodeSet lhs, rhs;
        do {
            lhs.clear();
            rhs.clear();
            for (int v : vars) (rng.below(2) == 0 ? lhs : rhs).push_back(v);
        } while (lhs.empty() || rhs.empty());
        split_random(lhs, out, rng);
        split_random(rhs, out, rng);
    }

    void build_structure() {
        const int n = node_count();
        parent_.assign(n, -1);
        children_.assign(n, {});
        level_.assign(n, 0);

        NodeSet root(d_);
        std::iota(root.begin(), root.end(), 1);
        root_ = find(root);

        // Parent of a node = the smallest node strictly containing it.
        for (int id = 0; id < n; ++id) {
            if (id == root_) continue;
            int best = -1;
            for (int other = 0; other < n; ++other) {
                if (other == id) continue;
                if (!includes(nodes_[other], nodes_[id])) continue;
                if (nodes_[other].size() == nodes_[id].size()) continue;
                if (best < 0 || nodes_[other].size() < nodes_[best].size()) best = other;
            }
            if (best < 0)
                throw std::invalid_argument("tree: node " + node_to_string(nodes_[id]) +
                                            " has no parent");
            parent_[id] = best;
            children_[best].push_back(id);
        }

        for (auto& ch : children_)
            std::sort(ch.begin(), ch.end(),
                      [this](int a, int b) { return node_less(nodes_[a], nodes_[b]); });

        // Children of every interior node must partition it with >= 2 parts;
        // leaves must be singletons.
        for (int id = 0; id < n; ++id) {
            if (children_[id].empty()) {
                if (nodes_[id].size() != 1)
                    throw std::invalid_argument("tree: leaf " + node_to_string(nodes_[id]) +
                                                " is not a singleton");
                continue;
            }
            if (nodes_[id].size() == 1)
                throw std::invalid_argument("tree: singleton " + node_to_string(nodes_[id]) +
                                            " has children");
            if (children_[id].size() < 2)
                throw std::invalid_argument("tree: node " + node_to_string(nodes_[id]) +
                                            " has a single child");
            NodeSet merged;
            for (int c : children_[id])
                merged.insert(merged.end(), nodes_[c].begin(), nodes_[c].end());
            std::sort(merged.begin(), merged.end());
            if (merged != nodes_[id])
                throw std::invalid_argument("tree: children of " +
                                            node_to_string(nodes_[id]) +
                                            " do not partition it");
        }

        // Levels from the root down.
        depth_ = 0;
        std::vector<int> stack = {root_};
        while (!stack.empty()) {
            int id = stack.back();
            stack.pop_back();
            for (int c : children_[id]) {
                level_[c] = level_[id] + 1;
                depth_ = std::max(depth_, level_[c]);
                stack.push_back(c);
            }
        }

        leaf_of_.assign(d_, -1);
        for (int id = 0; id < n; ++id)
            if (children_[id].empty()) leaf_of_[nodes_[id][0] - 1] = id;
        for (int nu = 0; nu < d_; ++nu)
            if (leaf_of_[nu] < 0)
                throw std::invalid_argument("tree: variable " + std::to_string(nu + 1) +
                                            " has no leaf");
    }

    static bool includes(const NodeSet& big, const NodeSet& small) {
        return std::includes(big.begin(), big.end(), small.begin(), small.end());
    }

    int d_ = 0;
    int root_ = -1;
    int depth_ = 0;
    std::vector<NodeSet> nodes_;
    std::vector<int> parent_;
    std::vector<std::vector<int>> children_;
    std::vector<int> level_;
    std::vector<int> leaf_of_;
};

}  // namespace ttn

#endif
