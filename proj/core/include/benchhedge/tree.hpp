#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "benchhedge/rational.hpp"

namespace benchhedge {

// Node of a finite filtered market. The tree carries the fine filtration:
// each node is an atom of the step-t information. The optional label is what
// a coarse observer sees; nodes sharing the same label history form one
// coarse information set. Distinct (or absent) labels mean no coarsening.
template <typename S>
struct TreeNode {
    int id = -1;
    int level = 0;
    int parent = -1;
    S prob{};  // conditional transition probability from the parent
    std::vector<S> assets;
    std::string label;

    std::vector<int> children;
    S prob_total{};       // unconditional probability of the node
    int coarse_atom = -1;  // index into TreeModel::atoms[level]
};

template <typename S>
class TreeModel {
public:
    std::vector<TreeNode<S>> nodes;
    std::vector<double> level_times;

    std::size_t n_levels() const { return levels_.size(); }
    std::size_t n_assets() const { return nodes.empty() ? 0 : nodes[0].assets.size(); }
    const std::vector<int>& level(std::size_t l) const { return levels_[l]; }
    // Coarse information sets per level; each atom lists fine node ids.
    const std::vector<std::vector<int>>& atoms(std::size_t l) const { return atoms_[l]; }
    int root() const { return root_; }

    // Processes are indexed by node position in `nodes`.
    std::size_t pos(int id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::invalid_argument("TreeModel: unknown node id");
        return static_cast<std::size_t>(it->second);
    }
    const TreeNode<S>& node(int id) const { return nodes[pos(id)]; }
    TreeNode<S>& node(int id) { return nodes[pos(id)]; }

    // Wires children/probabilities/atoms and validates the structure:
    // positive transition probabilities summing to one per parent, uniform
    // depth, consistent asset dimension.
    void finalize(double prob_tol = 1e-12);

private:
    std::vector<std::vector<int>> levels_;
    std::vector<std::vector<std::vector<int>>> atoms_;
    std::map<int, int> index_;
    int root_ = -1;
};

// Node-indexed (adapted) process values.
template <typename S>
using TreeProcess = std::vector<S>;

// Per-node-per-asset values (e.g. predictable holdings stored on the left
// node of each step).
template <typename S>
using TreeVectorProcess = std::vector<std::vector<S>>;

// JSON loading: {"nodes":[{"id","time","parent","prob","assets",
// "fine_label"}]}. Numbers may be JSON numbers or strings like "2/5"; exact
// mode parses them as rationals.
TreeModel<double> load_tree(const std::string& path);
TreeModel<Rational> load_tree_exact(const std::string& path);
TreeModel<double> parse_tree(const std::string& json_text);
TreeModel<Rational> parse_tree_exact(const std::string& json_text);

template <typename S>
void TreeModel<S>::finalize(double prob_tol) {
    levels_.clear();
    atoms_.clear();
    index_.clear();
    root_ = -1;
    if (nodes.empty()) throw std::invalid_argument("TreeModel: empty tree");

    std::map<int, int>& index = index_;  // id -> position
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (index.count(nodes[i].id)) throw std::invalid_argument("TreeModel: duplicate node id");
        index[nodes[i].id] = static_cast<int>(i);
        nodes[i].children.clear();
    }
    int max_level = 0;
    for (auto& n : nodes) {
        if (n.parent < 0) {
            if (root_ != -1) throw std::invalid_argument("TreeModel: multiple roots");
            root_ = n.id;
            n.level = 0;
        }
    }
    if (root_ == -1) throw std::invalid_argument("TreeModel: no root");
    // Levels by repeated passes (ids may arrive in any order).
    for (bool changed = true; changed;) {
        changed = false;
        for (auto& n : nodes) {
            if (n.parent < 0) continue;
            auto it = index.find(n.parent);
            if (it == index.end()) throw std::invalid_argument("TreeModel: missing parent id");
            const int pl = nodes[it->second].level;
            if (pl >= 0 && n.level != pl + 1) {
                n.level = pl + 1;
                changed = true;
            }
        }
    }
    for (auto& n : nodes) max_level = std::max(max_level, n.level);
    levels_.assign(max_level + 1, {});
    for (auto& n : nodes) levels_[n.level].push_back(n.id);
    for (auto& lvl : levels_)
        if (lvl.empty()) throw std::invalid_argument("TreeModel: level gap");

    const std::size_t d = nodes[index[root_]].assets.size();
    for (auto& n : nodes) {
        if (n.assets.size() != d)
            throw std::invalid_argument("TreeModel: inconsistent asset dimension");
        if (n.parent >= 0) nodes[index[n.parent]].children.push_back(n.id);
    }
    // All non-terminal nodes must branch and all leaves sit at the last level.
    for (auto& n : nodes) {
        if (n.level < max_level && n.children.empty())
            throw std::invalid_argument("TreeModel: interior node without children (uneven depth)");
        if (n.level == max_level && !n.children.empty())
            throw std::invalid_argument("TreeModel: children beyond the final level");
    }
    // Transition probabilities: positive, summing to one per parent.
    const S one = scalar_from_int(1, S{});
    const S zero = scalar_from_int(0, S{});
    for (auto& n : nodes) {
        if (n.children.empty()) continue;
        S sum = zero;
        for (int c : n.children) {
            const TreeNode<S>& child = nodes[index[c]];
            if (!(zero < child.prob))
                throw std::invalid_argument("TreeModel: transition probabilities must be positive");
            sum += child.prob;
        }
        if (scalar_to_double(scalar_abs(sum - one)) > prob_tol)
            throw std::invalid_argument("TreeModel: transition probabilities must sum to 1");
    }
    nodes[index[root_]].prob = one;
    nodes[index[root_]].prob_total = one;
    for (int l = 1; l <= max_level; ++l)
        for (int id : levels_[l]) {
            TreeNode<S>& n = nodes[index[id]];
            n.prob_total = nodes[index[n.parent]].prob_total * n.prob;
        }

    // Coarse atoms from label histories: nodes sharing the parent's atom and
    // the same label are indistinguishable to the coarse observer.
    atoms_.assign(max_level + 1, {});
    atoms_[0].push_back({root_});
    nodes[index[root_]].coarse_atom = 0;
    for (int l = 1; l <= max_level; ++l) {
        std::map<std::pair<int, std::string>, int> keyed;
        for (int id : levels_[l]) {
            TreeNode<S>& n = nodes[index[id]];
            const int parent_atom = nodes[index[n.parent]].coarse_atom;
            // An empty label means the node is fully revealed.
            const std::string label = n.label.empty() ? "#" + std::to_string(n.id) : n.label;
            const auto key = std::make_pair(parent_atom, label);
            auto it = keyed.find(key);
            if (it == keyed.end()) {
                it = keyed.emplace(key, static_cast<int>(atoms_[l].size())).first;
                atoms_[l].push_back({});
            }
            n.coarse_atom = it->second;
            atoms_[l][it->second].push_back(id);
        }
    }
    if (level_times.empty()) {
        level_times.resize(max_level + 1);
        for (int l = 0; l <= max_level; ++l) level_times[l] = static_cast<double>(l);
    }
}

}  // namespace benchhedge
