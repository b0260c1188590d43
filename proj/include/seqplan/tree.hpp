#pragma once

// Search tree over token continuations.
//
// Nodes live in an index-addressed pool owned by SearchTree; edges are stored
// on the parent, sorted by token id, so iteration order is deterministic.
// Selection walks PUCT scores down to an unexpanded or terminal leaf,
// expansion turns merged region policies into child edges, and
// backpropagation adds a discounted value up the selection path. The tree is
// single-writer: nothing here synchronizes concurrent mutation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqplan/core.hpp"
#include "seqplan/model.hpp"

namespace seqplan {

struct EdgeStats {
    std::int64_t visit_count = 0;  // N
    double value_sum = 0.0;        // W
    double prior = 0.0;            // P

    double q() const {
        return visit_count > 0 ? value_sum / static_cast<double>(visit_count) : 0.0;
    }
};

struct ChildEdge {
    TokenId token = 0;
    std::int32_t child_id = -1;
    EdgeStats stats;
};

struct SearchNode {
    std::int32_t node_id = -1;
    std::int32_t parent_id = -1;
    SequenceState state;
    bool expanded = false;
    std::vector<ChildEdge> children;  // sorted by token, fixed at expansion

    std::int64_t visit_total() const {
        std::int64_t total = 0;
        for (const ChildEdge& edge : children) total += edge.stats.visit_count;
        return total;
    }
};

struct SearchTree {
    std::vector<SearchNode> nodes;

    std::int32_t make_root(SequenceState state) {
        SearchNode root;
        root.node_id = static_cast<std::int32_t>(nodes.size());
        root.state = std::move(state);
        nodes.push_back(std::move(root));
        return nodes.back().node_id;
    }

    const SearchNode& node(std::int32_t id) const {
        if (id < 0 || id >= static_cast<std::int32_t>(nodes.size())) {
            throw ContractViolation("SearchTree: node id " + std::to_string(id) +
                                    " out of range");
        }
        return nodes[id];
    }

    SearchNode& node(std::int32_t id) {
        return const_cast<SearchNode&>(static_cast<const SearchTree&>(*this).node(id));
    }
};

struct PathStep {
    std::int32_t node_id = -1;
    TokenId token = 0;
};

/// Root-to-leaf walk: steps lists the edges taken; empty when the root itself
/// is the leaf.
struct SelectionPath {
    std::vector<PathStep> steps;
    std::int32_t leaf_id = -1;
};

// ---------------------------------------------------------------------------
// selection
// ---------------------------------------------------------------------------

inline double uct_score(const EdgeStats& stats, std::int64_t parent_visit_total,
                        double c_puct) {
    return stats.q() + c_puct * stats.prior *
                           std::sqrt(static_cast<double>(parent_visit_total)) /
                           (1.0 + static_cast<double>(stats.visit_count));
}

/// Descends from root by maximum UCT score (ties to the lowest token) until
/// reaching a node that is unexpanded or terminal.
inline SelectionPath select_leaf(const SearchTree& tree, std::int32_t root_id,
                                 const PlannerConfig& config) {
    SelectionPath path;
    std::int32_t current = root_id;
    while (true) {
        const SearchNode& node = tree.node(current);
        if (!node.expanded || node.state.terminal) {
            path.leaf_id = current;
            return path;
        }
        const std::int64_t parent_total = node.visit_total();
        std::int32_t best_index = 0;
        double best_score = uct_score(node.children[0].stats, parent_total, config.c_puct);
        for (std::size_t i = 1; i < node.children.size(); ++i) {
            const double score =
                uct_score(node.children[i].stats, parent_total, config.c_puct);
            if (score > best_score) {
                best_score = score;
                best_index = static_cast<std::int32_t>(i);
            }
        }
        const ChildEdge& chosen = node.children[best_index];
        path.steps.push_back({current, chosen.token});
        current = chosen.child_id;
    }
}

// ---------------------------------------------------------------------------
// expansion
// ---------------------------------------------------------------------------

/// Saliency-weighted average of the entry policies, renormalized to sum 1.
inline std::vector<double> merge_expansion_priors(const ExpansionResult& expansion,
                                                  std::int32_t vocab_size) {
    if (expansion.entries.empty()) {
        throw ValidationError("merge_expansion_priors: expansion has no entries");
    }
    double weight_sum = 0.0;
    for (const ExpansionEntry& entry : expansion.entries) {
        if (static_cast<std::int32_t>(entry.policy.size()) != vocab_size) {
            throw ValidationError("merge_expansion_priors: policy length " +
                                  std::to_string(entry.policy.size()) +
                                  " does not match vocab_size " +
                                  std::to_string(vocab_size));
        }
        double policy_sum = 0.0;
        for (double p : entry.policy) policy_sum += p;
        if (std::abs(policy_sum - 1.0) > 1e-6) {
            throw ValidationError("merge_expansion_priors: policy for region " +
                                  std::to_string(entry.region_id) +
                                  " sums to " + std::to_string(policy_sum));
        }
        if (!(entry.saliency_weight > 0.0)) {
            throw ValidationError("merge_expansion_priors: non-positive weight for region " +
                                  std::to_string(entry.region_id));
        }
        weight_sum += entry.saliency_weight;
    }
    std::vector<double> merged(vocab_size, 0.0);
    for (const ExpansionEntry& entry : expansion.entries) {
        const double w = entry.saliency_weight / weight_sum;
        for (std::int32_t v = 0; v < vocab_size; ++v) {
            merged[v] += w * entry.policy[v];
        }
    }
    double merged_sum = 0.0;
    for (double p : merged) merged_sum += p;
    for (double& p : merged) p /= merged_sum;
    return merged;
}

/// Creates children for the top_m_actions tokens of the merged prior (ties to
/// the lowest token), with priors renormalized over the kept set.
inline void expand_node(SearchTree& tree, std::int32_t node_id,
                        const ExpansionResult& expansion, const PlannerConfig& config,
                        const WorldInstance& world) {
    {
        const SearchNode& node = tree.node(node_id);
        if (node.expanded) {
            throw ContractViolation("expand_node: node already expanded");
        }
        if (node.state.terminal) {
            throw ContractViolation("expand_node: node is terminal");
        }
    }
    if (static_cast<std::int32_t>(expansion.entries.size()) > config.branching_k) {
        throw ValidationError("expand_node: " + std::to_string(expansion.entries.size()) +
                              " entries exceed branching_k " +
                              std::to_string(config.branching_k));
    }
    const std::vector<double> merged = merge_expansion_priors(expansion, world.vocab_size);

    std::vector<TokenId> ranked(world.vocab_size);
    for (std::int32_t v = 0; v < world.vocab_size; ++v) ranked[v] = v;
    std::sort(ranked.begin(), ranked.end(), [&merged](TokenId a, TokenId b) {
        if (merged[a] != merged[b]) return merged[a] > merged[b];
        return a < b;
    });
    const std::int32_t keep =
        std::min<std::int32_t>(config.top_m_actions, world.vocab_size);
    ranked.resize(keep);
    std::sort(ranked.begin(), ranked.end());

    double kept_sum = 0.0;
    for (TokenId t : ranked) kept_sum += merged[t];

    std::vector<ChildEdge> children;
    children.reserve(ranked.size());
    const SequenceState parent_state = tree.node(node_id).state;
    for (TokenId t : ranked) {
        SearchNode child;
        child.node_id = static_cast<std::int32_t>(tree.nodes.size());
        child.parent_id = node_id;
        child.state = append_token(parent_state, t, world);
        ChildEdge edge;
        edge.token = t;
        edge.child_id = child.node_id;
        edge.stats.prior = merged[t] / kept_sum;
        tree.nodes.push_back(std::move(child));
        children.push_back(edge);
    }
    SearchNode& node = tree.node(node_id);
    node.children = std::move(children);
    node.expanded = true;
}

// ---------------------------------------------------------------------------
// backpropagation and action choice
// ---------------------------------------------------------------------------

/// Adds gamma^d * value to every edge on the path, d = 0 at the edge into the
/// leaf, and bumps visit counts. Empty paths are a no-op.
inline void backpropagate(SearchTree& tree, const SelectionPath& path, double value,
                          double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw ValidationError("backpropagate: gamma must be in (0, 1]");
    }
    double discounted = value;
    for (auto it = path.steps.rbegin(); it != path.steps.rend(); ++it) {
        SearchNode& node = tree.node(it->node_id);
        bool found = false;
        for (ChildEdge& edge : node.children) {
            if (edge.token == it->token) {
                edge.stats.visit_count += 1;
                edge.stats.value_sum += discounted;
                found = true;
                break;
            }
        }
        if (!found) {
            throw ContractViolation("backpropagate: path edge not present in tree");
        }
        discounted *= gamma;
    }
}

/// Most-visited root action, ties to the lowest token.
inline TokenId best_action_by_visits(const SearchTree& tree, std::int32_t root_id) {
    const SearchNode& root = tree.node(root_id);
    if (!root.expanded || root.children.empty()) {
        throw ContractViolation("best_action_by_visits: root has no expanded children");
    }
    const ChildEdge* best = &root.children[0];
    for (const ChildEdge& edge : root.children) {
        if (edge.stats.visit_count > best->stats.visit_count) best = &edge;
    }
    return best->token;
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

/// One node per line: id, token path, and per-child edge stats.
inline void dump_tree_jsonl(const SearchTree& tree, std::ostream& out) {
    for (const SearchNode& node : tree.nodes) {
        nlohmann::json children = nlohmann::json::array();
        for (const ChildEdge& edge : node.children) {
            children.push_back({{"token", edge.token},
                                {"visits", edge.stats.visit_count},
                                {"value_sum", edge.stats.value_sum},
                                {"prior", edge.stats.prior}});
        }
        nlohmann::json line = {{"node_id", node.node_id},
                               {"tokens", node.state.tokens},
                               {"children", children}};
        out << line.dump() << "\n";
    }
}

}  // namespace seqplan
