#pragma once

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "htnsat/model.hpp"

namespace htnsat {

enum class NodeStatus { Expanded, Pending, PrimitiveLeaf };

struct PdtNode {
    bool is_method = false;
    TaskRef task;          // task nodes
    MethodId method = -1;  // method nodes
    int parent = -1;
    std::vector<int> children;
    int depth = 0;
    NodeStatus status = NodeStatus::Pending;
    int layer = 0;           // first grid layer holding the node (task nodes)
    int expanded_layer = -1;  // layer whose position carries this node's methods
};

/// One slot of a grid layer. Candidate lists are sorted and unique.
struct Position {
    std::vector<int> nodes;  // hosted task nodes
    std::vector<ActionId> actions;
    std::vector<TaskId> abstracts;
    std::vector<MethodId> methods;  // only on expanded positions
    bool blank = false;
    bool expanded = false;
    int parent = -1;
    int child_index = 0;
    int first_child = -1;
    int num_children = 0;
};

struct Grid {
    std::vector<std::vector<Position>> layers;

    std::size_t num_layers() const { return layers.size(); }
    const std::vector<Position>& bottom() const { return layers.back(); }
};

/// Path decomposition tree with its layered position grid.
///
/// Every expansion adds one grid layer. Positions at the new bottom layer are
/// either children of an expanded position (one per subtask index) or the single
/// copy-down child of an unexpanded one. Expansion works per position: all
/// pending abstract nodes sharing a position are expanded together.
class Pdt {
public:
    /// blocking: apply the recursion cut; allowance: number of earlier
    /// occurrences of a task on a path tolerated before a method reintroducing it
    /// is blocked (0 = strict cut, raised by each reinsertion round).
    explicit Pdt(const Problem& p, bool blocking = true, int allowance = 0);

    const Problem& problem() const { return *problem_; }
    const std::vector<PdtNode>& nodes() const { return nodes_; }
    int root() const { return 0; }
    const std::set<int>& pending() const { return pending_; }
    const Grid& grid() const { return grid_; }
    int allowance() const { return allowance_; }

    /// Expands the bottom-layer positions hosting the target nodes.
    /// Throws UsageError when a target is not pending.
    void expand(std::span<const int> targets);
    /// Expands the given bottom-layer positions; positions without pending nodes are copied down.
    void expand_positions(std::span<const int> positions);
    /// Expands every position holding a pending node.
    void expand_all();

    /// Methods of a pending abstract node cut by the recursion rule.
    std::vector<MethodId> blocked_methods(int node) const;
    /// (repeated task, method) pairs cut so far.
    const std::set<std::pair<TaskId, MethodId>>& blocked() const { return blocked_; }

    std::size_t methods_developed() const { return methods_developed_; }
    /// Bottom-layer position of a task node that has not been expanded; -1 otherwise.
    int bottom_position(int node) const { return host_[node]; }

    /// DOT rendering; highlighted nodes are filled grey.
    std::string to_dot(const std::set<int>& highlight = {}) const;

private:
    int add_task_node(TaskRef t, int parent, int layer);

    const Problem* problem_;
    bool blocking_;
    int allowance_;
    std::vector<PdtNode> nodes_;
    std::vector<int> host_;
    std::set<int> pending_;
    std::set<std::pair<TaskId, MethodId>> blocked_;
    std::size_t methods_developed_ = 0;
    Grid grid_;
};

/// Builds a grid layer's candidate lists from the hosted nodes.
void fill_candidates(const std::vector<PdtNode>& nodes, Position& pos);

}  // namespace htnsat
