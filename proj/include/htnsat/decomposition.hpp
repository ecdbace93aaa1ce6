#pragma once

#include <optional>
#include <vector>

#include "htnsat/model.hpp"

namespace htnsat {

struct DtNode {
    TaskRef task;
    std::optional<MethodId> method;  // set on decomposed abstract nodes
    std::vector<int> children;       // one per subtask of method, in order
};

/// A decomposition tree rooted at nodes[root]. Leaves are primitive tasks or,
/// in relaxed trees, undecomposed abstract tasks.
struct DecompositionTree {
    std::vector<DtNode> nodes;
    int root = 0;

    /// Leaf node ids, left to right.
    std::vector<int> leaves() const;
    std::vector<TaskRef> frontier() const;
    /// The primitive plan; nullopt when an abstract leaf remains.
    std::optional<std::vector<ActionId>> plan() const;
};

}  // namespace htnsat
