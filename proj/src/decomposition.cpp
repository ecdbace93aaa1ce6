#include "htnsat/decomposition.hpp"

namespace htnsat {

std::vector<int> DecompositionTree::leaves() const {
    std::vector<int> out;
    if (nodes.empty()) return out;
    std::vector<int> stack{root};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        const DtNode& node = nodes.at(static_cast<std::size_t>(n));
        if (node.task.is_primitive() || !node.method) {
            out.push_back(n);
            continue;
        }
        for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

std::vector<TaskRef> DecompositionTree::frontier() const {
    std::vector<TaskRef> out;
    for (int n : leaves()) out.push_back(nodes[n].task);
    return out;
}

std::optional<std::vector<ActionId>> DecompositionTree::plan() const {
    std::vector<ActionId> out;
    for (int n : leaves()) {
        if (!nodes[n].task.is_primitive()) return std::nullopt;
        out.push_back(nodes[n].task.id);
    }
    return out;
}

}  // namespace htnsat
