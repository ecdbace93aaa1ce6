#include "htnsat/pdt.hpp"

#include <algorithm>
#include <sstream>

namespace htnsat {

namespace {

template <class T>
void sort_unique(std::vector<T>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

void fill_candidates(const std::vector<PdtNode>& nodes, Position& pos) {
    pos.actions.clear();
    pos.abstracts.clear();
    pos.methods.clear();
    for (int n : pos.nodes) {
        const PdtNode& node = nodes[n];
        if (node.task.is_primitive()) pos.actions.push_back(node.task.id);
        else pos.abstracts.push_back(node.task.id);
    }
    sort_unique(pos.actions);
    sort_unique(pos.abstracts);
}

Pdt::Pdt(const Problem& p, bool blocking, int allowance) : problem_(&p), blocking_(blocking), allowance_(allowance) {
    if (p.initial_task < 0 || p.initial_task >= static_cast<TaskId>(p.abstracts.size()))
        throw UsageError("problem has no valid initial task");
    add_task_node(TaskRef::abstract(p.initial_task), -1, 0);
    Position top;
    top.nodes = {0};
    fill_candidates(nodes_, top);
    grid_.layers.push_back({top});
    host_[0] = 0;
}

int Pdt::add_task_node(TaskRef t, int parent, int layer) {
    PdtNode n;
    n.task = t;
    n.parent = parent;
    n.depth = parent < 0 ? 0 : nodes_[parent].depth + 1;
    n.layer = layer;
    n.status = t.is_primitive() ? NodeStatus::PrimitiveLeaf : NodeStatus::Pending;
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(std::move(n));
    host_.push_back(-1);
    if (t.is_abstract()) pending_.insert(id);
    return id;
}

std::vector<MethodId> Pdt::blocked_methods(int node) const {
    const PdtNode& n = nodes_.at(static_cast<std::size_t>(node));
    if (n.is_method || n.task.is_primitive()) throw UsageError("blocked_methods needs an abstract task node");
    std::vector<MethodId> out;
    if (!blocking_) return out;
    for (MethodId m : problem_->abstracts[n.task.id].methods) {
        for (const TaskRef& s : problem_->methods[m].subtasks) {
            if (!s.is_abstract()) continue;
            int occurrences = 0;
            for (int a = node; a >= 0; a = nodes_[a].parent)
                if (!nodes_[a].is_method && nodes_[a].task == s) ++occurrences;
            if (occurrences > allowance_) {
                out.push_back(m);
                break;
            }
        }
    }
    return out;
}

void Pdt::expand(std::span<const int> targets) {
    std::vector<int> positions;
    for (int t : targets) {
        if (!pending_.count(t)) throw UsageError("node " + std::to_string(t) + " is not pending");
        positions.push_back(host_[t]);
    }
    expand_positions(positions);
}

void Pdt::expand_all() {
    std::vector<int> positions;
    for (int n : pending_) positions.push_back(host_[n]);
    expand_positions(positions);
}

void Pdt::expand_positions(std::span<const int> positions) {
    const int layer = static_cast<int>(grid_.layers.size()) - 1;
    std::vector<Position>& bottom = grid_.layers.back();
    std::vector<char> selected(bottom.size(), 0);
    for (int p : positions) {
        if (p < 0 || p >= static_cast<int>(bottom.size())) throw UsageError("position out of range");
        selected[p] = 1;
    }

    std::vector<Position> next;
    for (std::size_t p = 0; p < bottom.size(); ++p) {
        Position& pos = bottom[p];
        bool expand_here = false;
        if (selected[p])
            for (int n : pos.nodes) expand_here = expand_here || pending_.count(n) > 0;

        std::vector<std::vector<int>> child_nodes(1);
        bool has_copy = false;
        bool has_empty_method = false;
        std::size_t min_len = SIZE_MAX;
        if (expand_here) {
            pos.expanded = true;
            for (int n : pos.nodes) {
                if (!pending_.count(n)) {
                    child_nodes[0].push_back(n);
                    host_[n] = -1;
                    has_copy = true;
                    continue;
                }
                std::vector<MethodId> cut = blocked_methods(n);
                for (MethodId m : cut)
                    for (const TaskRef& s : problem_->methods[m].subtasks)
                        if (s.is_abstract()) {
                            int occurrences = 0;
                            for (int a = n; a >= 0; a = nodes_[a].parent)
                                if (!nodes_[a].is_method && nodes_[a].task == s) ++occurrences;
                            if (occurrences > allowance_) blocked_.emplace(s.id, m);
                        }
                pending_.erase(n);
                host_[n] = -1;
                nodes_[n].status = NodeStatus::Expanded;
                nodes_[n].expanded_layer = layer;
                const TaskId task = nodes_[n].task.id;
                for (MethodId m : problem_->abstracts[task].methods) {
                    if (std::find(cut.begin(), cut.end(), m) != cut.end()) continue;
                    PdtNode mn;
                    mn.is_method = true;
                    mn.method = m;
                    mn.parent = n;
                    mn.depth = nodes_[n].depth + 1;
                    mn.status = NodeStatus::Expanded;
                    mn.layer = layer;
                    mn.expanded_layer = layer;
                    int mid = static_cast<int>(nodes_.size());
                    nodes_.push_back(std::move(mn));
                    host_.push_back(-1);
                    nodes_[n].children.push_back(mid);
                    ++methods_developed_;
                    pos.methods.push_back(m);
                    const auto& subs = problem_->methods[m].subtasks;
                    min_len = std::min(min_len, subs.size());
                    if (subs.empty()) has_empty_method = true;
                    if (child_nodes.size() < subs.size()) child_nodes.resize(subs.size());
                    for (std::size_t i = 0; i < subs.size(); ++i) {
                        int c = add_task_node(subs[i], mid, layer + 1);
                        nodes_[mid].children.push_back(c);
                        child_nodes[i].push_back(c);
                    }
                }
            }
            sort_unique(pos.methods);
        } else {
            for (int n : pos.nodes) child_nodes[0].push_back(n);
            has_copy = !pos.nodes.empty();
        }

        pos.first_child = static_cast<int>(next.size());
        pos.num_children = static_cast<int>(child_nodes.size());
        for (std::size_t i = 0; i < child_nodes.size(); ++i) {
            Position c;
            c.parent = static_cast<int>(p);
            c.child_index = static_cast<int>(i);
            c.nodes = std::move(child_nodes[i]);
            std::sort(c.nodes.begin(), c.nodes.end());
            fill_candidates(nodes_, c);
            if (i == 0) c.blank = pos.blank || has_empty_method;
            else c.blank = pos.blank || has_copy || min_len <= i;
            for (int n : c.nodes) host_[n] = static_cast<int>(next.size());
            next.push_back(std::move(c));
        }
    }
    grid_.layers.push_back(std::move(next));
}

std::string Pdt::to_dot(const std::set<int>& highlight) const {
    std::ostringstream out;
    out << "digraph pdt {\n  node [fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const PdtNode& n = nodes_[i];
        std::string label = n.is_method ? problem_->methods[n.method].display() : problem_->display(n.task);
        out << "  n" << i << " [label=\"" << label << "\"";
        if (n.is_method) out << ", shape=box";
        else if (n.task.is_abstract()) out << ", shape=ellipse";
        else out << ", shape=plaintext";
        if (n.status == NodeStatus::Pending) out << ", style=dashed";
        if (highlight.count(static_cast<int>(i))) out << ", style=filled, fillcolor=grey";
        out << "];\n";
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        for (int c : nodes_[i].children) out << "  n" << i << " -> n" << c << ";\n";
    out << "}\n";
    return out.str();
}

}  // namespace htnsat
