#include "htnsat/encoder.hpp"

#include <algorithm>
#include <functional>
#include <unordered_map>

namespace htnsat {

using sat::Lit;

namespace {

template <class T>
int index_of(const std::vector<T>& sorted, T id) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), id);
    if (it == sorted.end() || *it != id) return -1;
    return static_cast<int>(it - sorted.begin());
}

Lit op_lit(const Position& pos, const PositionVars& v, TaskRef t) {
    if (t.is_primitive()) {
        int i = index_of(pos.actions, t.id);
        return i < 0 ? Lit{} : v.actions[i];
    }
    int i = index_of(pos.abstracts, t.id);
    return i < 0 ? Lit{} : v.abstracts[i];
}

std::vector<Lit> all_ops(const PositionVars& v) {
    std::vector<Lit> out(v.actions);
    out.insert(out.end(), v.abstracts.begin(), v.abstracts.end());
    if (v.blank.value != 0) out.push_back(v.blank);
    return out;
}

}  // namespace

Encoder::Encoder(const Problem& p, const Inference& inf, sat::SatSession& s, const EncoderConfig& cfg)
    : problem_(p), inf_(inf), s_(s), cfg_(cfg) {
    if (cfg_.mutex) mutex_groups_ = inf_.mutexes;
}

std::vector<bool> Encoder::changeable_at(const Position& pos) const {
    std::vector<bool> out(problem_.num_facts(), false);
    for (ActionId a : pos.actions) {
        for (FactId f : problem_.actions[a].eff_pos) out[f] = true;
        for (FactId f : problem_.actions[a].eff_neg) out[f] = true;
    }
    for (TaskId t : pos.abstracts) {
        for (FactId f : inf_.profiles[t].poss_eff_pos) out[f] = true;
        for (FactId f : inf_.profiles[t].poss_eff_neg) out[f] = true;
    }
    return out;
}

void Encoder::encode(const Pdt& pdt) {
    const Grid& g = pdt.grid();
    while (layers_.size() < g.num_layers()) {
        if (layers_.empty()) encode_first_layer(g);
        else encode_next_layer(pdt, static_cast<int>(layers_.size()));
    }
}

void Encoder::encode_first_layer(const Grid& g) {
    const Position& top = g.layers[0][0];
    const std::size_t nf = problem_.num_facts();
    LayerVars lv;
    lv.positions.resize(1);
    for (std::size_t i = 0; i < top.abstracts.size(); ++i) lv.positions[0].abstracts.push_back(s_.new_var());
    for (std::size_t i = 0; i < top.actions.size(); ++i) lv.positions[0].actions.push_back(s_.new_var());

    std::vector<Lit> init(nf), after(nf);
    for (std::size_t f = 0; f < nf; ++f) init[f] = s_.new_var();
    const std::vector<bool> changeable = changeable_at(top);
    for (std::size_t f = 0; f < nf; ++f) after[f] = changeable[f] ? s_.new_var() : init[f];
    lv.boundaries = {init, after};

    const State s0 = problem_.initial_state();
    for (std::size_t f = 0; f < nf; ++f) s_.add_clause({s0.test(static_cast<FactId>(f)) ? init[f] : ~init[f]});
    int idx = index_of(top.abstracts, problem_.initial_task);
    if (idx < 0) throw InternalError("root position lacks the initial task");
    s_.add_clause({lv.positions[0].abstracts[idx]});

    lv.solution = s_.new_var();
    lv.relaxed = s_.new_var();
    layers_.push_back(std::move(lv));
    fresh_.push_back({0, 1});
    encode_bottom(g, 0);
}

void Encoder::encode_next_layer(const Pdt& pdt, int l) {
    const Grid& g = pdt.grid();
    const std::vector<Position>& parents = g.layers[l - 1];
    const std::vector<Position>& children = g.layers[l];
    const std::size_t nf = problem_.num_facts();

    s_.add_clause({~layers_[l - 1].solution});
    s_.add_clause({~layers_[l - 1].relaxed});

    // Methods of the positions expanded into this layer.
    for (std::size_t p = 0; p < parents.size(); ++p) {
        const Position& pos = parents[p];
        PositionVars& pv = layers_[l - 1].positions[p];
        if (!pv.methods.empty() || !pos.expanded) continue;
        for (std::size_t i = 0; i < pos.methods.size(); ++i) pv.methods.push_back(s_.new_var());
        for (std::size_t i = 0; i < pos.methods.size(); ++i) {
            int t = index_of(pos.abstracts, problem_.methods[pos.methods[i]].task);
            if (t < 0) throw InternalError("method without its task at the position");
            s_.add_clause({~pv.methods[i], pv.abstracts[t]});
        }
        for (std::size_t t = 0; t < pos.abstracts.size(); ++t) {
            std::vector<Lit> clause{~pv.abstracts[t]};
            for (std::size_t i = 0; i < pos.methods.size(); ++i)
                if (problem_.methods[pos.methods[i]].task == pos.abstracts[t]) clause.push_back(pv.methods[i]);
            s_.add_clause(clause);
        }
        sat::encode_amo(s_, pv.methods, cfg_.amo);
    }

    LayerVars lv;
    lv.positions.resize(children.size());
    for (std::size_t c = 0; c < children.size(); ++c) {
        const Position& pos = children[c];
        PositionVars& v = lv.positions[c];
        for (std::size_t i = 0; i < pos.actions.size(); ++i) v.actions.push_back(s_.new_var());
        for (std::size_t i = 0; i < pos.abstracts.size(); ++i) v.abstracts.push_back(s_.new_var());
        if (pos.blank) v.blank = s_.new_var();
    }

    // Boundaries: child 0 shares its parent's boundary, the last one is shared by all layers.
    std::vector<char> fresh(children.size() + 1, 0);
    lv.boundaries.resize(children.size() + 1);
    for (std::size_t c = 0; c < children.size(); ++c) {
        const Position& pos = children[c];
        if (pos.child_index == 0) {
            lv.boundaries[c] = layers_[l - 1].boundaries[pos.parent];
            continue;
        }
        const std::vector<bool> changeable = changeable_at(children[c - 1]);
        lv.boundaries[c].resize(nf);
        for (std::size_t f = 0; f < nf; ++f) {
            if (changeable[f]) {
                lv.boundaries[c][f] = s_.new_var();
                fresh[c] = 1;
            } else {
                lv.boundaries[c][f] = lv.boundaries[c - 1][f];
            }
        }
    }
    lv.boundaries.back() = layers_[l - 1].boundaries.back();
    lv.solution = s_.new_var();
    lv.relaxed = s_.new_var();
    layers_.push_back(std::move(lv));
    fresh_.push_back(std::move(fresh));

    // Hierarchy linkage.
    const LayerVars& up = layers_[l - 1];
    const LayerVars& down = layers_[l];
    auto child_op = [&](int c, TaskRef t) {
        Lit lit = op_lit(children[c], down.positions[c], t);
        if (lit.value == 0) throw InternalError("child position misses an induced task");
        return lit;
    };
    auto child_blank = [&](int c) {
        Lit lit = down.positions[c].blank;
        if (lit.value == 0) throw InternalError("child position misses an induced blank");
        return lit;
    };
    for (std::size_t p = 0; p < parents.size(); ++p) {
        const Position& pos = parents[p];
        const PositionVars& pv = up.positions[p];
        const int first = pos.first_child;
        const int k = pos.num_children;

        for (std::size_t i = 0; i < pos.methods.size(); ++i) {
            const auto& subs = problem_.methods[pos.methods[i]].subtasks;
            for (int j = 0; j < k; ++j) {
                Lit target = j < static_cast<int>(subs.size()) ? child_op(first + j, subs[j]) : child_blank(first + j);
                s_.add_clause({~pv.methods[i], target});
            }
        }
        for (std::size_t i = 0; i < pos.actions.size(); ++i) {
            s_.add_clause({~pv.actions[i], child_op(first, TaskRef::primitive(pos.actions[i]))});
            for (int j = 1; j < k; ++j) s_.add_clause({~pv.actions[i], child_blank(first + j)});
        }
        if (!pos.expanded)
            for (std::size_t i = 0; i < pos.abstracts.size(); ++i)
                s_.add_clause({~pv.abstracts[i], child_op(first, TaskRef::abstract(pos.abstracts[i]))});
        if (pv.blank.value != 0)
            for (int j = 0; j < k; ++j) s_.add_clause({~pv.blank, child_blank(first + j)});

        // Every child op needs a parent inducing it.
        for (int j = 0; j < k; ++j) {
            const Position& cpos = children[first + j];
            const PositionVars& cv = down.positions[first + j];
            auto inducing = [&](TaskRef t) {
                std::vector<Lit> out;
                if (j == 0) {
                    if (t.is_primitive()) {
                        int a = index_of(pos.actions, t.id);
                        if (a >= 0) out.push_back(pv.actions[a]);
                    } else if (!pos.expanded) {
                        int a = index_of(pos.abstracts, t.id);
                        if (a >= 0) out.push_back(pv.abstracts[a]);
                    }
                }
                for (std::size_t i = 0; i < pos.methods.size(); ++i) {
                    const auto& subs = problem_.methods[pos.methods[i]].subtasks;
                    if (static_cast<int>(subs.size()) > j && subs[j] == t) out.push_back(pv.methods[i]);
                }
                return out;
            };
            for (std::size_t i = 0; i < cpos.actions.size(); ++i) {
                std::vector<Lit> clause{~cv.actions[i]};
                for (Lit x : inducing(TaskRef::primitive(cpos.actions[i]))) clause.push_back(x);
                s_.add_clause(clause);
            }
            for (std::size_t i = 0; i < cpos.abstracts.size(); ++i) {
                std::vector<Lit> clause{~cv.abstracts[i]};
                for (Lit x : inducing(TaskRef::abstract(cpos.abstracts[i]))) clause.push_back(x);
                s_.add_clause(clause);
            }
            if (cv.blank.value != 0) {
                std::vector<Lit> clause{~cv.blank};
                if (pv.blank.value != 0) clause.push_back(pv.blank);
                if (j >= 1) clause.insert(clause.end(), pv.actions.begin(), pv.actions.end());
                for (std::size_t i = 0; i < pos.methods.size(); ++i)
                    if (static_cast<int>(problem_.methods[pos.methods[i]].subtasks.size()) <= j)
                        clause.push_back(pv.methods[i]);
                s_.add_clause(clause);
            }
        }
    }

    encode_bottom(g, l);
}

void Encoder::encode_bottom(const Grid& g, int l) {
    const std::vector<Position>& layer = g.layers[l];
    const LayerVars& lv = layers_[l];
    const std::size_t nf = problem_.num_facts();

    for (std::size_t c = 0; c < layer.size(); ++c) {
        const Position& pos = layer[c];
        const PositionVars& v = lv.positions[c];
        const auto& before = lv.boundaries[c];
        const auto& after = lv.boundaries[c + 1];

        std::vector<Lit> ops = all_ops(v);
        if (!ops.empty()) s_.add_clause(ops);
        sat::encode_amo(s_, ops, cfg_.amo);

        std::unordered_map<FactId, std::vector<Lit>> add_support, del_support;
        for (std::size_t i = 0; i < pos.actions.size(); ++i) {
            const Action& a = problem_.actions[pos.actions[i]];
            for (FactId f : a.precond) s_.add_clause({~v.actions[i], before[f]});
            for (FactId f : a.eff_pos) {
                s_.add_clause({~v.actions[i], after[f]});
                add_support[f].push_back(v.actions[i]);
            }
            for (FactId f : a.eff_neg) {
                s_.add_clause({~v.actions[i], ~after[f]});
                del_support[f].push_back(v.actions[i]);
            }
        }
        for (std::size_t i = 0; i < pos.abstracts.size(); ++i) {
            const TaskProfile& tp = inf_.profiles[pos.abstracts[i]];
            for (FactId f : tp.mand_pre) {
                if (cfg_.mandpre_prune) s_.add_clause({~v.abstracts[i], before[f]});
                else s_.add_clause({~lv.relaxed, ~v.abstracts[i], before[f]});
            }
            for (FactId f : tp.poss_eff_pos) add_support[f].push_back(v.abstracts[i]);
            for (FactId f : tp.poss_eff_neg) del_support[f].push_back(v.abstracts[i]);
        }

        // Frame axioms: a flip needs a supporting op at this position.
        for (std::size_t f = 0; f < nf; ++f) {
            if (before[f] == after[f]) continue;
            const FactId fid = static_cast<FactId>(f);
            std::vector<Lit> up{before[f], ~after[f]};
            if (auto it = add_support.find(fid); it != add_support.end())
                up.insert(up.end(), it->second.begin(), it->second.end());
            s_.add_clause(up);
            std::vector<Lit> down{~before[f], after[f]};
            if (auto it = del_support.find(fid); it != del_support.end())
                down.insert(down.end(), it->second.begin(), it->second.end());
            s_.add_clause(down);
        }

        for (Lit t : v.abstracts) s_.add_clause({~lv.solution, ~t});
    }

    // Mutex groups at boundaries introduced by this layer.
    for (std::size_t b = 0; b < lv.boundaries.size(); ++b) {
        if (!fresh_[l][b]) continue;
        for (const auto& group : mutex_groups_) {
            std::vector<Lit> lits;
            for (FactId f : group) lits.push_back(lv.boundaries[b][f]);
            sat::encode_amo(s_, lits, cfg_.amo);
        }
    }

    const auto& final_state = lv.boundaries.back();
    for (FactId f : problem_.goal) {
        s_.add_clause({~lv.solution, final_state[f]});
        s_.add_clause({~lv.relaxed, final_state[f]});
    }
}

QueryOutcome Encoder::solve_solution(const Pdt& pdt, std::optional<sat::Deadline> deadline) {
    QueryOutcome out;
    const Lit a = layers_.back().solution;
    out.result = s_.solve(std::span<const Lit>(&a, 1), deadline);
    if (out.result != sat::Result::Sat) return out;
    DtCandidate cand = decode(pdt, false);
    auto plan = cand.tree.plan();
    if (!plan) throw InternalError("solution query selected an abstract leaf");
    auto end = apply_seq(problem_, problem_.initial_state(), *plan);
    if (!end) throw InternalError("decoded plan is not executable");
    if (!is_goal(problem_, *end)) throw InternalError("decoded plan misses the goal");
    out.candidate = std::move(cand);
    return out;
}

QueryOutcome Encoder::solve_relaxed(const Pdt& pdt, std::optional<sat::Deadline> deadline) {
    QueryOutcome out;
    const Lit r = layers_.back().relaxed;
    out.result = s_.solve(std::span<const Lit>(&r, 1), deadline);
    if (out.result == sat::Result::Sat) out.candidate = decode(pdt, true);
    return out;
}

DtCandidate Encoder::decode(const Pdt& pdt, bool relaxed) const {
    const Grid& g = pdt.grid();
    const int bottom = static_cast<int>(layers_.size()) - 1;
    if (bottom + 1 != static_cast<int>(g.num_layers())) throw InternalError("grid and encoding out of sync");
    const auto& nodes = pdt.nodes();

    DtCandidate cand;
    cand.relaxed = relaxed;
    DecompositionTree& tree = cand.tree;
    tree.nodes.push_back(DtNode{TaskRef::abstract(problem_.initial_task), std::nullopt, {}});

    std::function<void(int, int, int, int)> visit = [&](int dt, int l, int p, int pn) {
        const Position& pos = g.layers[l][p];
        const PositionVars& v = layers_[l].positions[p];
        int true_ops = 0;
        for (Lit x : all_ops(v)) true_ops += s_.value(x);
        if (true_ops != 1)
            throw InternalError("position " + std::to_string(l) + ":" + std::to_string(p) + " has " +
                                std::to_string(true_ops) + " selected ops");
        const TaskRef task = tree.nodes[dt].task;
        Lit lit = op_lit(pos, v, task);
        if (lit.value == 0 || !s_.value(lit)) throw InternalError("selected path broken at " + problem_.display(task));
        if (pn >= 0) cand.pdt_nodes.push_back(pn);
        if (l == bottom) {
            if (task.is_abstract()) cand.abstract_positions.push_back(p);
            return;
        }
        if (task.is_primitive() || !pos.expanded) {
            visit(dt, l + 1, pos.first_child, pn);
            return;
        }
        int chosen = -1;
        for (std::size_t i = 0; i < pos.methods.size(); ++i) {
            if (problem_.methods[pos.methods[i]].task != task.id || !s_.value(v.methods[i])) continue;
            if (chosen >= 0) throw InternalError("several methods selected for " + problem_.display(task));
            chosen = pos.methods[i];
        }
        if (chosen < 0) throw InternalError("no method selected for " + problem_.display(task));
        tree.nodes[dt].method = chosen;
        int method_node = -1;
        if (pn >= 0)
            for (int c : nodes[pn].children)
                if (nodes[c].method == chosen) method_node = c;
        if (method_node >= 0) cand.pdt_nodes.push_back(method_node);
        const auto& subs = problem_.methods[chosen].subtasks;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            int child = static_cast<int>(tree.nodes.size());
            tree.nodes.push_back(DtNode{subs[i], std::nullopt, {}});
            tree.nodes[dt].children.push_back(child);
        }
        for (std::size_t i = 0; i < subs.size(); ++i) {
            int child_pdt = method_node >= 0 ? nodes[method_node].children[i] : -1;
            visit(tree.nodes[dt].children[i], l + 1, pos.first_child + static_cast<int>(i), child_pdt);
        }
    };
    visit(0, 0, 0, pdt.root());
    std::sort(cand.pdt_nodes.begin(), cand.pdt_nodes.end());
    cand.pdt_nodes.erase(std::unique(cand.pdt_nodes.begin(), cand.pdt_nodes.end()), cand.pdt_nodes.end());
    cand.frontier = tree.frontier();
    return cand;
}

}  // namespace htnsat
