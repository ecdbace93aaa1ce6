#include "htnsat/inference.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace htnsat {

namespace {

std::vector<std::vector<TaskId>> task_edges(const Problem& p) {
    std::vector<std::vector<TaskId>> out(p.abstracts.size());
    for (const Method& m : p.methods)
        for (const TaskRef& s : m.subtasks)
            if (s.is_abstract()) out[m.task].push_back(s.id);
    for (auto& e : out) {
        std::sort(e.begin(), e.end());
        e.erase(std::unique(e.begin(), e.end()), e.end());
    }
    return out;
}

State to_state(std::size_t n, const std::vector<FactId>& facts) {
    State s(n);
    for (FactId f : facts) s.set(f);
    return s;
}

bool unite(State& into, const State& from) {
    bool changed = false;
    for (std::size_t f = 0; f < from.size(); ++f) {
        if (from.test(static_cast<FactId>(f)) && !into.test(static_cast<FactId>(f))) {
            into.set(static_cast<FactId>(f));
            changed = true;
        }
    }
    return changed;
}

}  // namespace

RecursionInfo compute_recursion(const Problem& p) {
    const auto edges = task_edges(p);
    const int n = static_cast<int>(p.abstracts.size());
    RecursionInfo info;
    info.component.assign(n, -1);
    info.recursive.assign(n, false);

    // Iterative Tarjan.
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int counter = 0;
    for (int root = 0; root < n; ++root) {
        if (index[root] >= 0) continue;
        std::vector<std::pair<int, std::size_t>> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = true;
        while (!call.empty()) {
            auto& [v, next] = call.back();
            if (next < edges[v].size()) {
                int w = edges[v][next++];
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = true;
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::vector<TaskId> comp;
                int w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    info.component[w] = static_cast<int>(info.components.size());
                    comp.push_back(w);
                } while (w != v);
                std::sort(comp.begin(), comp.end());
                info.components.push_back(std::move(comp));
            }
            int finished = v;
            call.pop_back();
            if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[finished]);
        }
    }
    for (int t = 0; t < n; ++t) {
        bool self = std::binary_search(edges[t].begin(), edges[t].end(), t);
        info.recursive[t] = self || info.components[info.component[t]].size() > 1;
    }
    return info;
}

std::vector<PossibleEffects> compute_poss_effects(const Problem& p, const RecursionInfo& r) {
    const std::size_t nf = p.num_facts();
    std::vector<State> pos(p.abstracts.size(), State(nf)), neg(p.abstracts.size(), State(nf));
    std::vector<State> act_pos, act_neg;
    for (const Action& a : p.actions) {
        act_pos.push_back(to_state(nf, a.eff_pos));
        act_neg.push_back(to_state(nf, a.eff_neg));
    }
    // Components come sinks first, so every callee outside the component is final.
    for (const auto& comp : r.components) {
        for (bool changed = true; changed;) {
            changed = false;
            for (TaskId t : comp) {
                for (MethodId mid : p.abstracts[t].methods) {
                    for (const TaskRef& s : p.methods[mid].subtasks) {
                        const State& sp = s.is_primitive() ? act_pos[s.id] : pos[s.id];
                        const State& sn = s.is_primitive() ? act_neg[s.id] : neg[s.id];
                        changed |= unite(pos[t], sp);
                        changed |= unite(neg[t], sn);
                    }
                }
            }
        }
    }
    std::vector<PossibleEffects> out(p.abstracts.size());
    for (std::size_t t = 0; t < out.size(); ++t) {
        out[t].pos = pos[t].facts();
        out[t].neg = neg[t].facts();
    }
    return out;
}

std::vector<std::vector<FactId>> compute_mandatory_preconditions(const Problem& p, const RecursionInfo& r) {
    const std::size_t nf = p.num_facts();
    State full(nf);
    for (std::size_t f = 0; f < nf; ++f) full.set(static_cast<FactId>(f));
    std::vector<State> mand(p.abstracts.size(), full);
    std::vector<State> act_pre;
    for (const Action& a : p.actions) act_pre.push_back(to_state(nf, a.precond));

    for (const auto& comp : r.components) {
        for (bool changed = true; changed;) {
            changed = false;
            for (TaskId t : comp) {
                State acc = full;
                for (MethodId mid : p.abstracts[t].methods) {
                    const Method& m = p.methods[mid];
                    if (m.subtasks.empty()) {
                        acc = State(nf);
                        break;
                    }
                    const TaskRef& first = m.subtasks.front();
                    const State& f = first.is_primitive() ? act_pre[first.id] : mand[first.id];
                    for (std::size_t i = 0; i < nf; ++i)
                        if (!f.test(static_cast<FactId>(i))) acc.reset(static_cast<FactId>(i));
                }
                if (!(acc == mand[t])) {
                    mand[t] = acc;
                    changed = true;
                }
            }
        }
    }
    std::vector<std::vector<FactId>> out;
    out.reserve(mand.size());
    for (const State& s : mand) out.push_back(s.facts());
    return out;
}

namespace {

bool inductive_step(const Problem& p, std::set<FactId>& group, const State& init) {
    std::size_t in_init = 0;
    for (FactId f : group) in_init += init.test(f);
    if (in_init > 1) {
        group.clear();
        return true;
    }
    bool changed = false;
    for (const Action& a : p.actions) {
        std::vector<FactId> adds;
        for (FactId f : a.eff_pos)
            if (group.count(f)) adds.push_back(f);
        if (adds.empty()) continue;
        bool balanced = false;
        if (adds.size() == 1) {
            FactId f = adds.front();
            if (std::binary_search(a.precond.begin(), a.precond.end(), f)) balanced = true;
            for (FactId g : a.eff_neg)
                if (group.count(g) && std::binary_search(a.precond.begin(), a.precond.end(), g)) balanced = true;
        }
        if (balanced) continue;
        for (FactId f : adds) group.erase(f);
        changed = true;
    }
    return changed;
}

// The first action adding exactly one group fact without consuming one, or nullptr.
const Action* unbalanced_adder(const Problem& p, const std::set<FactId>& group) {
    for (const Action& a : p.actions) {
        std::size_t adds = 0;
        FactId added = -1;
        for (FactId f : a.eff_pos)
            if (group.count(f)) {
                ++adds;
                added = f;
            }
        if (adds != 1 || std::binary_search(a.precond.begin(), a.precond.end(), added)) continue;
        bool balanced = false;
        for (FactId g : a.eff_neg)
            balanced = balanced || (group.count(g) && std::binary_search(a.precond.begin(), a.precond.end(), g));
        if (!balanced) return &a;
    }
    return nullptr;
}

constexpr int kMaxExtensions = 3;
constexpr std::size_t kMaxCandidates = 20'000;

// Candidates grown from a seed by adding a fact that an unbalanced adder both
// requires and deletes, which restores that adder's balance.
void grow(const Problem& p, const State& init, std::set<FactId> group, int budget,
          std::set<std::set<FactId>>& out) {
    if (out.size() >= kMaxCandidates || !out.insert(group).second || budget == 0) return;
    const Action* a = unbalanced_adder(p, group);
    if (!a) return;
    bool init_used = false;
    for (FactId f : group) init_used = init_used || init.test(f);
    for (FactId f : a->eff_neg) {
        if (group.count(f) || !std::binary_search(a->precond.begin(), a->precond.end(), f)) continue;
        if (init_used && init.test(f)) continue;
        std::set<FactId> bigger = group;
        bigger.insert(f);
        grow(p, init, std::move(bigger), budget - 1, out);
    }
}

}  // namespace

std::vector<MutexGroup> compute_mutex_groups(const Problem& p) {
    // Seed: facts of one predicate that agree on all arguments but one; every
    // fact also seeds alone so that cross-predicate groups can grow from it.
    std::map<std::tuple<std::string, std::size_t, std::vector<std::string>>, std::set<FactId>> seeds;
    for (const Fact& f : p.facts) {
        for (std::size_t j = 0; j < f.args.size(); ++j) {
            std::vector<std::string> rest;
            for (std::size_t k = 0; k < f.args.size(); ++k)
                if (k != j) rest.push_back(f.args[k]);
            seeds[{f.predicate, j, rest}].insert(f.id);
        }
        seeds[{f.predicate, f.args.size(), f.args}].insert(f.id);
    }
    const State init = p.initial_state();
    std::set<std::set<FactId>> candidates;
    for (auto& [key, group] : seeds)
        if (!group.empty()) grow(p, init, group, kMaxExtensions, candidates);
    std::set<MutexGroup> found;
    for (std::set<FactId> group : candidates) {
        while (group.size() >= 2 && inductive_step(p, group, init)) {
        }
        if (group.size() >= 2) found.insert(MutexGroup(group.begin(), group.end()));
    }
    std::vector<MutexGroup> out;
    for (const MutexGroup& g : found) {
        bool dominated = false;
        for (const MutexGroup& h : found)
            if (h.size() > g.size() && std::includes(h.begin(), h.end(), g.begin(), g.end())) dominated = true;
        if (!dominated) out.push_back(g);
    }
    return out;
}

Inference infer(const Problem& p, bool with_mutexes) {
    Inference inf;
    inf.recursion = compute_recursion(p);
    auto eff = compute_poss_effects(p, inf.recursion);
    auto mand = compute_mandatory_preconditions(p, inf.recursion);
    inf.profiles.resize(p.abstracts.size());
    for (std::size_t t = 0; t < p.abstracts.size(); ++t) {
        inf.profiles[t] = TaskProfile{static_cast<TaskId>(t), std::move(mand[t]), std::move(eff[t].pos),
                                      std::move(eff[t].neg)};
    }
    if (with_mutexes) inf.mutexes = compute_mutex_groups(p);
    return inf;
}

std::string dump_profiles(const Problem& p, const Inference& inf) {
    std::ostringstream out;
    auto list = [&](const char* label, const std::vector<FactId>& facts) {
        out << ' ' << label << " {";
        for (std::size_t i = 0; i < facts.size(); ++i) out << (i ? " " : "") << p.facts[facts[i]].display();
        out << '}';
    };
    for (const TaskProfile& tp : inf.profiles) {
        out << "task " << p.abstracts[tp.task].display();
        if (inf.recursion.is_recursive(tp.task)) out << " recursive";
        list("mand_pre", tp.mand_pre);
        list("poss_eff_pos", tp.poss_eff_pos);
        list("poss_eff_neg", tp.poss_eff_neg);
        out << '\n';
    }
    for (const MutexGroup& g : inf.mutexes) {
        out << "mutex";
        for (FactId f : g) out << ' ' << p.facts[f].display();
        out << '\n';
    }
    return out.str();
}

}  // namespace htnsat
