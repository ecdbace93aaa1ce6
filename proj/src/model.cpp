#include "htnsat/model.hpp"

#include <algorithm>
#include <bit>
#include <functional>

namespace htnsat {

namespace {

void sort_unique(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

void check_fact_ids(const std::vector<FactId>& ids, std::size_t n, const std::string& where) {
    for (FactId f : ids)
        if (f < 0 || static_cast<std::size_t>(f) >= n)
            throw UsageError(where + ": fact id " + std::to_string(f) + " out of range");
}

}  // namespace

std::size_t State::count() const {
    std::size_t n = 0;
    for (auto w : words_) n += std::popcount(w);
    return n;
}

std::vector<FactId> State::facts() const {
    std::vector<FactId> out;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        std::uint64_t w = words_[i];
        while (w) {
            int b = std::countr_zero(w);
            out.push_back(static_cast<FactId>(i * 64 + b));
            w &= w - 1;
        }
    }
    return out;
}

std::size_t StateHash::operator()(const State& s) const noexcept {
    std::size_t h = s.size();
    for (auto w : s.words()) h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

std::string format_signature(const std::string& name, const std::vector<std::string>& args) {
    if (args.empty()) return name;
    std::string out = name + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) out += ',';
        out += args[i];
    }
    out += ')';
    return out;
}

std::string Fact::display() const { return format_signature(predicate, args); }
std::string Action::display() const { return format_signature(name, args); }
std::string AbstractTask::display() const { return format_signature(name, args); }
std::string Method::display() const { return format_signature(name, args); }

void Problem::finalize() {
    const std::size_t nf = facts.size();
    fact_index_.clear();
    task_index_.clear();
    method_index_.clear();

    for (std::size_t i = 0; i < nf; ++i) {
        if (facts[i].id != static_cast<FactId>(i)) throw UsageError("fact ids must be contiguous");
        if (!fact_index_.emplace(facts[i].display(), facts[i].id).second)
            throw UsageError("duplicate fact " + facts[i].display());
    }
    for (std::size_t i = 0; i < actions.size(); ++i) {
        Action& a = actions[i];
        if (a.id != static_cast<ActionId>(i)) throw UsageError("action ids must be contiguous");
        check_fact_ids(a.precond, nf, a.display());
        check_fact_ids(a.eff_pos, nf, a.display());
        check_fact_ids(a.eff_neg, nf, a.display());
        sort_unique(a.precond);
        sort_unique(a.eff_pos);
        sort_unique(a.eff_neg);
        // add-after-delete: a fact in both effect sets stays an add
        std::vector<FactId> neg;
        std::set_difference(a.eff_neg.begin(), a.eff_neg.end(), a.eff_pos.begin(), a.eff_pos.end(),
                            std::back_inserter(neg));
        a.eff_neg = std::move(neg);
        if (!task_index_.emplace(a.display(), TaskRef::primitive(a.id)).second)
            throw UsageError("duplicate task name " + a.display());
    }
    for (std::size_t i = 0; i < abstracts.size(); ++i) {
        AbstractTask& t = abstracts[i];
        if (t.id != static_cast<TaskId>(i)) throw UsageError("abstract task ids must be contiguous");
        t.methods.clear();
        if (!task_index_.emplace(t.display(), TaskRef::abstract(t.id)).second)
            throw UsageError("duplicate task name " + t.display());
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
        Method& m = methods[i];
        if (m.id != static_cast<MethodId>(i)) throw UsageError("method ids must be contiguous");
        if (m.task < 0 || static_cast<std::size_t>(m.task) >= abstracts.size())
            throw UsageError("method " + m.display() + " refers to unknown task");
        for (const TaskRef& s : m.subtasks) {
            std::size_t bound = s.is_primitive() ? actions.size() : abstracts.size();
            if (s.id < 0 || static_cast<std::size_t>(s.id) >= bound)
                throw UsageError("method " + m.display() + " has a dangling subtask");
        }
        abstracts[m.task].methods.push_back(m.id);
        if (!method_index_.emplace(m.display(), m.id).second)
            throw UsageError("duplicate method " + m.display());
    }
    if (initial_task < 0 || static_cast<std::size_t>(initial_task) >= abstracts.size())
        throw UsageError("initial task is not a valid abstract task");
    check_fact_ids(init, nf, "init");
    check_fact_ids(goal, nf, "goal");
    sort_unique(init);
    sort_unique(goal);
}

State Problem::initial_state() const {
    State s(facts.size());
    for (FactId f : init) s.set(f);
    return s;
}

std::string Problem::display(TaskRef t) const {
    return t.is_primitive() ? actions.at(t.id).display() : abstracts.at(t.id).display();
}

std::optional<FactId> Problem::find_fact(const std::string& display) const {
    auto it = fact_index_.find(display);
    if (it == fact_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<TaskRef> Problem::find_task(const std::string& display) const {
    auto it = task_index_.find(display);
    if (it == task_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<MethodId> Problem::find_method(const std::string& display) const {
    auto it = method_index_.find(display);
    if (it == method_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<State> apply(const Problem& p, const State& s, ActionId a) {
    if (a < 0 || static_cast<std::size_t>(a) >= p.actions.size())
        throw UsageError("apply: invalid action id " + std::to_string(a));
    const Action& act = p.actions[a];
    if (!s.contains_all(act.precond)) return std::nullopt;
    State next = s;
    for (FactId f : act.eff_neg) next.reset(f);
    for (FactId f : act.eff_pos) next.set(f);
    return next;
}

std::optional<State> apply_seq(const Problem& p, State s, std::span<const ActionId> plan) {
    for (ActionId a : plan) {
        auto next = apply(p, s, a);
        if (!next) return std::nullopt;
        s = std::move(*next);
    }
    return s;
}

bool is_goal(const Problem& p, const State& s) { return s.contains_all(p.goal); }

}  // namespace htnsat
