#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "htnsat/hddl.hpp"

namespace htnsat::hddl {

namespace {

using Key = std::string;

struct GroundLiterals {
    std::vector<Key> pos;  // dynamic positive preconditions
    std::vector<Key> neg;  // dynamic negative preconditions
};

struct TaskInst {
    bool primitive = false;
    int schema = -1;
    std::vector<std::string> args;
    Key key;
    // primitive only
    GroundLiterals pre;
    std::vector<Key> add, del;
    bool applicable = false;
    // abstract only
    bool enumerated = false;
    std::vector<int> candidates;  // MethodInst ids
};

enum class MethodState { Candidate, Active, Dead };

struct MethodInst {
    int schema = -1;
    int task = -1;
    std::vector<std::string> args;  // values of all method parameters
    Key key;
    GroundLiterals pre;
    std::vector<int> subtasks;
    MethodState state = MethodState::Candidate;
};

class Grounder {
public:
    Grounder(const LiftedDomain& d, const LiftedProblem& p, const GroundOptions& o) : d_(d), p_(p), opts_(o) {}

    Problem run() {
        index_schemas();
        collect_objects();
        find_static_predicates();
        for (const Atom& a : p_.init) init_.insert(ground_key(a.predicate, a.args));
        reachable_ = init_;

        std::vector<int> roots;
        for (const SubtaskCall& c : p_.initial_tasks) {
            for (const std::string& arg : c.args)
                if (!object_type_.count(arg)) throw GroundingError("initial task argument " + arg + " is not an object");
            auto id = task_instance(c.task, c.args);
            if (!id) throw GroundingError("initial task " + c.task + " cannot be instantiated");
            roots.push_back(*id);
        }
        reachability();
        return build(roots);
    }

private:
    // ---- setup ---------------------------------------------------------------------------

    void index_schemas() {
        for (std::size_t i = 0; i < d_.actions.size(); ++i) {
            if (!schema_.emplace(d_.actions[i].name, std::make_pair(true, static_cast<int>(i))).second)
                throw GroundingError("duplicate task name " + d_.actions[i].name);
        }
        for (std::size_t i = 0; i < d_.tasks.size(); ++i) {
            if (!schema_.emplace(d_.tasks[i].name, std::make_pair(false, static_cast<int>(i))).second)
                throw GroundingError("duplicate task name " + d_.tasks[i].name);
        }
        for (std::size_t i = 0; i < d_.methods.size(); ++i) methods_of_[d_.methods[i].task].push_back(static_cast<int>(i));
    }

    void collect_objects() {
        for (const TypedName& c : d_.constants) object_type_[c.name] = c.type;
        for (const TypedName& o : p_.objects) object_type_[o.name] = o.type;
        // std::map iteration keeps objects sorted lexicographically
        for (const auto& [name, type] : object_type_) objects_.push_back(name);
    }

    bool is_subtype(std::string type, const std::string& of) const {
        if (of == "object") return true;
        for (int guard = 0; guard < 1000; ++guard) {
            if (type == of) return true;
            auto it = d_.type_parent.find(type);
            if (it == d_.type_parent.end() || it->second == type) return false;
            type = it->second;
        }
        throw GroundingError("cyclic type hierarchy");
    }

    const std::vector<std::string>& objects_of(const std::string& type) {
        auto it = by_type_.find(type);
        if (it != by_type_.end()) return it->second;
        std::vector<std::string> out;
        for (const std::string& o : objects_)
            if (is_subtype(object_type_.at(o), type)) out.push_back(o);
        return by_type_.emplace(type, std::move(out)).first->second;
    }

    bool object_has_type(const std::string& obj, const std::string& type) const {
        auto it = object_type_.find(obj);
        return it != object_type_.end() && is_subtype(it->second, type);
    }

    void find_static_predicates() {
        std::set<std::string> fluent;
        for (const ActionDecl& a : d_.actions)
            for (const Literal& l : a.effects) fluent.insert(l.atom.predicate);
        for (const PredicateDecl& pd : d_.predicates)
            if (!fluent.count(pd.name)) static_.insert(pd.name);
        for (const Atom& a : p_.init)
            if (!fluent.count(a.predicate)) static_.insert(a.predicate);
    }

    static Key ground_key(const std::string& pred, const std::vector<std::string>& args) {
        return format_signature(pred, args);
    }

    // ---- binding enumeration -------------------------------------------------------------

    struct Binding {
        const std::vector<TypedName>* params;
        std::vector<std::string> values;  // "" = unbound

        std::optional<std::string> resolve(const std::string& term) const {
            if (term.empty() || term[0] != '?') return term;
            for (std::size_t i = 0; i < params->size(); ++i)
                if ((*params)[i].name == term) {
                    if (values[i].empty()) return std::nullopt;
                    return values[i];
                }
            throw GroundingError("unbound variable " + term);
        }
    };

    // true = satisfied or not yet decidable; false = statically violated
    bool static_ok(const Literal& l, const Binding& b) const {
        if (!l.equality && !static_.count(l.atom.predicate)) return true;
        std::vector<std::string> args;
        for (const std::string& t : l.atom.args) {
            auto v = b.resolve(t);
            if (!v) return true;
            args.push_back(*v);
        }
        if (l.equality) return (args[0] == args[1]) == l.positive;
        return (init_.count(ground_key(l.atom.predicate, args)) > 0) == l.positive;
    }

    void enumerate(const std::vector<TypedName>& params, std::vector<std::string> fixed,
                   const std::vector<Literal>& lits, const std::function<void(const Binding&)>& emit) {
        Binding b{&params, std::move(fixed)};
        for (const Literal& l : lits)
            if (!static_ok(l, b)) return;
        std::function<void(std::size_t)> rec = [&](std::size_t i) {
            while (i < params.size() && !b.values[i].empty()) ++i;
            if (i == params.size()) {
                if (++instantiations_ > opts_.max_instantiations)
                    throw GroundingError("grounding aborted: more than " + std::to_string(opts_.max_instantiations) +
                                         " instantiations");
                emit(b);
                return;
            }
            for (const std::string& obj : objects_of(params[i].type)) {
                b.values[i] = obj;
                bool ok = true;
                for (const Literal& l : lits)
                    if (!static_ok(l, b)) {
                        ok = false;
                        break;
                    }
                if (ok) rec(i + 1);
            }
            b.values[i].clear();
        };
        rec(0);
    }

    GroundLiterals dynamic_literals(const std::vector<Literal>& lits, const Binding& b) const {
        GroundLiterals out;
        for (const Literal& l : lits) {
            if (l.equality || static_.count(l.atom.predicate)) continue;
            std::vector<std::string> args;
            for (const std::string& t : l.atom.args) args.push_back(*b.resolve(t));
            (l.positive ? out.pos : out.neg).push_back(ground_key(l.atom.predicate, args));
        }
        return out;
    }

    // ---- instances -----------------------------------------------------------------------

    std::optional<int> task_instance(const std::string& name, const std::vector<std::string>& args) {
        Key key = ground_key(name, args);
        if (auto it = task_index_.find(key); it != task_index_.end()) {
            if (it->second < 0) return std::nullopt;
            return it->second;
        }
        auto sit = schema_.find(name);
        if (sit == schema_.end()) throw GroundingError("unknown task " + name);
        auto [primitive, schema] = sit->second;
        const auto& params = primitive ? d_.actions[schema].params : d_.tasks[schema].params;
        bool ok = params.size() == args.size();
        for (std::size_t i = 0; ok && i < args.size(); ++i) ok = object_has_type(args[i], params[i].type);

        TaskInst inst;
        inst.primitive = primitive;
        inst.schema = schema;
        inst.args = args;
        inst.key = key;
        if (ok && primitive) {
            const ActionDecl& a = d_.actions[schema];
            Binding b{&a.params, args};
            for (const Literal& l : a.precond)
                if (!static_ok(l, b)) ok = false;
            if (ok) {
                inst.pre = dynamic_literals(a.precond, b);
                for (const Literal& l : a.effects) {
                    std::vector<std::string> eargs;
                    for (const std::string& t : l.atom.args) eargs.push_back(*b.resolve(t));
                    (l.positive ? inst.add : inst.del).push_back(ground_key(l.atom.predicate, eargs));
                }
            }
        }
        if (!ok) {
            task_index_[key] = -1;
            return std::nullopt;
        }
        int id = static_cast<int>(tasks_.size());
        tasks_.push_back(std::move(inst));
        task_index_[key] = id;
        return id;
    }

    void enumerate_methods(int task_id) {
        tasks_[task_id].enumerated = true;
        auto it = methods_of_.find(d_.tasks[tasks_[task_id].schema].name);
        if (it == methods_of_.end()) return;
        for (int ms : it->second) {
            const MethodDecl& m = d_.methods[ms];
            std::vector<std::string> fixed(m.params.size());
            bool ok = m.task_args.size() == tasks_[task_id].args.size();
            for (std::size_t i = 0; ok && i < m.task_args.size(); ++i) {
                const std::string& term = m.task_args[i];
                const std::string& val = tasks_[task_id].args[i];
                if (term.empty() || term[0] != '?') {
                    ok = term == val;
                    continue;
                }
                auto pit = std::find_if(m.params.begin(), m.params.end(),
                                        [&](const TypedName& tn) { return tn.name == term; });
                if (pit == m.params.end()) throw GroundingError("method " + m.name + ": undeclared variable " + term);
                std::size_t pi = static_cast<std::size_t>(pit - m.params.begin());
                if (!object_has_type(val, pit->type) || (!fixed[pi].empty() && fixed[pi] != val)) ok = false;
                else fixed[pi] = val;
            }
            if (!ok) continue;
            enumerate(m.params, fixed, m.precond, [&](const Binding& b) {
                Key key = ground_key(m.name, b.values);
                if (method_index_.count(key)) return;
                MethodInst mi;
                mi.schema = ms;
                mi.task = task_id;
                mi.args = b.values;
                mi.key = key;
                mi.pre = dynamic_literals(m.precond, b);
                int id = static_cast<int>(methods_.size());
                method_index_[key] = id;
                methods_.push_back(std::move(mi));
                tasks_[task_id].candidates.push_back(id);
            });
        }
    }

    bool all_reachable(const std::vector<Key>& keys) const {
        return std::all_of(keys.begin(), keys.end(), [&](const Key& k) { return reachable_.count(k) > 0; });
    }

    void activate(int mid) {
        MethodInst& mi = methods_[mid];
        const MethodDecl& m = d_.methods[mi.schema];
        Binding b{&m.params, mi.args};
        std::vector<int> subs;
        for (const SubtaskCall& c : m.subtasks) {
            std::vector<std::string> args;
            for (const std::string& t : c.args) {
                auto v = b.resolve(t);
                if (!object_type_.count(*v)) throw GroundingError("method " + m.name + ": unknown object " + *v);
                args.push_back(*v);
            }
            auto id = task_instance(c.task, args);
            if (!id) {
                methods_[mid].state = MethodState::Dead;
                return;
            }
            subs.push_back(*id);
        }
        methods_[mid].subtasks = std::move(subs);
        methods_[mid].state = MethodState::Active;
    }

    // Delete-relaxed state reachability interleaved with decomposition reachability.
    void reachability() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t t = 0; t < tasks_.size(); ++t) {
                if (!tasks_[t].primitive && !tasks_[t].enumerated) {
                    enumerate_methods(static_cast<int>(t));
                    changed = true;
                }
            }
            for (std::size_t t = 0; t < tasks_.size(); ++t) {
                if (tasks_[t].primitive || !tasks_[t].enumerated) continue;
                for (int mid : std::vector<int>(tasks_[t].candidates)) {
                    if (methods_[mid].state != MethodState::Candidate) continue;
                    if (!all_reachable(methods_[mid].pre.pos)) continue;
                    activate(mid);
                    changed = true;
                }
            }
            for (std::size_t t = 0; t < tasks_.size(); ++t) {
                TaskInst& ti = tasks_[t];
                if (!ti.primitive || ti.applicable || !all_reachable(ti.pre.pos)) continue;
                ti.applicable = true;
                changed = true;
                for (const Key& k : ti.add) reachable_.insert(k);
            }
        }
    }

    // ---- output --------------------------------------------------------------------------

    Problem build(const std::vector<int>& roots) {
        // Bottom-up pruning of methods with dead subtasks and tasks without methods.
        std::vector<char> alive(tasks_.size(), 0);
        for (std::size_t t = 0; t < tasks_.size(); ++t)
            alive[t] = tasks_[t].primitive ? tasks_[t].applicable : 1;
        std::vector<char> method_alive(methods_.size());
        for (std::size_t m = 0; m < methods_.size(); ++m) method_alive[m] = methods_[m].state == MethodState::Active;
        for (bool changed = true; changed;) {
            changed = false;
            for (std::size_t m = 0; m < methods_.size(); ++m) {
                if (!method_alive[m]) continue;
                for (int s : methods_[m].subtasks)
                    if (!alive[s]) {
                        method_alive[m] = 0;
                        changed = true;
                        break;
                    }
            }
            for (std::size_t t = 0; t < tasks_.size(); ++t) {
                if (tasks_[t].primitive || !alive[t]) continue;
                bool any = false;
                for (int m : tasks_[t].candidates) any = any || method_alive[m];
                if (!any) {
                    alive[t] = 0;
                    changed = true;
                }
            }
        }

        // Top-down reachability from the initial network over surviving methods.
        std::vector<char> keep_task(tasks_.size(), 0), keep_method(methods_.size(), 0);
        std::vector<int> stack(roots.begin(), roots.end());
        for (int r : roots) keep_task[r] = 1;
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            if (tasks_[t].primitive || !alive[t]) continue;
            for (int m : tasks_[t].candidates) {
                if (!method_alive[m]) continue;
                keep_method[m] = 1;
                for (int s : methods_[m].subtasks)
                    if (!keep_task[s]) {
                        keep_task[s] = 1;
                        stack.push_back(s);
                    }
            }
        }

        Problem out;
        std::unordered_map<Key, FactId> fact_ids;
        auto fact = [&](const Key& k) {
            auto it = fact_ids.find(k);
            if (it != fact_ids.end()) return it->second;
            auto open = k.find('(');
            Fact f;
            f.id = static_cast<FactId>(out.facts.size());
            if (open == Key::npos) {
                f.predicate = k;
            } else {
                f.predicate = k.substr(0, open);
                std::string inner = k.substr(open + 1, k.size() - open - 2), cur;
                for (char c : inner) {
                    if (c == ',') {
                        f.args.push_back(cur);
                        cur.clear();
                    } else {
                        cur += c;
                    }
                }
                f.args.push_back(cur);
            }
            fact_ids.emplace(k, f.id);
            out.facts.push_back(std::move(f));
            return out.facts.back().id;
        };
        auto complement = [](const Key& k) { return "not_" + k; };

        // Atoms that occur negatively in some kept precondition get a complement fact.
        std::set<Key> negated;
        for (std::size_t t = 0; t < tasks_.size(); ++t)
            if (keep_task[t] && tasks_[t].primitive) negated.insert(tasks_[t].pre.neg.begin(), tasks_[t].pre.neg.end());
        for (std::size_t m = 0; m < methods_.size(); ++m)
            if (keep_method[m]) negated.insert(methods_[m].pre.neg.begin(), methods_[m].pre.neg.end());

        std::vector<int> action_of(tasks_.size(), -1), abstract_of(tasks_.size(), -1);
        for (std::size_t t = 0; t < tasks_.size(); ++t) {
            if (!keep_task[t]) continue;
            const TaskInst& ti = tasks_[t];
            if (ti.primitive) {
                if (!ti.applicable) continue;
                Action a;
                a.id = static_cast<ActionId>(out.actions.size());
                a.name = d_.actions[ti.schema].name;
                a.args = ti.args;
                for (const Key& k : ti.pre.pos) a.precond.push_back(fact(k));
                for (const Key& k : ti.pre.neg) a.precond.push_back(fact(complement(k)));
                for (const Key& k : ti.add) {
                    a.eff_pos.push_back(fact(k));
                    if (negated.count(k)) a.eff_neg.push_back(fact(complement(k)));
                }
                for (const Key& k : ti.del) {
                    a.eff_neg.push_back(fact(k));
                    if (negated.count(k)) a.eff_pos.push_back(fact(complement(k)));
                }
                action_of[t] = a.id;
                out.actions.push_back(std::move(a));
            } else if (alive[t]) {
                AbstractTask at;
                at.id = static_cast<TaskId>(out.abstracts.size());
                at.name = d_.tasks[ti.schema].name;
                at.args = ti.args;
                abstract_of[t] = at.id;
                out.abstracts.push_back(std::move(at));
            }
        }

        for (std::size_t m = 0; m < methods_.size(); ++m) {
            if (!keep_method[m]) continue;
            const MethodInst& mi = methods_[m];
            Method gm;
            gm.id = static_cast<MethodId>(out.methods.size());
            gm.name = d_.methods[mi.schema].name;
            gm.args = mi.args;
            gm.task = abstract_of[mi.task];
            if (!mi.pre.pos.empty() || !mi.pre.neg.empty()) {
                Action guard;
                guard.id = static_cast<ActionId>(out.actions.size());
                guard.name = "__guard_" + gm.name;
                guard.args = gm.args;
                guard.is_guard = true;
                for (const Key& k : mi.pre.pos) guard.precond.push_back(fact(k));
                for (const Key& k : mi.pre.neg) guard.precond.push_back(fact(complement(k)));
                gm.subtasks.push_back(TaskRef::primitive(guard.id));
                out.actions.push_back(std::move(guard));
            }
            for (int s : mi.subtasks)
                gm.subtasks.push_back(tasks_[s].primitive ? TaskRef::primitive(action_of[s])
                                                          : TaskRef::abstract(abstract_of[s]));
            out.methods.push_back(std::move(gm));
        }

        // Initial task: the single abstract root, or a synthesized wrapper.
        if (roots.size() == 1 && !tasks_[roots[0]].primitive) {
            if (abstract_of[roots[0]] < 0) {
                AbstractTask at;
                at.id = static_cast<TaskId>(out.abstracts.size());
                at.name = d_.tasks[tasks_[roots[0]].schema].name;
                at.args = tasks_[roots[0]].args;
                abstract_of[roots[0]] = at.id;
                out.abstracts.push_back(std::move(at));
            }
            out.initial_task = abstract_of[roots[0]];
        } else {
            AbstractTask top;
            top.id = static_cast<TaskId>(out.abstracts.size());
            top.name = "__top";
            out.initial_task = top.id;
            out.abstracts.push_back(top);
            bool viable = true;
            Method m;
            m.name = "__top_method";
            m.task = top.id;
            for (int r : roots) {
                int id = tasks_[r].primitive ? action_of[r] : abstract_of[r];
                if (id < 0) {
                    viable = false;
                    break;
                }
                m.subtasks.push_back(tasks_[r].primitive ? TaskRef::primitive(id) : TaskRef::abstract(id));
            }
            if (viable) {
                m.id = static_cast<MethodId>(out.methods.size());
                out.methods.push_back(std::move(m));
            }
        }

        for (const Atom& g : p_.goal) out.goal.push_back(fact(ground_key(g.predicate, g.args)));
        for (const Key& k : init_)
            if (fact_ids.count(k)) out.init.push_back(fact_ids.at(k));
        for (const Key& k : negated)
            if (!init_.count(k)) out.init.push_back(fact(complement(k)));

        out.finalize();
        return out;
    }

    const LiftedDomain& d_;
    const LiftedProblem& p_;
    GroundOptions opts_;

    std::map<std::string, std::string> object_type_;
    std::vector<std::string> objects_;
    std::map<std::string, std::vector<std::string>> by_type_;
    std::unordered_map<std::string, std::pair<bool, int>> schema_;
    std::map<std::string, std::vector<int>> methods_of_;
    std::set<std::string> static_;
    std::unordered_set<Key> init_;
    std::unordered_set<Key> reachable_;

    std::vector<TaskInst> tasks_;
    std::unordered_map<Key, int> task_index_;
    std::vector<MethodInst> methods_;
    std::unordered_map<Key, int> method_index_;
    std::size_t instantiations_ = 0;
};

}  // namespace

Problem ground(const LiftedDomain& d, const LiftedProblem& p, const GroundOptions& opts) {
    return Grounder(d, p, opts).run();
}

}  // namespace htnsat::hddl
