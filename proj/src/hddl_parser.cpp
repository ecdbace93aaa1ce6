#include <algorithm>
#include <cctype>
#include <memory>
#include <set>

#include "htnsat/hddl.hpp"

namespace htnsat::hddl {

namespace {

struct SExpr {
    bool is_list = false;
    std::string atom;
    std::vector<SExpr> items;
    int line = 0;

    bool is(std::string_view s) const { return !is_list && atom == s; }
};

class Reader {
public:
    Reader(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

    SExpr read_document() {
        skip_ws();
        if (pos_ >= text_.size()) throw error(line_, "", "empty input");
        SExpr e = read();
        skip_ws();
        if (pos_ < text_.size()) throw error(line_, "", "trailing content after top-level expression");
        return e;
    }

    ParseError error(int line, const std::string& construct, const std::string& msg) const {
        return ParseError(file_, line, construct, msg);
    }

private:
    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    SExpr read() {
        skip_ws();
        if (pos_ >= text_.size()) throw error(line_, "", "unexpected end of input");
        SExpr e;
        e.line = line_;
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            e.is_list = true;
            for (;;) {
                skip_ws();
                if (pos_ >= text_.size()) throw error(e.line, "", "unbalanced parenthesis");
                if (text_[pos_] == ')') {
                    ++pos_;
                    break;
                }
                e.items.push_back(read());
            }
        } else if (c == ')') {
            throw error(line_, "", "unexpected ')'");
        } else {
            std::size_t start = pos_;
            while (pos_ < text_.size()) {
                char d = text_[pos_];
                if (std::isspace(static_cast<unsigned char>(d)) || d == '(' || d == ')' || d == ';') break;
                if (static_cast<unsigned char>(d) < 0x20) throw error(line_, "", "invalid character in input");
                ++pos_;
            }
            e.atom = std::string(text_.substr(start, pos_ - start));
            std::transform(e.atom.begin(), e.atom.end(), e.atom.begin(),
                           [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
        }
        return e;
    }

    std::string_view text_;
    std::string file_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

class Builder {
public:
    explicit Builder(const Reader& r) : reader_(r) {}

    ParseError unsupported(const SExpr& e, const std::string& construct) const {
        return reader_.error(e.line, construct, "unsupported construct");
    }
    ParseError bad(const SExpr& e, const std::string& msg) const { return reader_.error(e.line, "", msg); }

    const std::string& symbol(const SExpr& e) const {
        if (e.is_list) throw bad(e, "expected a symbol");
        return e.atom;
    }

    const SExpr& list(const SExpr& e) const {
        if (!e.is_list) throw bad(e, "expected a list, got '" + e.atom + "'");
        return e;
    }

    // "a b - t c - u d" -> typed names; untyped default to "object".
    std::vector<TypedName> typed_list(const SExpr& e) const {
        std::vector<TypedName> out;
        std::size_t pending = 0;
        const auto& items = list(e).items;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (items[i].is_list) throw bad(items[i], "unexpected list in typed list");
            if (items[i].atom == "-") {
                if (i + 1 >= items.size()) throw bad(items[i], "missing type after '-'");
                if (items[i + 1].is_list) throw unsupported(items[i + 1], "either");
                for (std::size_t k = out.size() - pending; k < out.size(); ++k) out[k].type = items[i + 1].atom;
                pending = 0;
                ++i;
            } else {
                out.push_back({items[i].atom, "object"});
                ++pending;
            }
        }
        return out;
    }

    Atom atom(const SExpr& e) const {
        const auto& l = list(e);
        if (l.items.empty()) throw bad(e, "empty atom");
        Atom a{symbol(l.items[0]), {}};
        for (std::size_t i = 1; i < l.items.size(); ++i) a.args.push_back(symbol(l.items[i]));
        return a;
    }

    Literal literal(const SExpr& e) const {
        const auto& l = list(e);
        if (l.items.empty()) throw bad(e, "empty literal");
        const std::string& head = symbol(l.items[0]);
        if (head == "not") {
            if (l.items.size() != 2) throw bad(e, "'not' takes one argument");
            Literal inner = literal(l.items[1]);
            inner.positive = !inner.positive;
            return inner;
        }
        static const std::set<std::string> connectives{"or", "imply", "forall", "exists", "when", "and",
                                                       "increase", "decrease", "assign", "either"};
        if (connectives.count(head)) throw unsupported(e, head);
        Literal lit{atom(e), true, false};
        if (head == "=") {
            if (lit.atom.args.size() != 2) throw bad(e, "'=' takes two arguments");
            lit.equality = true;
        }
        return lit;
    }

    // (and L...) | L | ()
    std::vector<Literal> conjunction(const SExpr& e) const {
        const auto& l = list(e);
        std::vector<Literal> out;
        if (l.items.empty()) return out;
        if (l.items[0].is("and")) {
            for (std::size_t i = 1; i < l.items.size(); ++i) {
                const SExpr& c = l.items[i];
                if (c.is_list && !c.items.empty() && c.items[0].is("and")) {
                    auto nested = conjunction(c);
                    out.insert(out.end(), nested.begin(), nested.end());
                } else {
                    out.push_back(literal(c));
                }
            }
            return out;
        }
        out.push_back(literal(e));
        return out;
    }

    std::vector<Literal> effects(const SExpr& e) const {
        auto out = conjunction(e);
        for (const Literal& l : out)
            if (l.equality) throw bad(e, "equality is not an effect");
        return out;
    }

    SubtaskCall call(const SExpr& e) const {
        const auto& l = list(e);
        if (l.items.empty()) throw bad(e, "empty subtask");
        // (label (task args)) or (task args)
        if (l.items.size() == 2 && !l.items[0].is_list && l.items[1].is_list) {
            Atom a = atom(l.items[1]);
            return {l.items[0].atom, a.predicate, a.args};
        }
        Atom a = atom(e);
        return {"", a.predicate, a.args};
    }

    std::vector<SubtaskCall> subtask_list(const SExpr& e) const {
        const auto& l = list(e);
        std::vector<SubtaskCall> out;
        if (l.items.empty()) return out;
        if (l.items[0].is("and")) {
            for (std::size_t i = 1; i < l.items.size(); ++i) out.push_back(call(l.items[i]));
            return out;
        }
        out.push_back(call(e));
        return out;
    }

    // Orders `subtasks` by an :ordering clause; rejects anything that is not a total order.
    std::vector<SubtaskCall> apply_ordering(std::vector<SubtaskCall> subtasks, const SExpr* ordering,
                                            const SExpr& where) const {
        if (subtasks.size() <= 1) return subtasks;
        if (!ordering) throw unsupported(where, ":subtasks without total :ordering (partial order)");
        std::vector<std::pair<std::string, std::string>> edges;
        const auto& l = list(*ordering);
        std::vector<const SExpr*> constraints;
        if (!l.items.empty() && l.items[0].is("and")) {
            for (std::size_t i = 1; i < l.items.size(); ++i) constraints.push_back(&l.items[i]);
        } else if (!l.items.empty()) {
            constraints.push_back(ordering);
        }
        for (const SExpr* c : constraints) {
            const auto& cl = list(*c);
            if (cl.items.size() != 3 || !cl.items[0].is("<")) throw unsupported(*c, ":ordering constraint");
            edges.emplace_back(symbol(cl.items[1]), symbol(cl.items[2]));
        }
        // The order is total iff each consecutive pair of the unique topological order is an edge.
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < subtasks.size(); ++i) {
            if (subtasks[i].label.empty()) throw bad(where, "ordered subtasks need labels");
            index[subtasks[i].label] = i;
        }
        std::vector<std::set<std::size_t>> succ(subtasks.size());
        std::vector<int> indeg(subtasks.size(), 0);
        for (auto& [a, b] : edges) {
            auto ia = index.find(a), ib = index.find(b);
            if (ia == index.end() || ib == index.end()) throw bad(*ordering, "ordering refers to unknown subtask");
            if (succ[ia->second].insert(ib->second).second) ++indeg[ib->second];
        }
        std::vector<SubtaskCall> ordered;
        std::vector<bool> done(subtasks.size(), false);
        for (std::size_t step = 0; step < subtasks.size(); ++step) {
            std::vector<std::size_t> ready;
            for (std::size_t i = 0; i < subtasks.size(); ++i)
                if (!done[i] && indeg[i] == 0) ready.push_back(i);
            if (ready.size() != 1) throw unsupported(*ordering, ":ordering (partial order)");
            std::size_t i = ready.front();
            done[i] = true;
            for (std::size_t j : succ[i]) --indeg[j];
            ordered.push_back(subtasks[i]);
        }
        return ordered;
    }

    LiftedDomain domain(const SExpr& root) const {
        const auto& l = list(root);
        if (l.items.size() < 2 || !l.items[0].is("define")) throw bad(root, "expected (define (domain ...) ...)");
        const auto& head = list(l.items[1]);
        if (head.items.size() != 2 || !head.items[0].is("domain")) throw bad(l.items[1], "expected (domain NAME)");
        LiftedDomain d;
        d.name = symbol(head.items[1]);
        for (std::size_t i = 2; i < l.items.size(); ++i) {
            const SExpr& sec = list(l.items[i]);
            if (sec.items.empty()) throw bad(sec, "empty section");
            const std::string& kw = symbol(sec.items[0]);
            if (kw == ":requirements") {
                continue;
            } else if (kw == ":types") {
                SExpr rest;
                rest.is_list = true;
                rest.line = sec.line;
                rest.items.assign(sec.items.begin() + 1, sec.items.end());
                for (const TypedName& t : typed_list(rest)) d.type_parent[t.name] = t.type;
            } else if (kw == ":constants") {
                SExpr rest;
                rest.is_list = true;
                rest.line = sec.line;
                rest.items.assign(sec.items.begin() + 1, sec.items.end());
                auto c = typed_list(rest);
                d.constants.insert(d.constants.end(), c.begin(), c.end());
            } else if (kw == ":predicates") {
                for (std::size_t k = 1; k < sec.items.size(); ++k) {
                    const auto& pl = list(sec.items[k]);
                    if (pl.items.empty()) throw bad(pl, "empty predicate");
                    SExpr rest;
                    rest.is_list = true;
                    rest.line = pl.line;
                    rest.items.assign(pl.items.begin() + 1, pl.items.end());
                    d.predicates.push_back({symbol(pl.items[0]), typed_list(rest)});
                }
            } else if (kw == ":task") {
                d.tasks.push_back(task_decl(sec));
            } else if (kw == ":method") {
                d.methods.push_back(method_decl(sec));
            } else if (kw == ":action") {
                d.actions.push_back(action_decl(sec));
            } else {
                throw unsupported(sec, kw);
            }
        }
        check_domain(d);
        return d;
    }

    TaskDecl task_decl(const SExpr& sec) const {
        if (sec.items.size() < 2) throw bad(sec, "task without name");
        TaskDecl t{symbol(sec.items[1]), {}, sec.line};
        for (std::size_t k = 2; k + 1 < sec.items.size(); k += 2) {
            const std::string& key = symbol(sec.items[k]);
            if (key == ":parameters") t.params = typed_list(sec.items[k + 1]);
            else throw unsupported(sec.items[k], key);
        }
        return t;
    }

    ActionDecl action_decl(const SExpr& sec) const {
        if (sec.items.size() < 2) throw bad(sec, "action without name");
        ActionDecl a{symbol(sec.items[1]), {}, {}, {}, sec.line};
        for (std::size_t k = 2; k + 1 < sec.items.size(); k += 2) {
            const std::string& key = symbol(sec.items[k]);
            if (key == ":parameters") a.params = typed_list(sec.items[k + 1]);
            else if (key == ":precondition") a.precond = conjunction(sec.items[k + 1]);
            else if (key == ":effect") a.effects = effects(sec.items[k + 1]);
            else throw unsupported(sec.items[k], key);
        }
        return a;
    }

    MethodDecl method_decl(const SExpr& sec) const {
        if (sec.items.size() < 2) throw bad(sec, "method without name");
        MethodDecl m;
        m.name = symbol(sec.items[1]);
        m.line = sec.line;
        std::vector<SubtaskCall> subtasks;
        bool ordered = false, have_task = false;
        const SExpr* ordering = nullptr;
        for (std::size_t k = 2; k + 1 < sec.items.size(); k += 2) {
            const std::string& key = symbol(sec.items[k]);
            const SExpr& val = sec.items[k + 1];
            if (key == ":parameters") {
                m.params = typed_list(val);
            } else if (key == ":task") {
                Atom a = atom(val);
                m.task = a.predicate;
                m.task_args = a.args;
                have_task = true;
            } else if (key == ":precondition") {
                auto pre = conjunction(val);
                m.precond.insert(m.precond.end(), pre.begin(), pre.end());
            } else if (key == ":constraints") {
                auto cons = conjunction(val);
                for (const Literal& c : cons)
                    if (!c.equality) throw unsupported(val, ":constraints (non-equality)");
                m.precond.insert(m.precond.end(), cons.begin(), cons.end());
            } else if (key == ":ordered-subtasks" || key == ":ordered-tasks") {
                subtasks = subtask_list(val);
                ordered = true;
            } else if (key == ":subtasks" || key == ":tasks") {
                subtasks = subtask_list(val);
            } else if (key == ":ordering") {
                ordering = &val;
            } else {
                throw unsupported(sec.items[k], key);
            }
        }
        if (!have_task) throw bad(sec, "method " + m.name + " has no :task");
        if (ordered) {
            if (ordering && !list(*ordering).items.empty()) throw unsupported(*ordering, ":ordering");
            m.subtasks = std::move(subtasks);
        } else {
            m.subtasks = apply_ordering(std::move(subtasks), ordering, sec);
        }
        return m;
    }

    void check_domain(const LiftedDomain& d) const {
        std::set<std::string> tasks;
        for (const TaskDecl& t : d.tasks) tasks.insert(t.name);
        std::set<std::string> actions;
        for (const ActionDecl& a : d.actions) actions.insert(a.name);
        for (const MethodDecl& m : d.methods) {
            if (!tasks.count(m.task))
                throw reader_.error(m.line, m.name, "method decomposes undeclared task " + m.task);
            for (const SubtaskCall& c : m.subtasks)
                if (!tasks.count(c.task) && !actions.count(c.task))
                    throw reader_.error(m.line, m.name, "subtask refers to undeclared task " + c.task);
        }
    }

    LiftedProblem problem(const SExpr& root) const {
        const auto& l = list(root);
        if (l.items.size() < 2 || !l.items[0].is("define")) throw bad(root, "expected (define (problem ...) ...)");
        const auto& head = list(l.items[1]);
        if (head.items.size() != 2 || !head.items[0].is("problem")) throw bad(l.items[1], "expected (problem NAME)");
        LiftedProblem p;
        p.name = symbol(head.items[1]);
        for (std::size_t i = 2; i < l.items.size(); ++i) {
            const SExpr& sec = list(l.items[i]);
            if (sec.items.empty()) throw bad(sec, "empty section");
            const std::string& kw = symbol(sec.items[0]);
            if (kw == ":domain") {
                p.domain = symbol(sec.items.at(1));
            } else if (kw == ":requirements") {
                continue;
            } else if (kw == ":objects") {
                SExpr rest;
                rest.is_list = true;
                rest.line = sec.line;
                rest.items.assign(sec.items.begin() + 1, sec.items.end());
                p.objects = typed_list(rest);
            } else if (kw == ":htn") {
                std::vector<SubtaskCall> subtasks;
                const SExpr* ordering = nullptr;
                bool ordered = false;
                for (std::size_t k = 1; k + 1 < sec.items.size(); k += 2) {
                    const std::string& key = symbol(sec.items[k]);
                    const SExpr& val = sec.items[k + 1];
                    if (key == ":parameters") {
                        if (!list(val).items.empty()) throw unsupported(val, ":htn :parameters");
                    } else if (key == ":ordered-subtasks" || key == ":ordered-tasks") {
                        subtasks = subtask_list(val);
                        ordered = true;
                    } else if (key == ":subtasks" || key == ":tasks") {
                        subtasks = subtask_list(val);
                    } else if (key == ":ordering") {
                        ordering = &val;
                    } else {
                        throw unsupported(sec.items[k], key);
                    }
                }
                p.initial_tasks = ordered ? std::move(subtasks) : apply_ordering(std::move(subtasks), ordering, sec);
            } else if (kw == ":init") {
                for (std::size_t k = 1; k < sec.items.size(); ++k) {
                    Literal lit = literal(sec.items[k]);
                    if (!lit.positive || lit.equality) throw unsupported(sec.items[k], ":init (non-atomic)");
                    p.init.push_back(lit.atom);
                }
            } else if (kw == ":goal") {
                if (sec.items.size() != 2) throw bad(sec, ":goal takes one formula");
                for (const Literal& lit : conjunction(sec.items[1])) {
                    if (!lit.positive || lit.equality) throw unsupported(sec.items[1], ":goal (negative)");
                    p.goal.push_back(lit.atom);
                }
            } else {
                throw unsupported(sec, kw);
            }
        }
        if (p.initial_tasks.empty()) throw bad(root, "problem has no initial task network (:htn)");
        return p;
    }

private:
    const Reader& reader_;
};

}  // namespace

std::pair<LiftedDomain, LiftedProblem> parse(std::string_view domain_text, std::string_view problem_text,
                                             const std::string& domain_file, const std::string& problem_file) {
    Reader dr(domain_text, domain_file);
    SExpr droot = dr.read_document();
    LiftedDomain d = Builder(dr).domain(droot);
    Reader pr(problem_text, problem_file);
    SExpr proot = pr.read_document();
    LiftedProblem p = Builder(pr).problem(proot);
    return {std::move(d), std::move(p)};
}

Problem load(std::string_view domain_text, std::string_view problem_text, const std::string& domain_file,
             const std::string& problem_file, const GroundOptions& opts) {
    auto [d, p] = parse(domain_text, problem_text, domain_file, problem_file);
    return ground(d, p, opts);
}

}  // namespace htnsat::hddl
