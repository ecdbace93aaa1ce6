#include "htnsat/ground_format.hpp"

#include <sstream>
#include <unordered_map>

namespace htnsat {

ParseError::ParseError(std::string file, int line, std::string construct, const std::string& message)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + message +
                         (construct.empty() ? "" : " [" + construct + "]")),
      file_(std::move(file)),
      line_(line),
      construct_(std::move(construct)) {}

namespace {

struct Line {
    int number;
    std::vector<std::string> tokens;
};

std::pair<std::string, std::vector<std::string>> split_signature(const std::string& token) {
    auto open = token.find('(');
    if (open == std::string::npos || token.back() != ')') return {token, {}};
    std::string name = token.substr(0, open);
    std::vector<std::string> args;
    std::string inner = token.substr(open + 1, token.size() - open - 2);
    std::string cur;
    for (char c : inner) {
        if (c == ',') {
            args.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!inner.empty()) args.push_back(cur);
    return {name, args};
}

}  // namespace

Problem read_ground(std::string_view text, const std::string& origin) {
    std::vector<Line> lines;
    {
        std::istringstream in{std::string(text)};
        std::string raw;
        int n = 0;
        while (std::getline(in, raw)) {
            ++n;
            if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
            std::istringstream ls(raw);
            Line line{n, {}};
            std::string tok;
            while (ls >> tok) line.tokens.push_back(tok);
            if (!line.tokens.empty()) lines.push_back(std::move(line));
        }
    }

    Problem p;
    std::unordered_map<std::string, FactId> facts;
    std::unordered_map<std::string, TaskRef> tasks;

    auto fail = [&](const Line& l, const std::string& msg) -> ParseError {
        return ParseError(origin, l.number, l.tokens.front(), msg);
    };

    // Pass 1: declarations.
    for (const Line& l : lines) {
        const std::string& kw = l.tokens[0];
        if (kw == "fact" || kw == "action" || kw == "task") {
            if (l.tokens.size() < 2) throw fail(l, "missing name");
            const std::string& name = l.tokens[1];
            auto [sym, args] = split_signature(name);
            if (kw == "fact") {
                FactId id = static_cast<FactId>(p.facts.size());
                if (!facts.emplace(name, id).second) throw fail(l, "duplicate fact " + name);
                p.facts.push_back(Fact{id, sym, args});
            } else if (kw == "action") {
                ActionId id = static_cast<ActionId>(p.actions.size());
                if (!tasks.emplace(name, TaskRef::primitive(id)).second) throw fail(l, "duplicate task " + name);
                p.actions.push_back(Action{id, sym, args, {}, {}, {}, false});
            } else {
                TaskId id = static_cast<TaskId>(p.abstracts.size());
                if (!tasks.emplace(name, TaskRef::abstract(id)).second) throw fail(l, "duplicate task " + name);
                p.abstracts.push_back(AbstractTask{id, sym, args, {}});
            }
        } else if (kw != "method" && kw != "root" && kw != "init" && kw != "goal") {
            throw fail(l, "unknown record");
        }
    }

    auto fact_of = [&](const Line& l, const std::string& name) {
        auto it = facts.find(name);
        if (it == facts.end()) throw fail(l, "undeclared fact " + name);
        return it->second;
    };
    auto task_of = [&](const Line& l, const std::string& name) {
        auto it = tasks.find(name);
        if (it == tasks.end()) throw fail(l, "undeclared task " + name);
        return it->second;
    };

    // Pass 2: bodies.
    bool have_root = false;
    ActionId next_action = 0;
    for (const Line& l : lines) {
        const std::string& kw = l.tokens[0];
        if (kw == "action") {
            Action& a = p.actions[next_action++];
            std::vector<FactId>* target = nullptr;
            for (std::size_t i = 2; i < l.tokens.size(); ++i) {
                const std::string& t = l.tokens[i];
                if (t == "guard") a.is_guard = true;
                else if (t == "pre:") target = &a.precond;
                else if (t == "add:") target = &a.eff_pos;
                else if (t == "del:") target = &a.eff_neg;
                else if (!target) throw fail(l, "expected pre:/add:/del: before " + t);
                else target->push_back(fact_of(l, t));
            }
        } else if (kw == "method") {
            if (l.tokens.size() < 4 || l.tokens[3] != "->") throw fail(l, "expected: method NAME TASK -> SUBTASKS");
            auto [sym, args] = split_signature(l.tokens[1]);
            TaskRef task = task_of(l, l.tokens[2]);
            if (!task.is_abstract()) throw fail(l, "method decomposes a primitive task");
            Method m{static_cast<MethodId>(p.methods.size()), sym, args, task.id, {}};
            for (std::size_t i = 4; i < l.tokens.size(); ++i) m.subtasks.push_back(task_of(l, l.tokens[i]));
            p.methods.push_back(std::move(m));
        } else if (kw == "root") {
            if (l.tokens.size() != 2) throw fail(l, "expected: root TASK");
            TaskRef t = task_of(l, l.tokens[1]);
            if (!t.is_abstract()) throw fail(l, "root must be abstract");
            p.initial_task = t.id;
            have_root = true;
        } else if (kw == "init" || kw == "goal") {
            auto& dst = kw == "init" ? p.init : p.goal;
            for (std::size_t i = 1; i < l.tokens.size(); ++i) dst.push_back(fact_of(l, l.tokens[i]));
        }
    }
    if (!have_root) throw ParseError(origin, 0, "root", "missing root record");
    try {
        p.finalize();
    } catch (const UsageError& e) {
        throw ParseError(origin, 0, "", e.what());
    }
    return p;
}

std::string write_ground(const Problem& p) {
    std::ostringstream out;
    for (const Fact& f : p.facts) out << "fact " << f.display() << '\n';
    for (const Action& a : p.actions) {
        out << "action " << a.display();
        if (a.is_guard) out << " guard";
        auto list = [&](const char* kw, const std::vector<FactId>& ids) {
            if (ids.empty()) return;
            out << ' ' << kw;
            for (FactId f : ids) out << ' ' << p.facts[f].display();
        };
        list("pre:", a.precond);
        list("add:", a.eff_pos);
        list("del:", a.eff_neg);
        out << '\n';
    }
    for (const AbstractTask& t : p.abstracts) out << "task " << t.display() << '\n';
    for (const Method& m : p.methods) {
        out << "method " << m.display() << ' ' << p.abstracts[m.task].display() << " ->";
        for (const TaskRef& s : m.subtasks) out << ' ' << p.display(s);
        out << '\n';
    }
    out << "root " << p.abstracts[p.initial_task].display() << '\n';
    out << "init";
    for (FactId f : p.init) out << ' ' << p.facts[f].display();
    out << "\ngoal";
    for (FactId f : p.goal) out << ' ' << p.facts[f].display();
    out << '\n';
    return out.str();
}

}  // namespace htnsat
