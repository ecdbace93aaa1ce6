#include <algorithm>
#include <map>
#include <sstream>

#include "htnsat/cli.hpp"
#include "htnsat/ground_format.hpp"

namespace htnsat {

namespace {

std::string spaced(const std::string& name, const std::vector<std::string>& args) {
    std::string out = name;
    for (const std::string& a : args) out += " " + a;
    return out;
}

}  // namespace

std::string write_plan(const Problem& p, const DecompositionTree& dt) {
    std::vector<int> id(dt.nodes.size(), -1);
    std::vector<int> primitive, abstract;
    std::vector<int> stack{dt.root};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        const DtNode& node = dt.nodes[n];
        if (node.task.is_primitive()) {
            if (!p.actions[node.task.id].is_guard) primitive.push_back(n);
            continue;
        }
        abstract.push_back(n);
        for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
    }
    int next = 0;
    for (int n : primitive) id[n] = next++;
    for (int n : abstract) id[n] = next++;

    std::ostringstream out;
    out << "==>\n";
    for (int n : primitive) {
        const Action& a = p.actions[dt.nodes[n].task.id];
        out << id[n] << " (" << spaced(a.name, a.args) << ")\n";
    }
    out << "root " << id[dt.root] << '\n';
    for (int n : abstract) {
        const DtNode& node = dt.nodes[n];
        const AbstractTask& t = p.abstracts[node.task.id];
        out << id[n] << ' ' << spaced(t.name, t.args) << " ->";
        if (node.method) out << ' ' << p.methods[*node.method].display();
        for (int c : node.children)
            if (id[c] >= 0) out << ' ' << id[c];
        out << '\n';
    }
    out << "<==\n";
    return out.str();
}

DecompositionTree parse_plan(const Problem& p, std::string_view text, const std::string& origin) {
    struct Pending {
        int line;
        TaskRef task;
        std::string method;
        std::vector<int> children;
    };
    std::map<int, Pending> entries;
    std::optional<int> root;
    bool open = false, closed = false;

    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto hash = line.find(';'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "==>") {
            open = true;
            continue;
        }
        if (tok[0] == "<==") {
            closed = true;
            break;
        }
        if (!open) continue;
        if (tok[0] == "root") {
            if (tok.size() != 2) throw ParseError(origin, lineno, "root", "expected: root ID");
            root = std::stoi(tok[1]);
            continue;
        }
        int id;
        try {
            id = std::stoi(tok[0]);
        } catch (const std::exception&) {
            throw ParseError(origin, lineno, tok[0], "expected a node id");
        }
        if (entries.count(id)) throw ParseError(origin, lineno, tok[0], "duplicate node id");
        auto arrow = std::find(tok.begin(), tok.end(), "->");
        std::vector<std::string> name_tokens(tok.begin() + 1, arrow);
        if (name_tokens.empty()) throw ParseError(origin, lineno, tok[0], "missing task name");
        if (name_tokens.front().front() == '(') name_tokens.front().erase(0, 1);
        if (!name_tokens.back().empty() && name_tokens.back().back() == ')') name_tokens.back().pop_back();
        if (name_tokens.front().empty()) name_tokens.erase(name_tokens.begin());
        if (!name_tokens.empty() && name_tokens.back().empty()) name_tokens.pop_back();
        if (name_tokens.empty()) throw ParseError(origin, lineno, tok[0], "missing task name");
        std::vector<std::string> args(name_tokens.begin() + 1, name_tokens.end());
        std::string display = format_signature(name_tokens.front(), args);
        auto task = p.find_task(display);
        if (!task) throw ParseError(origin, lineno, display, "unknown task");
        Pending e{lineno, *task, "", {}};
        if (arrow != tok.end()) {
            if (task->is_primitive()) throw ParseError(origin, lineno, display, "primitive task with a method");
            if (arrow + 1 == tok.end()) throw ParseError(origin, lineno, display, "missing method name");
            e.method = *(arrow + 1);
            for (auto it = arrow + 2; it != tok.end(); ++it) {
                try {
                    e.children.push_back(std::stoi(*it));
                } catch (const std::exception&) {
                    throw ParseError(origin, lineno, *it, "expected a child id");
                }
            }
        } else if (task->is_abstract()) {
            throw ParseError(origin, lineno, display, "abstract task without a method");
        }
        entries.emplace(id, std::move(e));
    }
    if (!open || !closed) throw ParseError(origin, lineno, "", "missing ==> / <== delimiters");
    if (!root) throw ParseError(origin, lineno, "root", "missing root line");

    DecompositionTree dt;
    std::map<int, int> index;
    for (const auto& [id, e] : entries) {
        index[id] = static_cast<int>(dt.nodes.size());
        dt.nodes.push_back(DtNode{e.task, std::nullopt, {}});
    }
    if (!index.count(*root)) throw ParseError(origin, 0, "root", "root id has no line");
    dt.root = index.at(*root);

    for (const auto& [id, e] : entries) {
        if (e.task.is_primitive()) continue;
        const int n = index.at(id);
        std::vector<int> kids;
        for (int c : e.children) {
            if (!index.count(c)) throw ParseError(origin, e.line, std::to_string(c), "unknown child id");
            kids.push_back(index.at(c));
        }
        // Resolve the method: exact display, else by name and children with a restored guard.
        std::optional<MethodId> method = p.find_method(e.method);
        auto fits = [&](MethodId m) {
            const Method& mm = p.methods[m];
            std::size_t offset = 0;
            if (!mm.subtasks.empty() && mm.subtasks[0].is_primitive() && p.actions[mm.subtasks[0].id].is_guard &&
                mm.subtasks.size() == kids.size() + 1)
                offset = 1;
            if (mm.subtasks.size() != kids.size() + offset) return false;
            for (std::size_t i = 0; i < kids.size(); ++i)
                if (dt.nodes[kids[i]].task != mm.subtasks[i + offset]) return false;
            return true;
        };
        if (!method) {
            for (MethodId m : p.abstracts[e.task.id].methods)
                if (p.methods[m].name == e.method && fits(m)) {
                    method = m;
                    break;
                }
        }
        if (!method) throw ParseError(origin, e.line, e.method, "unknown method");
        const Method& mm = p.methods[*method];
        if (!mm.subtasks.empty() && mm.subtasks[0].is_primitive() && p.actions[mm.subtasks[0].id].is_guard &&
            mm.subtasks.size() == kids.size() + 1) {
            int guard = static_cast<int>(dt.nodes.size());
            dt.nodes.push_back(DtNode{mm.subtasks[0], std::nullopt, {}});
            kids.insert(kids.begin(), guard);
        }
        dt.nodes[n].method = *method;
        dt.nodes[n].children = std::move(kids);
    }
    return dt;
}

}  // namespace htnsat
