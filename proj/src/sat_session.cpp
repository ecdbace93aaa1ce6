#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "htnsat/model.hpp"
#include "htnsat/sat.hpp"

namespace htnsat::sat {

std::string to_string(Result r) {
    switch (r) {
        case Result::Sat: return "SAT";
        case Result::Unsat: return "UNSAT";
        case Result::Unknown: return "UNKNOWN";
    }
    return "?";
}

SatSession::SatSession(std::unique_ptr<Backend> backend, bool keep_clauses)
    : backend_(std::move(backend)), keep_clauses_(keep_clauses) {}

Lit SatSession::new_var() {
    backend_->new_var();
    return Lit::pos(++num_vars_);
}

void SatSession::add_clause(std::span<const Lit> clause) {
    for (Lit l : clause)
        if (l.value == 0 || l.var() > num_vars_)
            throw UsageError("clause literal " + std::to_string(l.value) + " uses an unallocated variable");
    backend_->add_clause(clause);
    ++num_clauses_;
    if (keep_clauses_) store_.emplace_back(clause.begin(), clause.end());
}

Result SatSession::solve(std::span<const Lit> assumptions, std::optional<Deadline> deadline) {
    for (Lit l : assumptions)
        if (l.value == 0 || l.var() > num_vars_)
            throw UsageError("assumption " + std::to_string(l.value) + " uses an unallocated variable");
    Result r = backend_->solve(assumptions, deadline);
    has_model_ = r == Result::Sat;
    return r;
}

bool SatSession::value(Lit l) const {
    if (!has_model_) throw UsageError("no model: last solve was not SAT");
    if (l.value == 0 || l.var() > num_vars_) throw UsageError("model query on unallocated variable");
    bool v = backend_->model_value(l.var());
    return l.positive() ? v : !v;
}

void SatSession::write_dimacs(std::ostream& out) const {
    out << "p cnf " << num_vars_ << ' ' << store_.size() << '\n';
    for (const Clause& c : store_) {
        for (Lit l : c) out << l.value << ' ';
        out << "0\n";
    }
}

void read_dimacs(std::istream& in, SatSession& s) {
    std::string line;
    Clause cur;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'c') continue;
        std::istringstream ls(line);
        if (line[0] == 'p') {
            std::string p, cnf;
            int vars = 0;
            ls >> p >> cnf >> vars;
            while (s.num_vars() < vars) s.new_var();
            continue;
        }
        int v;
        while (ls >> v) {
            if (v == 0) {
                s.add_clause(cur);
                cur.clear();
            } else {
                while (s.num_vars() < std::abs(v)) s.new_var();
                cur.push_back(Lit{v});
            }
        }
    }
    if (!cur.empty()) s.add_clause(cur);
}

AmoConfig AmoConfig::parse(const std::string& name) {
    if (name == "pairwise") return {AmoScheme::Pairwise, BimanderGroups::Half};
    if (name == "binary") return {AmoScheme::Binary, BimanderGroups::Half};
    if (name == "bimander-half") return {AmoScheme::Bimander, BimanderGroups::Half};
    if (name == "bimander-sqrt") return {AmoScheme::Bimander, BimanderGroups::Sqrt};
    throw UsageError("unknown AMO scheme '" + name + "'");
}

std::string AmoConfig::name() const {
    switch (scheme) {
        case AmoScheme::Pairwise: return "pairwise";
        case AmoScheme::Binary: return "binary";
        case AmoScheme::Bimander: return groups == BimanderGroups::Half ? "bimander-half" : "bimander-sqrt";
    }
    return "?";
}

namespace {

std::size_t ceil_log2(std::size_t n) {
    std::size_t k = 0;
    while ((std::size_t{1} << k) < n) ++k;
    return k;
}

void pairwise(SatSession& s, std::span<const Lit> vars) {
    for (std::size_t i = 0; i < vars.size(); ++i)
        for (std::size_t j = i + 1; j < vars.size(); ++j) s.add_clause({~vars[i], ~vars[j]});
}

// Literal i of vars (or group i) forces the aux bits to spell i.
void binary_code(SatSession& s, const std::vector<std::vector<Lit>>& groups) {
    const std::size_t k = ceil_log2(groups.size());
    std::vector<Lit> bits;
    for (std::size_t j = 0; j < k; ++j) bits.push_back(s.new_var());
    for (std::size_t i = 0; i < groups.size(); ++i)
        for (Lit x : groups[i])
            for (std::size_t j = 0; j < k; ++j) s.add_clause({~x, ((i >> j) & 1) ? bits[j] : ~bits[j]});
}

}  // namespace

std::size_t bimander_group_count(std::size_t n, BimanderGroups rule) {
    if (rule == BimanderGroups::Half) return (n + 1) / 2;
    auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    while (m * m < n) ++m;
    while (m > 1 && (m - 1) * (m - 1) >= n) --m;
    return m;
}

void encode_amo(SatSession& s, std::span<const Lit> vars, const AmoConfig& cfg) {
    if (vars.size() < 2) return;
    switch (cfg.scheme) {
        case AmoScheme::Pairwise:
            pairwise(s, vars);
            return;
        case AmoScheme::Binary: {
            std::vector<std::vector<Lit>> singletons;
            for (Lit x : vars) singletons.push_back({x});
            binary_code(s, singletons);
            return;
        }
        case AmoScheme::Bimander: {
            const std::size_t m = bimander_group_count(vars.size(), cfg.groups);
            const std::size_t size = (vars.size() + m - 1) / m;
            std::vector<std::vector<Lit>> groups;
            for (std::size_t i = 0; i < vars.size(); i += size)
                groups.emplace_back(vars.begin() + static_cast<std::ptrdiff_t>(i),
                                    vars.begin() + static_cast<std::ptrdiff_t>(std::min(vars.size(), i + size)));
            for (const auto& g : groups) pairwise(s, g);
            binary_code(s, groups);
            return;
        }
    }
}

}  // namespace htnsat::sat
