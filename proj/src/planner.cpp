#include "htnsat/planner.hpp"

#include <chrono>
#include <json.hpp>
#include <set>

#include "htnsat/inference.hpp"
#include "htnsat/pdt.hpp"

namespace htnsat {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

class Run {
public:
    Run(const Problem& p, const PlannerConfig& cfg)
        : p_(p), cfg_(cfg), start_(Clock::now()),
          deadline_(start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(cfg.timeout_seconds))) {}

    PlanResult go() {
        auto t0 = Clock::now();
        inf_ = infer(p_, cfg_.mutex);
        result_.stats.mutex_groups = inf_.mutexes.size();
        result_.stats.inference_seconds = seconds_since(t0);
        auto t1 = Clock::now();
        if (cfg_.mode == Mode::Greedy) greedy();
        else bfs();
        result_.stats.search_seconds = seconds_since(t1);
        return std::move(result_);
    }

private:
    struct Attempt {
        Pdt pdt;
        sat::SatSession session;
        Encoder encoder;

        Attempt(const Problem& p, const Inference& inf, const PlannerConfig& cfg, bool blocking, int allowance)
            : pdt(p, blocking, allowance),
              session(sat::make_cdcl({cfg.seed, true}), static_cast<bool>(cfg.cnf_sink)),
              encoder(p, inf, session, EncoderConfig{cfg.amo, cfg.mutex, cfg.mandpre_prune}) {}
    };

    bool out_of_time() const { return Clock::now() >= deadline_; }

    bool round_limit_hit() {
        if (cfg_.max_rounds > 0 && result_.stats.rounds >= cfg_.max_rounds) {
            result_.status = PlanStatus::RoundLimit;
            return true;
        }
        return false;
    }

    // Starts a round: encodes pending layers. false on timeout.
    bool begin_round(Attempt& a, RoundTrace& tr) {
        if (out_of_time()) {
            result_.status = PlanStatus::Timeout;
            return false;
        }
        ++result_.stats.rounds;
        a.encoder.encode(a.pdt);
        tr.round = result_.stats.rounds;
        tr.reinsertion = result_.stats.reinsertion_rounds;
        tr.layers = a.encoder.encoded_layers();
        if (cfg_.cnf_sink) cfg_.cnf_sink(a.session);
        return true;
    }

    QueryOutcome query(Attempt& a, bool relaxed) {
        auto t = Clock::now();
        QueryOutcome out = relaxed ? a.encoder.solve_relaxed(a.pdt, deadline_) : a.encoder.solve_solution(a.pdt, deadline_);
        QueryStat qs;
        qs.round = result_.stats.rounds;
        qs.kind = relaxed ? "relaxed" : "solution";
        qs.layer = a.encoder.encoded_layers() - 1;
        qs.vars = a.session.num_vars();
        qs.clauses = a.session.num_clauses();
        qs.verdict = sat::to_string(out.result);
        qs.seconds = seconds_since(t);
        result_.stats.queries.push_back(qs);
        result_.stats.final_vars = qs.vars;
        result_.stats.final_clauses = qs.clauses;
        if (out.result == sat::Result::Unknown) result_.status = PlanStatus::Timeout;
        return out;
    }

    void finish_solved(Attempt& a, DtCandidate& cand) {
        result_.status = PlanStatus::Solved;
        result_.plan = *cand.tree.plan();
        result_.tree = std::move(cand.tree);
        if (cfg_.want_dot) result_.dot = a.pdt.to_dot({cand.pdt_nodes.begin(), cand.pdt_nodes.end()});
    }

    void close_attempt(Attempt& a) {
        result_.stats.methods_developed += a.pdt.methods_developed();
        if (cfg_.want_dot && result_.dot.empty()) result_.dot = a.pdt.to_dot();
    }

    void greedy() {
        for (int allowance = 0;; ++allowance) {
            Attempt a(p_, inf_, cfg_, true, allowance);
            bool exhaustive = false;
            for (;;) {
                RoundTrace tr;
                if (round_limit_hit() || !begin_round(a, tr)) return close_attempt(a);
                tr.exhaustive = exhaustive;
                QueryOutcome sol = query(a, false);
                if (sol.result == sat::Result::Unknown) return close_attempt(a);
                if (sol.result == sat::Result::Sat) {
                    result_.stats.trace.push_back(tr);
                    result_.stats.methods_developed += a.pdt.methods_developed();
                    finish_solved(a, *sol.candidate);
                    return;
                }
                if (!exhaustive) {
                    QueryOutcome rel = query(a, true);
                    if (rel.result == sat::Result::Unknown) return close_attempt(a);
                    if (rel.result == sat::Result::Sat && !rel.candidate->abstract_positions.empty()) {
                        tr.relaxed_frontier = rel.candidate->frontier;
                        std::set<int> targets(rel.candidate->abstract_positions.begin(),
                                              rel.candidate->abstract_positions.end());
                        tr.expanded_positions = targets.size();
                        result_.stats.trace.push_back(tr);
                        std::vector<int> positions(targets.begin(), targets.end());
                        a.pdt.expand_positions(positions);
                        continue;
                    }
                    exhaustive = true;
                }
                if (a.pdt.pending().empty()) {
                    result_.stats.trace.push_back(tr);
                    break;
                }
                std::set<int> positions;
                for (int n : a.pdt.pending()) positions.insert(a.pdt.bottom_position(n));
                tr.expanded_positions = positions.size();
                tr.exhaustive = true;
                result_.stats.trace.push_back(tr);
                a.pdt.expand_all();
            }
            // Blocked fixpoint without a solution.
            bool any_blocked = !a.pdt.blocked().empty();
            close_attempt(a);
            if (!any_blocked) {
                result_.status = PlanStatus::Unsolvable;
                return;
            }
            ++result_.stats.reinsertion_rounds;
            if (cfg_.want_dot) result_.dot.clear();
        }
    }

    void bfs() {
        Attempt a(p_, inf_, cfg_, false, 0);
        for (;;) {
            RoundTrace tr;
            if (round_limit_hit() || !begin_round(a, tr)) return close_attempt(a);
            QueryOutcome sol = query(a, false);
            if (sol.result == sat::Result::Unknown) return close_attempt(a);
            if (sol.result == sat::Result::Sat) {
                result_.stats.trace.push_back(tr);
                result_.stats.methods_developed += a.pdt.methods_developed();
                finish_solved(a, *sol.candidate);
                return;
            }
            if (a.pdt.pending().empty()) {
                result_.stats.trace.push_back(tr);
                close_attempt(a);
                result_.status = PlanStatus::Unsolvable;
                return;
            }
            tr.exhaustive = true;
            result_.stats.trace.push_back(tr);
            a.pdt.expand_all();
        }
    }

    const Problem& p_;
    const PlannerConfig& cfg_;
    Clock::time_point start_;
    Clock::time_point deadline_;
    Inference inf_;
    PlanResult result_;
};

}  // namespace

std::string to_string(PlanStatus s) {
    switch (s) {
        case PlanStatus::Solved: return "solved";
        case PlanStatus::Unsolvable: return "unsolvable";
        case PlanStatus::Timeout: return "timeout";
        case PlanStatus::RoundLimit: return "round-limit";
    }
    return "?";
}

PlanResult plan(const Problem& p, const PlannerConfig& cfg) {
    if (cfg.timeout_seconds <= 0) throw UsageError("timeout must be positive");
    return Run(p, cfg).go();
}

std::string stats_json(const RunStats& s, PlanStatus status, double ground_seconds, double total_seconds,
                       std::optional<std::size_t> plan_length) {
    nlohmann::ordered_json j;
    j["status"] = to_string(status);
    j["methods_developed"] = s.methods_developed;
    j["rounds"] = s.rounds;
    j["reinsertion_rounds"] = s.reinsertion_rounds;
    j["mutex_groups"] = s.mutex_groups;
    j["final_vars"] = s.final_vars;
    j["final_clauses"] = s.final_clauses;
    j["plan_length"] = plan_length ? nlohmann::ordered_json(*plan_length) : nlohmann::ordered_json(nullptr);
    j["ground_seconds"] = ground_seconds;
    j["inference_seconds"] = s.inference_seconds;
    j["search_seconds"] = s.search_seconds;
    j["total_seconds"] = total_seconds;
    auto& qs = j["queries"] = nlohmann::ordered_json::array();
    for (const QueryStat& q : s.queries) {
        qs.push_back({{"round", q.round},
                      {"kind", q.kind},
                      {"layer", q.layer},
                      {"vars", q.vars},
                      {"clauses", q.clauses},
                      {"verdict", q.verdict},
                      {"seconds", q.seconds}});
    }
    return j.dump();
}

std::vector<Violation> verify(const Problem& p, const DecompositionTree& dt) {
    std::vector<Violation> out;
    if (dt.nodes.empty()) {
        out.push_back({"root", "tree is empty"});
        return out;
    }
    if (dt.root < 0 || dt.root >= static_cast<int>(dt.nodes.size())) {
        out.push_back({"root", "root id out of range"});
        return out;
    }
    const DtNode& root = dt.nodes[dt.root];
    if (root.task != TaskRef::abstract(p.initial_task))
        out.push_back({"root", "root is labelled " + (root.task.id >= 0 ? p.display(root.task) : "?") + ", expected " +
                                   p.abstracts[p.initial_task].display()});

    // Structural walk; every node must be reached exactly once.
    std::vector<int> seen(dt.nodes.size(), 0);
    std::vector<int> stack{dt.root};
    std::vector<ActionId> plan;
    bool plan_ok = true;
    std::vector<int> order;
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        if (n < 0 || n >= static_cast<int>(dt.nodes.size())) {
            out.push_back({"decomposition", "child id " + std::to_string(n) + " out of range"});
            plan_ok = false;
            continue;
        }
        if (seen[n]++) {
            out.push_back({"decomposition", "node " + std::to_string(n) + " reached twice"});
            plan_ok = false;
            continue;
        }
        const DtNode& node = dt.nodes[n];
        const std::string where = "node " + std::to_string(n);
        bool valid_ref = node.task.is_primitive() ? node.task.id >= 0 && node.task.id < static_cast<int>(p.actions.size())
                                                  : node.task.id >= 0 && node.task.id < static_cast<int>(p.abstracts.size());
        if (!valid_ref) {
            out.push_back({"decomposition", where + " has an invalid task"});
            plan_ok = false;
            continue;
        }
        if (node.task.is_primitive()) {
            if (node.method || !node.children.empty())
                out.push_back({"decomposition", where + " (" + p.display(node.task) + ") is primitive but decomposed"});
            plan.push_back(node.task.id);
            continue;
        }
        if (!node.method) {
            out.push_back({"primitive", where + " leaves abstract task " + p.display(node.task) + " undecomposed"});
            plan_ok = false;
            continue;
        }
        MethodId m = *node.method;
        if (m < 0 || m >= static_cast<MethodId>(p.methods.size())) {
            out.push_back({"decomposition", where + " uses an invalid method"});
            plan_ok = false;
            continue;
        }
        const Method& method = p.methods[m];
        if (method.task != node.task.id)
            out.push_back({"decomposition", where + ": method " + method.display() + " does not decompose " +
                                                p.display(node.task)});
        if (method.subtasks.size() != node.children.size()) {
            out.push_back({"decomposition", where + ": method " + method.display() + " has " +
                                                std::to_string(method.subtasks.size()) + " subtasks, node has " +
                                                std::to_string(node.children.size()) + " children"});
        } else {
            for (std::size_t i = 0; i < node.children.size(); ++i) {
                int c = node.children[i];
                if (c >= 0 && c < static_cast<int>(dt.nodes.size()) && dt.nodes[c].task != method.subtasks[i])
                    out.push_back({"decomposition", where + ": child " + std::to_string(i) + " is not labelled " +
                                                        p.display(method.subtasks[i])});
            }
        }
        for (auto it = node.children.rbegin(); it != node.children.rend(); ++it) stack.push_back(*it);
    }
    for (std::size_t n = 0; n < dt.nodes.size(); ++n)
        if (!seen[n]) out.push_back({"decomposition", "node " + std::to_string(n) + " is not below the root"});
    if (!plan_ok) return out;

    State s = p.initial_state();
    for (std::size_t i = 0; i < plan.size(); ++i) {
        auto next = apply(p, s, plan[i]);
        if (!next) {
            std::string missing;
            for (FactId f : p.actions[plan[i]].precond)
                if (!s.test(f)) missing += " " + p.facts[f].display();
            out.push_back({"executable", "step " + std::to_string(i) + " " + p.actions[plan[i]].display() +
                                             " is inapplicable; missing" + missing});
            return out;
        }
        s = std::move(*next);
    }
    if (!is_goal(p, s)) {
        std::string missing;
        for (FactId f : p.goal)
            if (!s.test(f)) missing += " " + p.facts[f].display();
        out.push_back({"goal", "final state lacks" + missing});
    }
    return out;
}

}  // namespace htnsat
