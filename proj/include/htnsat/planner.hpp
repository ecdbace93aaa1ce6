#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "htnsat/decomposition.hpp"
#include "htnsat/encoder.hpp"
#include "htnsat/model.hpp"
#include "htnsat/sat.hpp"

namespace htnsat {

enum class Mode { Greedy, Bfs };

struct PlannerConfig {
    Mode mode = Mode::Greedy;
    sat::AmoConfig amo;
    bool mutex = true;
    bool mandpre_prune = true;
    int max_rounds = 0;  // 0 = unbounded
    double timeout_seconds = 600;
    std::uint64_t seed = 0;
    bool want_dot = false;
    // Called with the live session after each round's encoding.
    std::function<void(const sat::SatSession&)> cnf_sink;
};

struct QueryStat {
    int round = 0;
    std::string kind;  // "solution" or "relaxed"
    int layer = 0;
    int vars = 0;
    std::size_t clauses = 0;
    std::string verdict;
    double seconds = 0;
};

struct RoundTrace {
    int round = 0;
    int reinsertion = 0;
    int layers = 0;
    bool exhaustive = false;
    // Frontier of the relaxed candidate when the relaxed query ran and was satisfiable.
    std::optional<std::vector<TaskRef>> relaxed_frontier;
    std::size_t expanded_positions = 0;
};

struct RunStats {
    std::size_t methods_developed = 0;
    int rounds = 0;
    int reinsertion_rounds = 0;
    std::vector<QueryStat> queries;
    std::vector<RoundTrace> trace;
    std::size_t mutex_groups = 0;
    int final_vars = 0;
    std::size_t final_clauses = 0;
    double inference_seconds = 0;
    double search_seconds = 0;
};

enum class PlanStatus { Solved, Unsolvable, Timeout, RoundLimit };

std::string to_string(PlanStatus s);

struct PlanResult {
    PlanStatus status = PlanStatus::Unsolvable;
    std::optional<DecompositionTree> tree;
    std::vector<ActionId> plan;
    RunStats stats;
    std::string dot;  // final PDT, solution highlighted; filled when want_dot
};

PlanResult plan(const Problem& p, const PlannerConfig& cfg);

/// One JSON object; wall times included.
std::string stats_json(const RunStats& s, PlanStatus status, double ground_seconds, double total_seconds,
                       std::optional<std::size_t> plan_length);

struct Violation {
    std::string rule;  // root, decomposition, primitive, executable, goal
    std::string message;
};

/// Checks a tree against the problem without any solver state: root label,
/// method/subtask labelling, primitive frontier, executability and the goal.
std::vector<Violation> verify(const Problem& p, const DecompositionTree& dt);

}  // namespace htnsat
