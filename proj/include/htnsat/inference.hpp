#pragma once

#include <string>
#include <vector>

#include "htnsat/model.hpp"

namespace htnsat {

/// Strongly connected components of the abstract-task graph (t -> t' when t'
/// is a subtask of some method of t).
struct RecursionInfo {
    std::vector<int> component;                    // per abstract task
    std::vector<std::vector<TaskId>> components;   // sinks first
    std::vector<bool> recursive;                   // per abstract task

    bool is_recursive(TaskId t) const { return recursive[t]; }
};

RecursionInfo compute_recursion(const Problem& p);

struct PossibleEffects {
    std::vector<FactId> pos;
    std::vector<FactId> neg;
};

/// Least fixpoint of the union equations, per abstract task.
std::vector<PossibleEffects> compute_poss_effects(const Problem& p, const RecursionInfo& r);

/// Greatest fixpoint of the first-subtask intersection, per abstract task.
/// Tasks without methods get the full fact set.
std::vector<std::vector<FactId>> compute_mandatory_preconditions(const Problem& p, const RecursionInfo& r);

using MutexGroup = std::vector<FactId>;

/// Inductive at-most-one invariants; every group has at least two facts.
std::vector<MutexGroup> compute_mutex_groups(const Problem& p);

struct TaskProfile {
    TaskId task = -1;
    std::vector<FactId> mand_pre;
    std::vector<FactId> poss_eff_pos;
    std::vector<FactId> poss_eff_neg;
};

struct Inference {
    RecursionInfo recursion;
    std::vector<TaskProfile> profiles;  // indexed by abstract task id
    std::vector<MutexGroup> mutexes;
};

Inference infer(const Problem& p, bool with_mutexes = true);

/// One line per task profile, then one line per mutex group.
std::string dump_profiles(const Problem& p, const Inference& inf);

}  // namespace htnsat
