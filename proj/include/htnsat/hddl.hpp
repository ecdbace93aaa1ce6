#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "htnsat/ground_format.hpp"
#include "htnsat/model.hpp"

// Totally-ordered HDDL subset: typing, STRIPS actions, ordered methods with
// optional preconditions, equality in preconditions, negative preconditions.
namespace htnsat::hddl {

struct TypedName {
    std::string name;
    std::string type = "object";
};

/// An atom whose arguments are variables ("?x") or constants.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;
};

struct Literal {
    Atom atom;
    bool positive = true;
    // (= a b): atom.args holds the two terms, predicate is "=".
    bool equality = false;
};

struct PredicateDecl {
    std::string name;
    std::vector<TypedName> params;
};

struct TaskDecl {
    std::string name;
    std::vector<TypedName> params;
    int line = 0;
};

struct ActionDecl {
    std::string name;
    std::vector<TypedName> params;
    std::vector<Literal> precond;
    std::vector<Literal> effects;
    int line = 0;
};

struct SubtaskCall {
    std::string label;  // e.g. "t1"; empty when the source omitted it
    std::string task;
    std::vector<std::string> args;
};

struct MethodDecl {
    std::string name;
    std::vector<TypedName> params;
    std::string task;
    std::vector<std::string> task_args;
    std::vector<Literal> precond;
    std::vector<SubtaskCall> subtasks;  // in execution order
    int line = 0;
};

struct LiftedDomain {
    std::string name;
    std::map<std::string, std::string> type_parent;  // type -> supertype ("object" is the root)
    std::vector<TypedName> constants;
    std::vector<PredicateDecl> predicates;
    std::vector<TaskDecl> tasks;
    std::vector<MethodDecl> methods;
    std::vector<ActionDecl> actions;
};

struct LiftedProblem {
    std::string name;
    std::string domain;
    std::vector<TypedName> objects;
    std::vector<Atom> init;
    std::vector<Atom> goal;  // positive facts only; may be empty
    std::vector<SubtaskCall> initial_tasks;
};

/// Parses a domain and a problem. Constructs outside the supported subset raise
/// ParseError naming the file, line and construct.
std::pair<LiftedDomain, LiftedProblem> parse(std::string_view domain_text, std::string_view problem_text,
                                             const std::string& domain_file = "domain.hddl",
                                             const std::string& problem_file = "problem.hddl");

struct GroundingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GroundOptions {
    // Upper bound on enumerated schema bindings before grounding aborts.
    std::size_t max_instantiations = 5'000'000;
};

/// Instantiates the lifted problem, pruning with interleaved delete-relaxed
/// reachability from s_I and decomposition reachability from c_I.
Problem ground(const LiftedDomain& d, const LiftedProblem& p, const GroundOptions& opts = {});

/// parse + ground in one call.
Problem load(std::string_view domain_text, std::string_view problem_text,
             const std::string& domain_file = "domain.hddl", const std::string& problem_file = "problem.hddl",
             const GroundOptions& opts = {});

}  // namespace htnsat::hddl
