#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace htnsat {

using FactId = int;
using ActionId = int;
using TaskId = int;
using MethodId = int;

/// Thrown when a caller violates an API precondition (bad id, bad flag value).
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an internal consistency check fails; always a bug.
struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

enum class TaskKind : std::uint8_t { Primitive, Abstract };

struct TaskRef {
    TaskKind kind = TaskKind::Primitive;
    int id = -1;

    static constexpr TaskRef primitive(ActionId a) { return {TaskKind::Primitive, a}; }
    static constexpr TaskRef abstract(TaskId t) { return {TaskKind::Abstract, t}; }
    constexpr bool is_primitive() const { return kind == TaskKind::Primitive; }
    constexpr bool is_abstract() const { return kind == TaskKind::Abstract; }

    auto operator<=>(const TaskRef&) const = default;
};

/// Fixed-size bitset over fact ids.
class State {
public:
    State() = default;
    explicit State(std::size_t num_facts)
        : size_(num_facts), words_((num_facts + 63) / 64, 0) {}

    std::size_t size() const { return size_; }
    bool test(FactId f) const { return (words_[f >> 6] >> (f & 63)) & 1u; }
    void set(FactId f) { words_[f >> 6] |= (std::uint64_t{1} << (f & 63)); }
    void reset(FactId f) { words_[f >> 6] &= ~(std::uint64_t{1} << (f & 63)); }
    void assign(FactId f, bool v) { v ? set(f) : reset(f); }

    bool contains_all(std::span<const FactId> facts) const {
        for (FactId f : facts)
            if (!test(f)) return false;
        return true;
    }
    std::size_t count() const;
    std::vector<FactId> facts() const;

    bool operator==(const State&) const = default;

    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

struct StateHash {
    std::size_t operator()(const State& s) const noexcept;
};

struct Fact {
    FactId id = -1;
    std::string predicate;
    std::vector<std::string> args;

    std::string display() const;
};

struct Action {
    ActionId id = -1;
    std::string name;
    std::vector<std::string> args;
    std::vector<FactId> precond;
    std::vector<FactId> eff_pos;
    std::vector<FactId> eff_neg;
    // Zero-effect action standing in for a method precondition.
    bool is_guard = false;

    std::string display() const;
};

struct AbstractTask {
    TaskId id = -1;
    std::string name;
    std::vector<std::string> args;
    std::vector<MethodId> methods;

    std::string display() const;
};

struct Method {
    MethodId id = -1;
    std::string name;
    std::vector<std::string> args;
    TaskId task = -1;
    std::vector<TaskRef> subtasks;

    std::string display() const;
};

/// A ground totally-ordered HTN problem (L, C, O, M, c_I, s_I, g) with dense ids.
///
/// Build by filling the vectors and calling finalize(), which normalizes effect
/// sets (a fact both added and deleted stays an add), sorts id lists, checks all
/// cross references and builds the name indices.
class Problem {
public:
    std::vector<Fact> facts;
    std::vector<Action> actions;
    std::vector<AbstractTask> abstracts;
    std::vector<Method> methods;
    TaskId initial_task = -1;
    std::vector<FactId> init;
    std::vector<FactId> goal;

    void finalize();

    std::size_t num_facts() const { return facts.size(); }
    State initial_state() const;

    std::string display(TaskRef t) const;
    std::optional<FactId> find_fact(const std::string& display) const;
    std::optional<TaskRef> find_task(const std::string& display) const;
    std::optional<MethodId> find_method(const std::string& display) const;

private:
    std::unordered_map<std::string, FactId> fact_index_;
    std::unordered_map<std::string, TaskRef> task_index_;
    std::unordered_map<std::string, MethodId> method_index_;
};

/// gamma(s, a): nullopt when precond(a) is not a subset of s.
std::optional<State> apply(const Problem& p, const State& s, ActionId a);

/// Left fold of apply over a plan; nullopt as soon as a step is undefined.
std::optional<State> apply_seq(const Problem& p, State s, std::span<const ActionId> plan);

bool is_goal(const Problem& p, const State& s);

/// Formats "name(a,b)" or "name" when there are no arguments.
std::string format_signature(const std::string& name, const std::vector<std::string>& args);

}  // namespace htnsat
