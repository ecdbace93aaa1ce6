#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace htnsat::sat {

/// Signed DIMACS literal: +v is variable v true, -v is v false. 0 is invalid.
struct Lit {
    int value = 0;

    static constexpr Lit pos(int var) { return Lit{var}; }
    static constexpr Lit neg(int var) { return Lit{-var}; }
    constexpr int var() const { return value < 0 ? -value : value; }
    constexpr bool positive() const { return value > 0; }
    constexpr Lit operator~() const { return Lit{-value}; }
    auto operator<=>(const Lit&) const = default;
};

using Clause = std::vector<Lit>;

enum class Result { Sat, Unsat, Unknown };

std::string to_string(Result r);

using Deadline = std::chrono::steady_clock::time_point;

/// Solver engine behind a SatSession. Variables are 1-based and dense.
class Backend {
public:
    virtual ~Backend() = default;
    virtual void new_var() = 0;
    /// Literals are distinct-variable-checked by the caller; may be empty.
    virtual void add_clause(std::span<const Lit> clause) = 0;
    virtual Result solve(std::span<const Lit> assumptions, std::optional<Deadline> deadline) = 0;
    virtual bool model_value(int var) const = 0;
    virtual std::uint64_t conflicts() const = 0;
};

struct CdclOptions {
    // 0 keeps pure lowest-index tie-breaking; other values perturb initial activities.
    std::uint64_t seed = 0;
    bool reduce_learnts = true;
};

std::unique_ptr<Backend> make_cdcl(const CdclOptions& opts = {});

/// Incremental solving handle: a monotone clause store plus assumption queries.
class SatSession {
public:
    explicit SatSession(std::unique_ptr<Backend> backend = make_cdcl(), bool keep_clauses = true);

    Lit new_var();
    int num_vars() const { return num_vars_; }
    std::size_t num_clauses() const { return num_clauses_; }

    /// Throws UsageError on literal 0 or an unallocated variable.
    void add_clause(std::span<const Lit> clause);
    void add_clause(std::initializer_list<Lit> clause) { add_clause(std::span<const Lit>(clause.begin(), clause.size())); }

    Result solve(std::span<const Lit> assumptions = {}, std::optional<Deadline> deadline = std::nullopt);
    Result solve(std::initializer_list<Lit> assumptions) {
        return solve(std::span<const Lit>(assumptions.begin(), assumptions.size()));
    }

    /// Model of the last Sat answer.
    bool value(Lit l) const;

    std::uint64_t conflicts() const { return backend_->conflicts(); }

    /// Stored clauses; empty when the session was created with keep_clauses = false.
    const std::vector<Clause>& clauses() const { return store_; }
    void write_dimacs(std::ostream& out) const;

private:
    std::unique_ptr<Backend> backend_;
    bool keep_clauses_;
    int num_vars_ = 0;
    std::size_t num_clauses_ = 0;
    std::vector<Clause> store_;
    bool has_model_ = false;
};

/// Reads DIMACS CNF into a fresh session over the same variable numbering.
void read_dimacs(std::istream& in, SatSession& s);

enum class AmoScheme { Pairwise, Binary, Bimander };
enum class BimanderGroups { Half, Sqrt };

struct AmoConfig {
    AmoScheme scheme = AmoScheme::Pairwise;
    BimanderGroups groups = BimanderGroups::Half;

    /// "pairwise", "binary", "bimander-half" or "bimander-sqrt".
    static AmoConfig parse(const std::string& name);
    std::string name() const;
};

/// Adds clauses satisfiable iff at most one of vars is true. Fewer than two
/// literals is a no-op.
void encode_amo(SatSession& s, std::span<const Lit> vars, const AmoConfig& cfg);

/// Number of commander groups Bimander uses for n literals.
std::size_t bimander_group_count(std::size_t n, BimanderGroups rule);

}  // namespace htnsat::sat
