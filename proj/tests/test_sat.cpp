#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "htnsat/model.hpp"
#include "htnsat/sat.hpp"
#include "oracle.hpp"

using namespace htnsat;
using namespace htnsat::sat;

namespace {

std::vector<Clause> random_3cnf(std::mt19937_64& rng, int n) {
    const int m = static_cast<int>(std::lround(4.26 * n));
    std::vector<Clause> out;
    std::uniform_int_distribution<int> var(1, n);
    std::bernoulli_distribution sign(0.5);
    for (int i = 0; i < m; ++i) {
        Clause c;
        while (c.size() < 3) {
            int v = var(rng);
            bool dup = false;
            for (Lit l : c) dup = dup || l.var() == v;
            if (!dup) c.push_back(sign(rng) ? Lit::pos(v) : Lit::neg(v));
        }
        out.push_back(c);
    }
    return out;
}

// Distinct assignments of vars over all models, found by blocking clauses on vars.
std::size_t projected_models(SatSession& s, const std::vector<Lit>& vars) {
    std::size_t count = 0;
    while (s.solve() == Result::Sat) {
        EXPECT_TRUE(support::model_satisfies(s));
        ++count;
        Clause block;
        for (Lit v : vars) block.push_back(s.value(v) ? ~v : v);
        s.add_clause(block);
        if (count > 1000) break;
    }
    return count;
}

const std::vector<AmoConfig> kAllSchemes{
    {AmoScheme::Pairwise, BimanderGroups::Half},
    {AmoScheme::Binary, BimanderGroups::Half},
    {AmoScheme::Bimander, BimanderGroups::Half},
    {AmoScheme::Bimander, BimanderGroups::Sqrt},
};

}  // namespace

TEST(NewVar, FreshAndIncreasing) {
    SatSession s;
    Lit a = s.new_var();
    EXPECT_EQ(a.value, 1);
    Lit b = s.new_var();
    EXPECT_NE(a, b);
    s.add_clause({a, b});
    Lit c = s.new_var();
    EXPECT_EQ(c.value, 3);
    EXPECT_EQ(s.num_vars(), 3);
}

TEST(AddClause, ContradictoryUnitsAreUnsat) {
    SatSession s;
    Lit x = s.new_var();
    s.add_clause({x});
    s.add_clause({~x});
    EXPECT_EQ(s.solve(), Result::Unsat);
}

TEST(AddClause, TautologyAccepted) {
    SatSession s;
    Lit x = s.new_var();
    s.add_clause({x, ~x});
    EXPECT_EQ(s.solve(), Result::Sat);
}

TEST(AddClause, UnitPropagatesInNextSolve) {
    SatSession s;
    Lit x = s.new_var(), y = s.new_var();
    s.add_clause({~x, y});
    EXPECT_EQ(s.solve(), Result::Sat);
    s.add_clause({x});
    ASSERT_EQ(s.solve(), Result::Sat);
    EXPECT_TRUE(s.value(y));
}

TEST(AddClause, UnallocatedVariableIsUsageError) {
    SatSession s;
    s.new_var();
    EXPECT_THROW(s.add_clause({Lit::pos(2)}), UsageError);
    EXPECT_THROW(s.add_clause({Lit{0}}), UsageError);
}

TEST(Solve, AssumptionForcesOther) {
    SatSession s;
    Lit x = s.new_var(), y = s.new_var();
    s.add_clause({x, y});
    ASSERT_EQ(s.solve({~x}), Result::Sat);
    EXPECT_FALSE(s.value(x));
    EXPECT_TRUE(s.value(y));
}

TEST(Solve, UnitChainUnderAssumptionIsUnsat) {
    SatSession s;
    Lit x = s.new_var(), y = s.new_var();
    s.add_clause({x});
    s.add_clause({~x, y});
    EXPECT_EQ(s.solve({~y}), Result::Unsat);
    // A failed assumption does not poison the store.
    EXPECT_EQ(s.solve(), Result::Sat);
}

TEST(Solve, ValueWithoutModelThrows) {
    SatSession s;
    Lit x = s.new_var();
    EXPECT_THROW(s.value(x), UsageError);
}

TEST(Solve, ExpiredDeadlineReturnsUnknownOrAnswer) {
    std::mt19937_64 rng(7);
    SatSession s;
    for (int i = 0; i < 60; ++i) s.new_var();
    for (const Clause& c : random_3cnf(rng, 60)) s.add_clause(c);
    Result r = s.solve({}, std::chrono::steady_clock::now() - std::chrono::seconds(1));
    EXPECT_TRUE(r == Result::Unknown || r == Result::Sat || r == Result::Unsat);
}

TEST(Solve, AgreesWithTruthTableOnRandom3Cnf) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nvars(5, 20);
    int sat_count = 0;
    for (int inst = 0; inst < 500; ++inst) {
        int n = nvars(rng);
        auto clauses = random_3cnf(rng, n);
        SatSession s(make_cdcl({static_cast<std::uint64_t>(inst), true}));
        for (int i = 0; i < n; ++i) s.new_var();
        for (const Clause& c : clauses) s.add_clause(c);
        Result r = s.solve();
        bool expected = support::truth_table_sat(n, clauses);
        ASSERT_EQ(r == Result::Sat, expected) << "instance " << inst;
        if (r == Result::Sat) {
            ++sat_count;
            EXPECT_TRUE(support::model_satisfies(s));
        }
    }
    // Near the phase transition both verdicts occur.
    EXPECT_GT(sat_count, 50);
    EXPECT_LT(sat_count, 450);
}

TEST(Solve, IncrementalMatchesFreshSolver) {
    std::mt19937_64 rng(99);
    for (int inst = 0; inst < 60; ++inst) {
        const int n = 12;
        auto clauses = random_3cnf(rng, n);
        SatSession s;
        for (int i = 0; i < n; ++i) s.new_var();
        std::vector<Clause> so_far;
        std::uniform_int_distribution<int> var(1, n);
        for (const Clause& c : clauses) {
            s.add_clause(c);
            so_far.push_back(c);
            if (so_far.size() % 8 != 0) continue;
            Lit a = Lit::pos(var(rng));
            auto with_assumption = so_far;
            with_assumption.push_back({a});
            Result r = s.solve({a});
            ASSERT_EQ(r == Result::Sat, support::truth_table_sat(n, with_assumption));
            if (r == Result::Sat) {
                EXPECT_TRUE(s.value(a));
                EXPECT_TRUE(support::model_satisfies(s));
            }
        }
    }
}

TEST(Solve, DeterministicForFixedSeed) {
    std::mt19937_64 rng(5);
    auto clauses = random_3cnf(rng, 20);
    std::vector<bool> first;
    for (int run = 0; run < 2; ++run) {
        SatSession s(make_cdcl({42, true}));
        for (int i = 0; i < 20; ++i) s.new_var();
        for (const Clause& c : clauses) s.add_clause(c);
        if (s.solve() != Result::Sat) GTEST_SKIP() << "instance unsat";
        std::vector<bool> model;
        for (int v = 1; v <= 20; ++v) model.push_back(s.value(Lit::pos(v)));
        if (run == 0) first = model;
        else EXPECT_EQ(first, model);
    }
}

TEST(Amo, PairwiseThreeVarsThreeClauses) {
    SatSession s;
    std::vector<Lit> v{s.new_var(), s.new_var(), s.new_var()};
    encode_amo(s, v, {AmoScheme::Pairwise, BimanderGroups::Half});
    EXPECT_EQ(s.num_clauses(), 3u);
    EXPECT_EQ(s.num_vars(), 3);
}

TEST(Amo, BinaryFourVars) {
    SatSession s;
    std::vector<Lit> v{s.new_var(), s.new_var(), s.new_var(), s.new_var()};
    encode_amo(s, v, {AmoScheme::Binary, BimanderGroups::Half});
    EXPECT_EQ(s.num_clauses(), 8u);
    EXPECT_EQ(s.num_vars(), 6);
}

TEST(Amo, FewerThanTwoIsNoOp) {
    SatSession s;
    std::vector<Lit> v{s.new_var()};
    for (const AmoConfig& cfg : kAllSchemes) encode_amo(s, v, cfg);
    encode_amo(s, {}, kAllSchemes[1]);
    EXPECT_EQ(s.num_clauses(), 0u);
}

TEST(Amo, BimanderGroupRules) {
    EXPECT_EQ(bimander_group_count(8, BimanderGroups::Half), 4u);
    EXPECT_EQ(bimander_group_count(9, BimanderGroups::Sqrt), 3u);
    EXPECT_EQ(bimander_group_count(2, BimanderGroups::Sqrt), 2u);
    EXPECT_EQ(bimander_group_count(7, BimanderGroups::Half), 4u);
}

TEST(Amo, ConfigNamesRoundTrip) {
    for (const char* n : {"pairwise", "binary", "bimander-half", "bimander-sqrt"})
        EXPECT_EQ(AmoConfig::parse(n).name(), n);
    EXPECT_THROW(AmoConfig::parse("ladder"), UsageError);
}

TEST(Amo, ProjectedModelCountIsNPlusOne) {
    for (const AmoConfig& cfg : kAllSchemes)
        for (int n = 2; n <= 8; ++n) {
            SatSession s;
            std::vector<Lit> v;
            for (int i = 0; i < n; ++i) v.push_back(s.new_var());
            encode_amo(s, v, cfg);
            EXPECT_EQ(projected_models(s, v), static_cast<std::size_t>(n + 1)) << cfg.name() << " n=" << n;
        }
}

TEST(Dimacs, WriteThenReadPreservesVerdicts) {
    std::mt19937_64 rng(11);
    for (int inst = 0; inst < 20; ++inst) {
        auto clauses = random_3cnf(rng, 10);
        SatSession a;
        for (int i = 0; i < 10; ++i) a.new_var();
        for (const Clause& c : clauses) a.add_clause(c);
        std::stringstream buf;
        a.write_dimacs(buf);
        SatSession b;
        read_dimacs(buf, b);
        EXPECT_EQ(b.num_vars(), 10);
        EXPECT_EQ(b.num_clauses(), clauses.size());
        EXPECT_EQ(a.solve(), b.solve());
    }
}
