#include <gtest/gtest.h>

#include <json.hpp>

#include "htnsat/ground_format.hpp"
#include "htnsat/planner.hpp"
#include "oracle.hpp"
#include "toys.hpp"

using namespace htnsat;

namespace {

std::vector<std::string> names(const Problem& p, const std::vector<TaskRef>& ts) {
    std::vector<std::string> out;
    for (TaskRef t : ts) out.push_back(p.display(t));
    return out;
}

std::vector<std::string> plan_names(const Problem& p, const std::vector<ActionId>& as) {
    std::vector<std::string> out;
    for (ActionId a : as) out.push_back(p.actions[a].display());
    return out;
}

PlannerConfig with_mode(Mode m) {
    PlannerConfig c;
    c.mode = m;
    c.timeout_seconds = 60;
    return c;
}

}  // namespace

TEST(Greedy, TwoMethodsGreedyTrace) {
    Problem p = support::load_fixture("two_methods");
    PlanResult r = plan(p, with_mode(Mode::Greedy));
    ASSERT_EQ(r.status, PlanStatus::Solved);
    EXPECT_EQ(plan_names(p, r.plan), (std::vector<std::string>{"A_2", "A_1", "A_3"}));
    EXPECT_EQ(r.stats.rounds, 3);
    ASSERT_EQ(r.stats.trace.size(), 3u);
    ASSERT_TRUE(r.stats.trace[0].relaxed_frontier);
    EXPECT_EQ(names(p, *r.stats.trace[0].relaxed_frontier), std::vector<std::string>{"T_root"});
    ASSERT_TRUE(r.stats.trace[1].relaxed_frontier);
    EXPECT_EQ(names(p, *r.stats.trace[1].relaxed_frontier), (std::vector<std::string>{"T_3", "A_1", "T_5"}));
    EXPECT_EQ(r.stats.methods_developed, 5u);
    EXPECT_TRUE(verify(p, *r.tree).empty());
}

TEST(Greedy, PrimitiveOnlyMethodSolvesAfterOneExpansion) {
    Problem p = support::load_fixture("trivial");
    PlanResult r = plan(p, with_mode(Mode::Greedy));
    ASSERT_EQ(r.status, PlanStatus::Solved);
    EXPECT_EQ(r.stats.methods_developed, 1u);
    EXPECT_EQ(r.stats.rounds, 2);
    EXPECT_EQ(r.plan.size(), 1u);
}

TEST(Greedy, ReinsertionSolvesSelfRecursion) {
    Problem p = support::load_fixture("reinsert");
    PlanResult r = plan(p, with_mode(Mode::Greedy));
    ASSERT_EQ(r.status, PlanStatus::Solved);
    EXPECT_EQ(r.stats.reinsertion_rounds, 1);
    EXPECT_EQ(plan_names(p, r.plan), (std::vector<std::string>{"a", "b"}));
    EXPECT_TRUE(verify(p, *r.tree).empty());
}

TEST(Greedy, TowerNeedsNoReinsertion) {
    Problem p = support::load_fixture("tower");
    PlanResult r = plan(p, with_mode(Mode::Greedy));
    ASSERT_EQ(r.status, PlanStatus::Solved);
    EXPECT_EQ(r.stats.reinsertion_rounds, 0);
    EXPECT_TRUE(verify(p, *r.tree).empty());
}

TEST(Greedy, UnsolvableIsReported) {
    Problem p = support::load_fixture("unsolvable");
    EXPECT_EQ(plan(p, with_mode(Mode::Greedy)).status, PlanStatus::Unsolvable);
    EXPECT_EQ(plan(p, with_mode(Mode::Bfs)).status, PlanStatus::Unsolvable);
}

TEST(Greedy, RoundLimitStops) {
    Problem p = support::load_fixture("two_methods");
    PlannerConfig c = with_mode(Mode::Greedy);
    c.max_rounds = 1;
    PlanResult r = plan(p, c);
    EXPECT_EQ(r.status, PlanStatus::RoundLimit);
    EXPECT_EQ(r.stats.rounds, 1);
}

TEST(Greedy, NonPositiveTimeoutIsUsageError) {
    Problem p = support::load_fixture("two_methods");
    PlannerConfig c;
    c.timeout_seconds = 0;
    EXPECT_THROW(plan(p, c), UsageError);
}

TEST(Greedy, TinyTimeoutReportsTimeout) {
    Problem p = support::load_fixture("wide_choice_w16");
    PlannerConfig c = with_mode(Mode::Bfs);
    c.timeout_seconds = 1e-9;
    EXPECT_EQ(plan(p, c).status, PlanStatus::Timeout);
}

TEST(Bfs, SolvesTwoMethodsWithMoreMethods) {
    Problem p = support::load_fixture("two_methods");
    PlanResult r = plan(p, with_mode(Mode::Bfs));
    ASSERT_EQ(r.status, PlanStatus::Solved);
    EXPECT_TRUE(verify(p, *r.tree).empty());
    EXPECT_GE(r.stats.methods_developed, 5u);
}

TEST(Guidance, GreedyDevelopsFewerMethodsOnWideChoice) {
    for (const char* name : {"wide_choice_w4", "wide_choice_w8", "wide_choice_w16"}) {
        Problem p = support::load_fixture(name);
        PlanResult g = plan(p, with_mode(Mode::Greedy));
        PlanResult b = plan(p, with_mode(Mode::Bfs));
        ASSERT_EQ(g.status, PlanStatus::Solved) << name;
        ASSERT_EQ(b.status, PlanStatus::Solved) << name;
        EXPECT_LT(g.stats.methods_developed, b.stats.methods_developed) << name;
    }
}

TEST(Planner, ToySuiteVerdictsAndValidity) {
    for (const auto& toy : support::toy_suite()) {
        Problem p = support::load_fixture(toy.name);
        for (Mode m : {Mode::Greedy, Mode::Bfs}) {
            if (m == Mode::Bfs && toy.recursive && !toy.solvable) continue;
            PlanResult r = plan(p, with_mode(m));
            ASSERT_EQ(r.status == PlanStatus::Solved, toy.solvable) << toy.name;
            if (r.tree) EXPECT_TRUE(verify(p, *r.tree).empty()) << toy.name;
        }
    }
}

TEST(Planner, ConfigurationsAgree) {
    for (const char* name : {"two_methods", "taxi", "tower", "empty_inner", "reinsert"}) {
        Problem p = support::load_fixture(name);
        for (const char* amo : {"pairwise", "binary", "bimander-half", "bimander-sqrt"})
            for (bool mutex : {true, false})
                for (bool prune : {true, false}) {
                    PlannerConfig c = with_mode(Mode::Greedy);
                    c.amo = sat::AmoConfig::parse(amo);
                    c.mutex = mutex;
                    c.mandpre_prune = prune;
                    PlanResult r = plan(p, c);
                    ASSERT_EQ(r.status, PlanStatus::Solved) << name << ' ' << amo;
                    EXPECT_TRUE(verify(p, *r.tree).empty());
                }
    }
}

TEST(Planner, RandomInstancesMatchEnumeration) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Problem p = support::random_nonrecursive(500 + seed);
        // Acyclic task graphs over at most 4 tasks bound every DT's depth by 5.
        bool solvable = !support::valid_plans(p, 5).empty();
        PlanResult g = plan(p, with_mode(Mode::Greedy));
        PlanResult b = plan(p, with_mode(Mode::Bfs));
        EXPECT_EQ(g.status == PlanStatus::Solved, solvable) << write_ground(p);
        EXPECT_EQ(b.status == PlanStatus::Solved, solvable) << write_ground(p);
        if (g.tree) EXPECT_TRUE(verify(p, *g.tree).empty());
    }
}

TEST(Planner, SeedIsDeterministic) {
    Problem p = support::load_fixture("tower");
    PlannerConfig c = with_mode(Mode::Greedy);
    c.seed = 17;
    PlanResult a = plan(p, c), b = plan(p, c);
    EXPECT_EQ(a.plan, b.plan);
    EXPECT_EQ(a.stats.methods_developed, b.stats.methods_developed);
}

TEST(Planner, DotHighlightsSolution) {
    Problem p = support::load_fixture("two_methods");
    PlannerConfig c = with_mode(Mode::Greedy);
    c.want_dot = true;
    PlanResult r = plan(p, c);
    EXPECT_NE(r.dot.find("fillcolor=grey"), std::string::npos);
}

TEST(Planner, CnfSinkSeesGrowingSession) {
    Problem p = support::load_fixture("two_methods");
    PlannerConfig c = with_mode(Mode::Greedy);
    std::vector<std::size_t> sizes;
    c.cnf_sink = [&](const sat::SatSession& s) { sizes.push_back(s.clauses().size()); };
    plan(p, c);
    ASSERT_EQ(sizes.size(), 3u);
    EXPECT_LT(sizes[0], sizes[1]);
    EXPECT_LT(sizes[1], sizes[2]);
}

TEST(Stats, JsonCarriesCounters) {
    Problem p = support::load_fixture("two_methods");
    PlanResult r = plan(p, with_mode(Mode::Greedy));
    auto j = nlohmann::json::parse(stats_json(r.stats, r.status, 0.1, 0.2, r.plan.size()));
    EXPECT_EQ(j["status"], "solved");
    EXPECT_EQ(j["methods_developed"], 5);
    EXPECT_EQ(j["rounds"], 3);
    EXPECT_EQ(j["plan_length"], 3);
}

namespace {

DecompositionTree solved_two_methods(const Problem& p) { return *plan(p, with_mode(Mode::Greedy)).tree; }

bool has_rule(const std::vector<Violation>& v, const std::string& rule) {
    for (const Violation& x : v)
        if (x.rule == rule) return true;
    return false;
}

}  // namespace

TEST(Verify, RejectsMismatchedMethodChild) {
    Problem p = support::load_fixture("two_methods");
    DecompositionTree dt = solved_two_methods(p);
    for (DtNode& n : dt.nodes)
        if (n.task.is_primitive() && p.display(n.task) == "A_1") n.task = *p.find_task("A_0");
    EXPECT_TRUE(has_rule(verify(p, dt), "decomposition"));
}

TEST(Verify, RejectsNonExecutablePlan) {
    Problem p = support::load_fixture("two_methods");
    DecompositionTree dt = solved_two_methods(p);
    // Swap M_4's action for one with an unmet precondition, keeping the labelling consistent.
    Problem q = p;
    q.actions[q.find_task("A_2")->id].precond = {*q.find_fact("w")};
    EXPECT_TRUE(has_rule(verify(q, dt), "executable"));
}

TEST(Verify, RejectsWrongRootAndAbstractLeaf) {
    Problem p = support::load_fixture("two_methods");
    DecompositionTree dt = solved_two_methods(p);
    DecompositionTree wrong_root = dt;
    wrong_root.nodes[wrong_root.root].task = *p.find_task("T_5");
    EXPECT_TRUE(has_rule(verify(p, wrong_root), "root"));
    DecompositionTree leaf = dt;
    for (DtNode& n : leaf.nodes)
        if (n.task.is_abstract() && p.display(n.task) == "T_5") {
            n.method.reset();
            n.children.clear();
        }
    EXPECT_TRUE(has_rule(verify(p, leaf), "primitive"));
}

TEST(Verify, RejectsMissedGoal) {
    Problem p = support::load_fixture("two_methods");
    DecompositionTree dt = solved_two_methods(p);
    Problem q = p;
    q.goal = {*q.find_fact("w")};
    EXPECT_TRUE(has_rule(verify(q, dt), "goal"));
}
