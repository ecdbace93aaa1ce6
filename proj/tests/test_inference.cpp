#include <gtest/gtest.h>

#include <algorithm>

#include "htnsat/ground_format.hpp"
#include "htnsat/inference.hpp"
#include "oracle.hpp"
#include "toys.hpp"

using namespace htnsat;

namespace {

bool contains(const std::vector<FactId>& v, FactId f) { return std::find(v.begin(), v.end(), f) != v.end(); }

TaskId task(const Problem& p, const std::string& name) { return p.find_task(name)->id; }

constexpr int kDepth = 6;

}  // namespace

TEST(Recursion, TwoMethodsHasNoRecursiveTask) {
    Problem p = support::load_fixture("two_methods");
    RecursionInfo r = compute_recursion(p);
    for (const AbstractTask& t : p.abstracts) EXPECT_FALSE(r.is_recursive(t.id)) << t.name;
}

TEST(Recursion, SelfLoopIsRecursive) {
    Problem p = support::load_fixture("reinsert");
    EXPECT_TRUE(compute_recursion(p).is_recursive(task(p, "T")));
}

TEST(Recursion, TwoCycleMakesBothRecursive) {
    Problem p = read_ground(R"(
action a
task T
task U
task V
method M1 T -> a U
method M2 U -> T
method M3 U -> a
method M4 T -> V
method M5 V -> a
root T
)");
    RecursionInfo r = compute_recursion(p);
    EXPECT_TRUE(r.is_recursive(task(p, "T")));
    EXPECT_TRUE(r.is_recursive(task(p, "U")));
    EXPECT_FALSE(r.is_recursive(task(p, "V")));
    EXPECT_EQ(r.component[task(p, "T")], r.component[task(p, "U")]);
    // Sinks first: V's component precedes the cycle.
    EXPECT_LT(r.component[task(p, "V")], r.component[task(p, "T")]);
}

TEST(PossEffects, TaxiCallMayMoveThePerson) {
    Problem p = support::load_fixture("taxi");
    Inference inf = infer(p);
    const TaskProfile& prof = inf.profiles[p.initial_task];
    EXPECT_TRUE(contains(prof.poss_eff_pos, *p.find_fact("at(p,street1)")));
    EXPECT_TRUE(contains(prof.poss_eff_pos, *p.find_fact("at(p,street2)")));
    EXPECT_TRUE(contains(prof.poss_eff_neg, *p.find_fact("at(p,street3)")));
}

TEST(PossEffects, SingleActionMethodCopiesEffects) {
    Problem p = support::load_fixture("two_methods");
    Inference inf = infer(p);
    const Action& a2 = p.actions[p.find_task("A_2")->id];
    EXPECT_EQ(inf.profiles[task(p, "T_3")].poss_eff_pos, a2.eff_pos);
    EXPECT_EQ(inf.profiles[task(p, "T_3")].poss_eff_neg, a2.eff_neg);
}

TEST(MandPre, SharedFirstActionPrecondition) {
    Problem p = read_ground(R"(
fact f
fact h
action a1 pre: f add: h
action a2 pre: f h
task T
method M1 T -> a1
method M2 T -> a2 a1
root T
)");
    EXPECT_EQ(infer(p).profiles[task(p, "T")].mand_pre, std::vector<FactId>{*p.find_fact("f")});
}

TEST(MandPre, EmptyMethodGivesEmptySet) {
    Problem p = support::load_fixture("empty_method");
    EXPECT_TRUE(infer(p).profiles[task(p, "T")].mand_pre.empty());
}

TEST(MandPre, RecursiveTaskKeepsCommonPrefix) {
    Problem p = read_ground(R"(
fact f
action a pre: f
task T
method M1 T -> a T
method M2 T -> a
root T
)");
    EXPECT_EQ(infer(p).profiles[task(p, "T")].mand_pre, std::vector<FactId>{*p.find_fact("f")});
}

TEST(Mutex, TaxiPersonLocationGroup) {
    Problem p = support::load_fixture("taxi");
    Inference inf = infer(p);
    std::vector<FactId> want{*p.find_fact("at(p,street1)"), *p.find_fact("at(p,street2)"),
                             *p.find_fact("at(p,street3)")};
    std::sort(want.begin(), want.end());
    bool found = false;
    for (const MutexGroup& g : inf.mutexes)
        found = found || std::includes(g.begin(), g.end(), want.begin(), want.end());
    EXPECT_TRUE(found);
}

TEST(Mutex, AddOnlyDomainHasNoGroups) {
    Problem p = read_ground(R"(
fact on(a)
fact on(b)
fact on(c)
action x add: on(a)
action y add: on(b)
action z pre: on(a) add: on(c)
task T
method M T -> x y z
root T
)");
    EXPECT_TRUE(compute_mutex_groups(p).empty());
}

TEST(Mutex, WithoutMutexesSkipsSynthesis) {
    Problem p = support::load_fixture("taxi");
    EXPECT_TRUE(infer(p, false).mutexes.empty());
}

class ToyInference : public ::testing::TestWithParam<std::string> {};

TEST_P(ToyInference, PossEffectsCoverEveryRefinement) {
    Problem p = support::load_fixture(GetParam());
    Inference inf = infer(p);
    for (const AbstractTask& t : p.abstracts) {
        auto refs = support::refinements(p, TaskRef::abstract(t.id), kDepth);
        for (const auto& plan : refs.plans)
            for (ActionId a : plan) {
                for (FactId f : p.actions[a].eff_pos)
                    EXPECT_TRUE(contains(inf.profiles[t.id].poss_eff_pos, f)) << t.display();
                for (FactId f : p.actions[a].eff_neg)
                    EXPECT_TRUE(contains(inf.profiles[t.id].poss_eff_neg, f)) << t.display();
            }
    }
}

TEST_P(ToyInference, MandatoryPreconditionsBlockExecution) {
    Problem p = support::load_fixture(GetParam());
    Inference inf = infer(p);
    auto reach = support::reachable_states(p);
    ASSERT_FALSE(reach.truncated);
    for (const AbstractTask& t : p.abstracts) {
        const auto& mp = inf.profiles[t.id].mand_pre;
        if (mp.empty()) continue;
        auto refs = support::refinements(p, TaskRef::abstract(t.id), kDepth);
        for (const State& s : reach.states)
            for (FactId f : mp) {
                if (s.test(f)) continue;
                for (const auto& plan : refs.plans)
                    EXPECT_FALSE(apply_seq(p, s, plan)) << t.display() << " runs without " << p.facts[f].display();
            }
    }
}

TEST_P(ToyInference, MutexGroupsHoldInReachableStates) {
    Problem p = support::load_fixture(GetParam());
    Inference inf = infer(p);
    auto reach = support::reachable_states(p);
    ASSERT_FALSE(reach.truncated);
    for (const MutexGroup& g : inf.mutexes) {
        EXPECT_GE(g.size(), 2u);
        for (const State& s : reach.states) {
            int n = 0;
            for (FactId f : g) n += s.test(f);
            EXPECT_LE(n, 1);
        }
    }
}

TEST_P(ToyInference, ProfilesAdmitSolutionSubtrees) {
    // Any valid plan's first step respects the root's mandatory preconditions.
    Problem p = support::load_fixture(GetParam());
    Inference inf = infer(p);
    State init = p.initial_state();
    if (support::valid_plans(p, kDepth).empty()) GTEST_SKIP();
    for (FactId f : inf.profiles[p.initial_task].mand_pre) EXPECT_TRUE(init.test(f));
}

namespace {
std::vector<std::string> toy_names() {
    std::vector<std::string> out;
    for (const auto& t : support::toy_suite()) out.push_back(t.name);
    return out;
}
}  // namespace

INSTANTIATE_TEST_SUITE_P(Toys, ToyInference, ::testing::ValuesIn(toy_names()));

TEST(RandomInference, MutexAndProfilesSound) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Problem p = support::random_nonrecursive(seed);
        Inference inf = infer(p);
        auto reach = support::reachable_states(p);
        for (const MutexGroup& g : inf.mutexes)
            for (const State& s : reach.states) {
                int n = 0;
                for (FactId f : g) n += s.test(f);
                ASSERT_LE(n, 1) << "seed " << seed;
            }
        for (const AbstractTask& t : p.abstracts) {
            auto refs = support::refinements(p, TaskRef::abstract(t.id), kDepth);
            for (const auto& plan : refs.plans) {
                for (ActionId a : plan)
                    for (FactId f : p.actions[a].eff_pos) ASSERT_TRUE(contains(inf.profiles[t.id].poss_eff_pos, f));
                for (const State& s : reach.states)
                    for (FactId f : inf.profiles[t.id].mand_pre)
                        if (!s.test(f)) ASSERT_FALSE(apply_seq(p, s, plan)) << "seed " << seed;
            }
        }
    }
}
