#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "htnsat/ground_format.hpp"
#include "htnsat/hddl.hpp"
#include "toys.hpp"

using namespace htnsat;

namespace {

const char* kMiniDomain = R"(
(define (domain mini)
  (:requirements :typing :hierarchy)
  (:types thing)
  (:predicates (done ?x - thing) (ready ?x - thing))
  (:task go :parameters (?x - thing))
  (:method go-direct
    :parameters (?x - thing)
    :task (go ?x)
    :precondition (and (ready ?x))
    :ordered-subtasks (and (t1 (finish ?x))))
  (:method go-skip
    :parameters (?x - thing)
    :task (go ?x)
    :ordered-subtasks (and))
  (:action finish
    :parameters (?x - thing)
    :precondition (ready ?x)
    :effect (done ?x)))
)";

const char* kMiniProblem = R"(
(define (problem mini-1)
  (:domain mini)
  (:objects P - thing)
  (:htn :subtasks (and (t0 (go P))))
  (:init (ready P))
  (:goal (and (done P))))
)";

std::vector<std::string> method_names(const Problem& p) {
    std::vector<std::string> out;
    for (const Method& m : p.methods) out.push_back(m.display());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(Parse, CountsConstructs) {
    auto [d, p] = hddl::parse(kMiniDomain, kMiniProblem);
    EXPECT_EQ(d.actions.size(), 1u);
    EXPECT_EQ(d.tasks.size(), 1u);
    EXPECT_EQ(d.methods.size(), 2u);
}

TEST(Parse, ReadsInitialTask) {
    auto [d, p] = hddl::parse(kMiniDomain, kMiniProblem);
    ASSERT_EQ(p.initial_tasks.size(), 1u);
    EXPECT_EQ(p.initial_tasks[0].task, "go");
    // Names are case-insensitive and normalized to lower case.
    EXPECT_EQ(p.initial_tasks[0].args, std::vector<std::string>{"p"});
}

TEST(Parse, RecordsMethodPrecondition) {
    auto [d, p] = hddl::parse(kMiniDomain, kMiniProblem);
    ASSERT_EQ(d.methods[0].precond.size(), 1u);
    EXPECT_EQ(d.methods[0].precond[0].atom.predicate, "ready");
    EXPECT_TRUE(d.methods[1].precond.empty());
    EXPECT_TRUE(d.methods[1].subtasks.empty());
}

TEST(Parse, RejectsPartialOrder) {
    std::string dom = kMiniDomain;
    const std::string from = ":ordered-subtasks (and (t1 (finish ?x))))";
    dom.replace(dom.find(from), from.size(),
                ":subtasks (and (t1 (finish ?x)) (t2 (finish ?x))) :ordering (and))");
    try {
        hddl::parse(dom, kMiniProblem, "dom.hddl", "prob.hddl");
        FAIL() << "partial order accepted";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.file(), "dom.hddl");
        EXPECT_GT(e.line(), 0);
        EXPECT_NE(e.construct().find("ordering"), std::string::npos) << e.construct();
    }
}

TEST(Parse, RejectsConditionalEffects) {
    std::string dom = kMiniDomain;
    dom.replace(dom.find(":effect (done ?x)"), std::string(":effect (done ?x)").size(),
                ":effect (when (ready ?x) (done ?x))");
    try {
        hddl::parse(dom, kMiniProblem, "dom.hddl", "prob.hddl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.construct(), "when");
    }
}

TEST(Parse, LexicalErrorNamesLine) {
    try {
        hddl::parse("(define (domain x)\n(:types a\n", kMiniProblem, "d.hddl", "p.hddl");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.file(), "d.hddl");
    }
}

TEST(Ground, TaxiUsesOnlyBoothStreets) {
    Problem p = support::load_fixture("taxi");
    EXPECT_EQ(p.abstracts[p.initial_task].display(), "call_taxi");
    std::set<std::string> booths;
    for (const Method& m : p.methods) {
        const std::string& s = m.args.back();
        EXPECT_TRUE(s == "street1" || s == "street2") << m.display();
        booths.insert(s);
    }
    EXPECT_EQ(booths, (std::set<std::string>{"street1", "street2"}));
    auto names = method_names(p);
    EXPECT_TRUE(std::count(names.begin(), names.end(), "walk-to-booth(p,street3,street1)"));
}

TEST(Ground, MethodPreconditionBecomesGuard) {
    Problem p = support::load_fixture("taxi");
    auto walk = p.find_method("walk-to-booth(p,street3,street1)");
    ASSERT_TRUE(walk);
    const Method& m = p.methods[*walk];
    ASSERT_EQ(m.subtasks.size(), 3u);
    ASSERT_TRUE(m.subtasks[0].is_primitive());
    const Action& guard = p.actions[m.subtasks[0].id];
    EXPECT_TRUE(guard.is_guard);
    // booth is static and already checked by grounding; only the fluent stays.
    EXPECT_EQ(guard.precond, std::vector<FactId>{*p.find_fact("at(p,street3)")});
    EXPECT_TRUE(guard.eff_pos.empty());
    EXPECT_TRUE(guard.eff_neg.empty());
}

TEST(Ground, StaticMethodPreconditionNeedsNoGuard) {
    Problem p = hddl::load(kMiniDomain, kMiniProblem);
    auto direct = p.find_method("go-direct(p)");
    ASSERT_TRUE(direct);
    EXPECT_EQ(p.methods[*direct].subtasks.size(), 1u);
    auto skip = p.find_method("go-skip(p)");
    ASSERT_TRUE(skip);
    EXPECT_TRUE(p.methods[*skip].subtasks.empty());
}

TEST(Ground, ZeroObjectTypeExcludesAction) {
    std::string dom = kMiniDomain;
    dom.replace(dom.find("(:types thing)"), std::string("(:types thing)").size(), "(:types thing gizmo)");
    dom.insert(dom.rfind(')'), R"(
  (:action poke
    :parameters (?g - gizmo)
    :effect (done P)))");
    dom.insert(dom.find("(:predicates"), "(:constants P - thing)\n  ");
    std::string prob = kMiniProblem;
    prob.replace(prob.find("(:objects P - thing)"), std::string("(:objects P - thing)").size(), "(:objects)");
    Problem p = hddl::load(dom, prob);
    for (const Action& a : p.actions) EXPECT_NE(a.name, "poke");
}

TEST(Ground, NegativePreconditionUsesComplementFact) {
    Problem p = support::load_fixture("taxi");
    // walk requires (not (= ?from ?to)); equality is static, so no complement fact is needed.
    for (const Action& a : p.actions)
        if (a.name == "walk") EXPECT_NE(a.args[1], a.args[2]);
    const char* dom = R"(
(define (domain neg)
  (:predicates (lit))
  (:task t :parameters ())
  (:method m :parameters () :task (t) :ordered-subtasks (and (switch)))
  (:action switch :parameters () :precondition (not (lit)) :effect (lit)))
)";
    const char* prob = R"(
(define (problem neg-1) (:domain neg)
  (:htn :subtasks (t))
  (:init)
  (:goal (lit)))
)";
    Problem q = hddl::load(dom, prob);
    auto sw = q.find_task("switch");
    ASSERT_TRUE(sw);
    const Action& a = q.actions[sw->id];
    ASSERT_EQ(a.precond.size(), 1u);
    EXPECT_EQ(q.facts[a.precond[0]].predicate, "not_lit");
    EXPECT_TRUE(q.initial_state().test(a.precond[0]));
    EXPECT_TRUE(std::find(a.eff_neg.begin(), a.eff_neg.end(), a.precond[0]) != a.eff_neg.end());
}

TEST(Ground, MultipleTopTasksGetSyntheticRoot) {
    std::string prob = kMiniProblem;
    const std::string from = ":subtasks (and (t0 (go P)))";
    prob.replace(prob.find(from), from.size(), ":ordered-subtasks (and (t0 (go P)) (t1 (go P)))");
    Problem p = hddl::load(kMiniDomain, prob);
    const AbstractTask& root = p.abstracts[p.initial_task];
    ASSERT_EQ(root.methods.size(), 1u);
    EXPECT_EQ(p.methods[root.methods[0]].subtasks.size(), 2u);
}

TEST(Ground, InstantiationCapAborts) {
    auto [d, pr] = hddl::parse(kMiniDomain, kMiniProblem);
    EXPECT_NO_THROW(hddl::ground(d, pr));
    hddl::GroundOptions opts;
    opts.max_instantiations = 0;
    EXPECT_THROW(hddl::ground(d, pr, opts), hddl::GroundingError);
}

TEST(Ground, IsDeterministicAndRoundTrips) {
    for (const char* name : {"taxi", "tower"}) {
        Problem a = support::load_fixture(name);
        Problem b = support::load_fixture(name);
        std::string text = write_ground(a);
        EXPECT_EQ(text, write_ground(b));
        EXPECT_EQ(write_ground(read_ground(text)), text);
    }
}

TEST(Ground, MethodsReferenceSurvivingTasks) {
    for (const char* name : {"taxi", "tower"}) {
        Problem p = support::load_fixture(name);
        for (const Method& m : p.methods)
            for (const TaskRef& s : m.subtasks) {
                if (s.is_abstract()) {
                    ASSERT_LT(s.id, static_cast<int>(p.abstracts.size()));
                    EXPECT_FALSE(p.abstracts[s.id].methods.empty()) << name;
                } else {
                    ASSERT_LT(s.id, static_cast<int>(p.actions.size()));
                }
            }
    }
}
