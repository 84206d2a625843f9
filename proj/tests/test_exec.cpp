#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "hpshield/analysis.hpp"
#include "hpshield/check.hpp"
#include "hpshield/eval.hpp"
#include "hpshield/exec.hpp"
#include "hpshield/flow.hpp"
#include "hpshield/models.hpp"
#include "hpshield/parser.hpp"
#include "hpshield/printer.hpp"
#include "support/ast_gen.hpp"

using namespace hpshield;

namespace {

State stop_sign_state(double x, double v) {
  return State{{"A", 1}, {"b", 1}, {"eps", 1}, {"m", 100}, {"x", x}, {"v", v}, {"t", 0}, {"a", 0}};
}

// Always picks the same branch and dwell; stops loops after `iterations`.
class FixedResolver : public Resolver {
 public:
  FixedResolver(std::size_t branch, double dwell, std::size_t iterations = 0)
      : branch_(branch), dwell_(dwell), iterations_(iterations) {}
  std::size_t choose(std::size_t, const ChoiceContext& ctx) override {
    if (ctx.kind == ChoiceContext::Kind::Loop) return ctx.iteration < iterations_ ? 1 : 0;
    return branch_;
  }
  double sample_any(const std::string&, const State&) override { return 0; }
  double duration(const Program&, const State&) override { return dwell_; }

 private:
  std::size_t branch_;
  double dwell_;
  std::size_t iterations_;
};

}  // namespace

TEST(Eval, StopSignGuardArithmetic) {
  Formula guard = parse_formula(models::kStopSignAccelGuard);
  // 2*1*(100-0) = 200 >= 0 + 2*(1 + 0) = 2
  EXPECT_TRUE(eval_formula(guard, stop_sign_state(0, 0)));
  EXPECT_DOUBLE_EQ(robustness(guard, stop_sign_state(0, 0)), 198.0);
  // 2*1*(100-95) = 10 < 9 + 2*(1 + 6) = 23
  EXPECT_FALSE(eval_formula(guard, stop_sign_state(95, 3)));
  EXPECT_DOUBLE_EQ(robustness(guard, stop_sign_state(95, 3)), -13.0);
}

TEST(Eval, RobustnessOfAtoms) {
  State s{{"x", 3}};
  EXPECT_DOUBLE_EQ(robustness(parse_formula("x <= 5"), s), 2.0);
  EXPECT_DOUBLE_EQ(robustness(parse_formula("x >= 3"), s), 0.0);
  EXPECT_DOUBLE_EQ(robustness(parse_formula("x = 5"), s), -2.0);
  EXPECT_DOUBLE_EQ(robustness(parse_formula("!(x > 1) | x < 4"), s), 1.0);
  EXPECT_DOUBLE_EQ(robustness(parse_formula("x > 1 -> x < 2"), s), -1.0);
  EXPECT_TRUE(std::isinf(robustness(parse_formula("true"), s)));
}

TEST(Eval, Errors) {
  try {
    eval_formula(parse_formula("y > 0"), State{{"x", 1}});
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::UnboundVariable);
    EXPECT_EQ(e.subject(), "y");
  }
  EXPECT_THROW(eval_term(parse_term("x^2^2^2^2^2^2"), State{{"x", 1e10}}), EvalError);
  try {
    eval_formula(parse_formula("forall x. x > 0"), State{});
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::UnsupportedConnective);
  }
}

// Robustness sign agrees with truth away from the boundary.
TEST(Eval, RobustnessSignProperty) {
  testsupport::AstGenerator gen(11);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    Formula f = gen.formula(3);
    if (!is_first_order_free(f)) continue;
    State s;
    for (const auto& n : variables(f)) s.set(n, u(rng));
    try {
      double r = robustness(f, s);
      bool truth = eval_formula(f, s);
      if (r > 0) {
        EXPECT_TRUE(truth) << print_formula(f);
      }
      if (r < 0) {
        EXPECT_FALSE(truth) << print_formula(f);
      }
      ++checked;
    } catch (const EvalError&) {
    }
  }
  EXPECT_GT(checked, 300);
}

TEST(Flow, ConstantAccelerationClosedForm) {
  auto r = flow(parse_program("{x'=v, v'=a}"), State{{"x", 0}, {"v", 0}, {"a", 2}}, 1.0);
  EXPECT_EQ(r.exit, FlowExit::DurationReached);
  EXPECT_NEAR(r.state.get("x"), 1.0, 1e-6);
  EXPECT_NEAR(r.state.get("v"), 2.0, 1e-6);
  EXPECT_EQ(r.elapsed, 1.0);
  EXPECT_EQ(r.state.get("a"), 2.0);
}

TEST(Flow, DomainExitIsBisected) {
  Program ode = parse_program("{v'=-1 & v>=0}");
  auto r = flow(ode, State{{"v", 0.5}}, 2.0);
  EXPECT_EQ(r.exit, FlowExit::DomainExit);
  EXPECT_NEAR(r.elapsed, 0.5, 1e-6);
  EXPECT_NEAR(r.state.get("v"), 0.0, 1e-6);
  // The returned point satisfies the domain, a moment later it does not.
  EXPECT_GE(r.state.get("v"), 0.0);
  auto later = flow(parse_program("{v'=-1}"), State{{"v", 0.5}}, r.elapsed + 1e-9);
  EXPECT_LT(later.state.get("v"), 0.0);
}

TEST(Flow, StopSignOde) {
  State s{{"x", 0}, {"v", 0}, {"a", 1}, {"t", 0}, {"eps", 1}};
  auto r = flow(parse_program(models::kStopSignOde), s, 1.0);
  EXPECT_NEAR(r.state.get("x"), 0.5, 1e-6);
  EXPECT_NEAR(r.state.get("v"), 1.0, 1e-6);
  EXPECT_NEAR(r.state.get("t"), 1.0, 1e-6);
}

TEST(Flow, FalseDomainAtStart) {
  auto r = flow(parse_program("{x'=1 & x<0}"), State{{"x", 1}}, 1.0);
  EXPECT_EQ(r.exit, FlowExit::DomainExit);
  EXPECT_EQ(r.elapsed, 0.0);
  EXPECT_EQ(r.state.get("x"), 1.0);
}

TEST(Flow, AccuracyOverTenSeconds) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  OdeFlow f(parse_program("{x'=v, v'=a}"));
  for (int i = 0; i < 20; ++i) {
    double x0 = u(rng), v0 = u(rng), a = u(rng), d = 10 * (i + 1) / 20.0;
    auto r = f(State{{"x", x0}, {"v", v0}, {"a", a}}, d);
    EXPECT_NEAR(r.state.get("x"), x0 + v0 * d + a * d * d / 2, 1e-6);
    EXPECT_NEAR(r.state.get("v"), v0 + a * d, 1e-6);
  }
}

TEST(Flow, Trajectory) {
  FlowOptions o;
  o.record = true;
  o.record_every = 100;
  auto r = flow(parse_program("{x'=1}"), State{{"x", 0}}, 1.0, o);
  ASSERT_EQ(r.trajectory.size(), 11U);
  EXPECT_EQ(r.trajectory.front().first, 0.0);
  EXPECT_NEAR(r.trajectory.back().second.get("x"), 1.0, 1e-12);
}

TEST(Flow, NonFiniteStateIsReported) {
  try {
    flow(parse_program("{x'=x^2}"), State{{"x", 1e200}}, 1.0);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_TRUE(e.kind() == EvalError::Kind::NonFiniteResult || e.kind() == EvalError::Kind::NonFiniteState);
  }
}

TEST(Run, ChoiceBranch) {
  FixedResolver r(1, 0);
  auto res = run(parse_program("x := 0 ++ x := 1"), State{}, r);
  EXPECT_TRUE(res.completed());
  EXPECT_EQ(res.state.get("x"), 1.0);
  ASSERT_EQ(res.decisions.size(), 1U);
  EXPECT_EQ(res.decisions[0], Decision(ChoiceDecision{1}));
}

TEST(Run, FailedTestAborts) {
  FixedResolver r(0, 0);
  auto res = run(parse_program("?x > 0"), State{{"x", 0}}, r);
  EXPECT_FALSE(res.completed());
  ASSERT_TRUE(res.failed_test.has_value());
  EXPECT_EQ(print_formula(*res.failed_test), "x > 0");
  EXPECT_EQ(res.trace.back().kind, TraceEvent::Kind::TestFailure);
}

TEST(Run, StopSignOneAcceleratingIteration) {
  FixedResolver r(1, 1.0, 1);
  auto res = run(parse_program(models::kStopSignProgram), stop_sign_state(0, 0), r);
  ASSERT_TRUE(res.completed());
  EXPECT_NEAR(res.state.get("x"), 0.5, 1e-6);
  EXPECT_NEAR(res.state.get("v"), 1.0, 1e-6);
  EXPECT_EQ(res.state.get("a"), 1.0);

  // Replaying the recorded decisions reproduces the run bit for bit.
  ScriptedResolver replay(res.decisions);
  auto again = run(parse_program(models::kStopSignProgram), stop_sign_state(0, 0), replay);
  EXPECT_EQ(again.state, res.state);
  EXPECT_EQ(replay.consumed(), res.decisions.size());
}

TEST(Run, ScriptErrors) {
  ScriptedResolver empty({});
  EXPECT_THROW(run(parse_program("x := 0 ++ x := 1"), State{}, empty), ResolverError);
  ScriptedResolver wrong({DwellDecision{1}});
  EXPECT_THROW(run(parse_program("x := 0 ++ x := 1"), State{}, wrong), ResolverError);
  ScriptedResolver out_of_range({ChoiceDecision{5}});
  EXPECT_THROW(run(parse_program("x := 0 ++ x := 1"), State{}, out_of_range), ResolverError);
  FixedResolver negative(0, -1);
  EXPECT_THROW(run(parse_program("{x'=1}"), State{{"x", 0}}, negative), ResolverError);
}

TEST(Run, DomainFalseOnEntryAborts) {
  FixedResolver r(0, 1);
  auto res = run(parse_program("{x'=1 & x<0}"), State{{"x", 1}}, r);
  EXPECT_FALSE(res.completed());
}

TEST(Run, TraceCsv) {
  FixedResolver r(1, 1.0, 1);
  auto res = run(parse_program(models::kStopSignProgram), stop_sign_state(0, 0), r);
  std::ostringstream out;
  write_trace_csv(out, res.trace);
  std::string csv = out.str();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "time,event_kind,A,a,b,eps,m,t,v,x");
  EXPECT_NE(csv.find("\n0,initial,1,0,1,1,100,0,0,0\n"), std::string::npos);
  EXPECT_NE(csv.find(",continuous,"), std::string::npos);
}

namespace {

CheckSettings stop_sign_settings() {
  CheckSettings s;
  s.loop_depth = 20;
  s.dwell_times = {parse_term("0.25*eps"), parse_term("0.5*eps"), parse_term("eps")};
  s.flow.step = 1.0 / 64;
  return s;
}

std::vector<State> stop_sign_grid() {
  std::map<std::string, std::vector<double>, std::less<>> axes{{"x", parse_value_list("0:90:10")},
                                                                {"v", parse_value_list("0:5:1")}};
  State fixed{{"A", 1}, {"b", 1}, {"eps", 1}, {"m", 100}, {"a", 0}, {"t", 0}};
  Formula init = parse_formula(models::kStopSignInit);
  std::vector<State> out;
  for (auto& s : grid_states(axes, fixed)) {
    if (eval_formula(init, s)) out.push_back(s);
  }
  return out;
}

}  // namespace

TEST(Check, ChoiceCounterexample) {
  CheckSettings s;
  auto v = bounded_check(parse_program("x := 0 ++ x := 1"), parse_formula("x <= 0"), {State{}}, s);
  ASSERT_FALSE(v.safe());
  ASSERT_EQ(v.counterexample->decisions.size(), 1U);
  EXPECT_EQ(v.counterexample->decisions[0], Decision(ChoiceDecision{1}));
  EXPECT_EQ(v.counterexample->terminal.get("x"), 1.0);
}

TEST(Check, ValueListParsing) {
  EXPECT_EQ(parse_value_list("0:90:10").size(), 10U);
  EXPECT_EQ(parse_value_list("0:1:0.1").size(), 11U);
  EXPECT_EQ(parse_value_list("1, 2.5,-3"), (std::vector<double>{1, 2.5, -3}));
  EXPECT_THROW(parse_value_list("1:0:1"), std::invalid_argument);
  EXPECT_THROW(parse_value_list("a,b"), std::invalid_argument);
}

TEST(Check, StopSignModelIsSafeOnGrid) {
  auto grid = stop_sign_grid();
  ASSERT_EQ(grid.size(), 59U);  // only x=90, v=5 violates v^2 <= 2b(m-x)
  auto v = bounded_check(parse_program(models::kStopSignProgram), parse_formula(models::kStopSignSafe), grid,
                         stop_sign_settings());
  EXPECT_TRUE(v.safe());
  EXPECT_EQ(v.stats.initial_states, 59U);
  EXPECT_GT(v.stats.terminals, 1000U);
}

TEST(Check, MutatedGuardHasCounterexampleThatReplays) {
  Program p = parse_program(models::kStopSignNoReactionProgram);
  Formula post = parse_formula(models::kStopSignSafe);
  auto v = bounded_check(p, post, stop_sign_grid(), stop_sign_settings());
  ASSERT_FALSE(v.safe());
  const auto& ce = *v.counterexample;
  EXPECT_FALSE(eval_formula(post, ce.terminal));
  ScriptedResolver replay(ce.decisions);
  RunOptions ro;
  ro.flow.step = 1.0 / 64;
  auto r = run(p, ce.initial, replay, ro);
  ASSERT_TRUE(r.completed());
  EXPECT_EQ(r.state, ce.terminal);
  EXPECT_FALSE(eval_formula(post, r.state));
  // The trace contains an acceleration.
  bool accelerated = false;
  for (const auto& e : ce.trace) accelerated |= e.description == "a := A";
  EXPECT_TRUE(accelerated);

  // Deterministic.
  auto again = bounded_check(p, post, stop_sign_grid(), stop_sign_settings());
  ASSERT_FALSE(again.safe());
  EXPECT_EQ(again.counterexample->decisions, ce.decisions);
  EXPECT_EQ(again.counterexample->initial_index, ce.initial_index);
}

TEST(Check, BudgetExceeded) {
  CheckSettings s = stop_sign_settings();
  s.budget = 100;
  EXPECT_THROW(bounded_check(parse_program(models::kStopSignProgram), parse_formula(models::kStopSignSafe),
                             stop_sign_grid(), s),
               BudgetExceeded);
}

TEST(Check, AssignAnyNeedsSamples) {
  CheckSettings s;
  EXPECT_THROW(bounded_check(parse_program("x := *"), parse_formula("x <= 0"), {State{}}, s),
               std::invalid_argument);
  s.samples["x"] = {constant(-1), constant(0), constant(2)};
  auto v = bounded_check(parse_program("x := *"), parse_formula("x <= 0"), {State{}}, s);
  ASSERT_FALSE(v.safe());
  EXPECT_EQ(v.counterexample->decisions, (std::vector<Decision>{SampleDecision{2}}));
}

// Independent oracle: set semantics of loop- and ODE-free programs computed
// directly on the syntax tree; bounded_check must report a counterexample exactly
// when one of them falsifies the postcondition.
std::vector<State> reachable(const Program& p, const std::vector<State>& from) {
  if (const auto* a = as<AssignProgram>(p)) {
    std::vector<State> out;
    for (State s : from) {
      s.set(a->var, eval_term(a->value, s));
      out.push_back(s);
    }
    return out;
  }
  if (const auto* t = as<TestProgram>(p)) {
    std::vector<State> out;
    for (const State& s : from) {
      if (eval_formula(t->condition, s)) out.push_back(s);
    }
    return out;
  }
  if (const auto* q = as<SeqProgram>(p)) return reachable(q->second, reachable(q->first, from));
  if (const auto* c = as<ChoiceProgram>(p)) {
    auto out = reachable(c->lhs, from);
    auto rhs = reachable(c->rhs, from);
    out.insert(out.end(), rhs.begin(), rhs.end());
    return out;
  }
  throw std::logic_error("unexpected statement");
}

TEST(Check, DualityWithBruteForceEnumeration) {
  std::mt19937_64 rng(99);
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  auto random_stmt = [&]() -> Program {
    static const char* vars[] = {"x", "y"};
    std::string v = vars[pick(2)];
    switch (pick(3)) {
      case 0: return assign(v, constant(pick(5) - 2));
      case 1: return assign(v, var(vars[pick(2)]) + constant(pick(3) - 1));
      default: return test(compare(var(v), Relation::Le, constant(pick(4) - 1)));
    }
  };
  int with_ce = 0, without_ce = 0;
  for (int trial = 0; trial < 300; ++trial) {
    int choices = 1 + pick(3);
    Program p = random_stmt();
    for (int c = 0; c < choices; ++c) {
      Program other = seq(random_stmt(), random_stmt());
      p = pick(2) == 0 ? seq(choice(p, other), random_stmt()) : choice(other, seq(p, random_stmt()));
    }
    Formula post = compare(var("x") + var("y"), Relation::Le, constant(pick(5) - 1));
    State init{{"x", 0}, {"y", 0}};

    bool violated = false;
    for (const State& s : reachable(p, {init})) violated |= !eval_formula(post, s);
    auto v = bounded_check(p, post, {init}, CheckSettings{});
    EXPECT_EQ(!v.safe(), violated) << print_program(p) << "  post " << print_formula(post);
    (violated ? with_ce : without_ce)++;
  }
  EXPECT_GT(with_ce, 30);
  EXPECT_GT(without_ce, 30);
}
