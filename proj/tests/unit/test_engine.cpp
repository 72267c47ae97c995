#include <gtest/gtest.h>

#include <cmath>

#include "gdsim/engine.hpp"
#include "gdsim/models/hk.hpp"

using namespace gdsim;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidState;
}

// Brute-force one HK step over the full n x n confidence matrix.
std::vector<double> hk_oracle(const std::vector<double>& x, double eps) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (std::abs(x[j] - x[i]) <= eps) {
        sum += x[j];
        ++count;
      }
    }
    out[i] = sum / count;
  }
  return out;
}

struct Triple {
  Simulation sim;
  AgentTypeTag node;
  EdgeTypeTag link;      // FullEdgeList
  EdgeTypeTag tag;       // IgnoreFrom (StateOnlyList)
  AgentId a, b, c;
};

Triple make_triple() {
  Schema s;
  const auto node = s.register_agent_type({"Node", {{"x", ScalarKind::Float64}}, false});
  const auto link = s.register_edge_type({"Link", {}, {}, std::nullopt});
  const auto tag = s.register_edge_type({"Tag", {{"w", ScalarKind::Float64}}, HintSet{EdgeHint::IgnoreFrom}, std::nullopt});
  Triple t{Simulation(std::move(s), 3), node, link, tag, {}, {}, {}};
  t.a = t.sim.add_agent(node, {1.0});
  t.b = t.sim.add_agent(node, {2.0});
  t.c = t.sim.add_agent(node, {3.0});
  t.sim.add_edge(link, t.b, t.a);  // A -> B
  t.sim.add_edge(link, t.a, t.c);  // C -> A
  t.sim.add_edge(link, t.c, t.b);  // B -> C
  t.sim.add_edge(tag, t.b, t.a, {Value(9.0)});  // A -> B without a stored source
  t.sim.finish_init();
  return t;
}

}  // namespace

TEST(Engine, IdentityTransitionKeepsGraph) {
  auto t = make_triple();
  const auto before = t.sim.checksum();
  t.sim.apply_transition([](TransitionContext& ctx) { ctx.keep_self(); },
                         TransitionSpec{"id", {"Node"}, {}, {"Node"}, {}});
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.checksum(), before);
  EXPECT_EQ(t.sim.num_edges(t.link), 3u);
}

TEST(Engine, NeverKeepEmptiesType) {
  auto t = make_triple();
  t.sim.apply_transition([](TransitionContext&) {}, TransitionSpec{"none", {"Node"}, {}, {"Node"}, {}});
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_alive(t.node), 0u);
  // Every stored-source edge lost an endpoint.
  EXPECT_EQ(t.sim.num_edges(t.link), 0u);
}

TEST(Engine, KeepExistingAgentsSurviveWithoutKeepSelf) {
  auto t = make_triple();
  t.sim.apply_transition([](TransitionContext&) {}, TransitionSpec{"none", {"Node"}, {}, {"Node"}, {"Node"}});
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_alive(t.node), 3u);
}

TEST(Engine, DanglingEdgesRemoved) {
  auto t = make_triple();
  t.sim.apply_transition(
      [&](TransitionContext& ctx) {
        if (ctx.self() == t.a) ctx.kill_self();
        else ctx.keep_self();
      },
      TransitionSpec{"kill a", {"Node"}, {}, {"Node"}, {}});
  t.sim.finalize_step();
  EXPECT_FALSE(t.sim.alive(t.a));
  EXPECT_EQ(t.sim.num_edges_to(t.link, t.b), 0u);  // A -> B gone
  EXPECT_EQ(t.sim.num_edges(t.link), 1u);          // only B -> C left
  EXPECT_EQ((*t.sim.edges_to(t.link, t.c).begin()).source(), t.b);
  // The IgnoreFrom edge cannot see its dead source and survives.
  EXPECT_EQ(t.sim.num_edges_to(t.tag, t.b), 1u);
}

TEST(Engine, NoDeathsLeaveEdgesAlone) {
  auto t = make_triple();
  const auto before = t.sim.num_edges(t.link);
  t.sim.apply_transition([](TransitionContext& ctx) { ctx.keep_self({ctx.state().f64(0) + 1.0}); },
                         TransitionSpec{"bump", {"Node"}, {}, {"Node"}, {}});
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_edges(t.link), before);
  EXPECT_EQ(t.sim.agent_state(t.c).f64(0), 4.0);
}

TEST(Engine, EdgesInWrittenTypeRebuiltUnlessKept) {
  auto t = make_triple();
  const TransitionSpec rebuild{"r", {"Node"}, {}, {"Link"}, {}};
  t.sim.apply_transition([&](TransitionContext& ctx) {
    if (ctx.self() == t.a) ctx.add_edge(t.link, t.a, t.a);
  }, rebuild);
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_edges(t.link), 1u);
  const TransitionSpec keep{"k", {"Node"}, {}, {"Link"}, {"Link"}};
  t.sim.apply_transition([&](TransitionContext& ctx) { ctx.add_edge(t.link, ctx.self(), ctx.self()); }, keep);
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_edges(t.link), 4u);
  EXPECT_EQ(t.sim.num_edges_to(t.link, t.a), 2u);
}

TEST(Engine, HkFiveAgentStep) {
  const std::vector<double> x0{0.1, 0.25, 0.4, 0.7, 0.95};
  models::HkConfig cfg;
  cfg.n = 5;
  cfg.epsilon = 0.2;
  cfg.initial_opinions = x0;
  auto m = models::make_hk(cfg);
  models::hk_advance(m);
  const auto got = models::hk_opinions(m.sim, m.person);
  const auto want = hk_oracle(x0, 0.2);
  EXPECT_EQ(got, want);
  const std::vector<double> frozen{0.175, 0.25, 0.325, 0.7, 0.95};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(got[i], frozen[i], 1e-15);
}

TEST(Engine, RunRejectsZeroSteps) {
  auto t = make_triple();
  StepProgram p;
  EXPECT_EQ(code_of([&] { run(t.sim, 0, p); }), ErrorCode::InvalidArgument);
}

TEST(Engine, RunAdvancesStepCounter) {
  models::HkConfig cfg;
  cfg.n = 50;
  auto m = models::make_hk(cfg);
  StepProgram p{{ProgramStep{models::hk_transition(m.knows), m.spec}}, {}, {}};
  int hooks = 0;
  p.after_step = [&](Simulation&) { ++hooks; };
  run(m.sim, 50, p);
  EXPECT_EQ(m.sim.step(), 50);
  EXPECT_EQ(hooks, 50);
  EXPECT_EQ(m.sim.step_metrics().size(), 50u);
}

TEST(Engine, SameSeedSameChecksum) {
  models::HkConfig cfg;
  cfg.n = 200;
  cfg.topology = models::HkTopology::Regular;
  cfg.k = 6;
  cfg.seed = 77;
  const auto a = models::hk_run(cfg, 10);
  const auto b = models::hk_run(cfg, 10);
  EXPECT_EQ(a.checksum, b.checksum);
  cfg.seed = 78;
  EXPECT_NE(models::hk_run(cfg, 10).checksum, a.checksum);
}

TEST(Engine, StochasticTransitionIsReproducible) {
  auto build = [] {
    Schema s;
    const auto n = s.register_agent_type({"N", {{"x", ScalarKind::Float64}}, false});
    Simulation sim(std::move(s), 99);
    for (int i = 0; i < 100; ++i) sim.add_agent(n, {0.0});
    return std::pair{std::move(sim), n};
  };
  auto [s1, n1] = build();
  auto [s2, n2] = build();
  const TransitionSpec spec{"r", {"N"}, {}, {"N"}, {}};
  auto fn = [](TransitionContext& ctx) { ctx.keep_self({ctx.rng().uniform01()}); };
  for (auto* s : {&s1, &s2}) {
    s->apply_transition(fn, spec);
    s->finalize_step();
  }
  EXPECT_EQ(s1.checksum(), s2.checksum());
  // Different agents draw different numbers.
  EXPECT_NE(s1.agent_state(s1.id_of(n1, 0)).f64(0), s1.agent_state(s1.id_of(n1, 1)).f64(0));
}

TEST(Engine, UnknownTypeInSpec) {
  auto t = make_triple();
  EXPECT_THROW(t.sim.apply_transition([](TransitionContext&) {}, TransitionSpec{"x", {"Nope"}, {}, {}, {}}), Error);
  EXPECT_THROW(t.sim.apply_transition([](TransitionContext&) {}, TransitionSpec{"x", {"Node"}, {}, {"Node"}, {"Link"}}),
               Error);
}

TEST(Engine, ErrorInTransitionLeavesStateUntouched) {
  auto t = make_triple();
  const auto before = t.sim.checksum();
  auto fn = [&](TransitionContext& ctx) {
    ctx.keep_self({42.0});
    if (ctx.self() == t.c) throw std::runtime_error("boom");
  };
  EXPECT_THROW(t.sim.apply_transition(fn, TransitionSpec{"x", {"Node"}, {}, {"Node"}, {}}), std::runtime_error);
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.checksum(), before);
}

TEST(Engine, WriteChecksOffDiscardsUndeclaredWrites) {
  auto t = make_triple();
  t.sim.checks().mode = CheckMode::Off;
  t.sim.apply_transition([&](TransitionContext& ctx) {
    ctx.keep_self({7.0});
    ctx.add_edge(t.link, ctx.self(), ctx.self());
  }, TransitionSpec{"x", {"Node"}, {}, {}, {}});
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.agent_state(t.a).f64(0), 1.0);
  EXPECT_EQ(t.sim.num_edges(t.link), 3u);
}

// Two global states that agree on agent 0's 1-neighborhood but differ
// elsewhere must produce the same output for agent 0.
TEST(Engine, InformationBound) {
  auto build = [](double far_state, bool far_edge) {
    Schema s;
    const auto node = s.register_agent_type({"Node", {{"x", ScalarKind::Float64}}, false});
    const auto link = s.register_edge_type({"Link", {{"w", ScalarKind::Float64}}, {}, std::nullopt});
    Simulation sim(std::move(s), 5);
    const AgentId a = sim.add_agent(node, {0.3});
    const AgentId b = sim.add_agent(node, {0.6});
    const AgentId c = sim.add_agent(node, {far_state});
    const AgentId d = sim.add_agent(node, {far_state * 2});
    sim.add_edge(link, a, b, {Value(1.5)});
    sim.add_edge(link, b, c, {Value(0.5)});
    if (far_edge) sim.add_edge(link, c, d, {Value(7.0)});
    return std::tuple{std::move(sim), node, link, a};
  };
  auto [s1, n1, l1, a1] = build(0.1, false);
  auto [s2, n2, l2, a2] = build(0.9, true);
  auto rule = [](EdgeTypeTag link) {
    return [link](TransitionContext& ctx) {
      double acc = ctx.state().f64(0) + ctx.rng().uniform01();
      for (EdgeRecord e : ctx.edges_to(link)) acc += e.state().f64(0) * ctx.source_state(e).f64(0);
      ctx.keep_self({acc});
    };
  };
  const TransitionSpec spec{"x", {"Node"}, {"Node", "Link"}, {"Node"}, {}};
  s1.apply_transition(rule(l1), spec);
  s1.finalize_step();
  s2.apply_transition(rule(l2), spec);
  s2.finalize_step();
  EXPECT_EQ(s1.agent_state(a1).f64(0), s2.agent_state(a2).f64(0));
  EXPECT_NE(s1.agent_state(s1.id_of(n1, 1)).f64(0), s2.agent_state(s2.id_of(n2, 1)).f64(0));
}
