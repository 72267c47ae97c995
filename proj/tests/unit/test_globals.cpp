#include <gtest/gtest.h>

#include <cmath>

#include "gdsim/aggregate.hpp"
#include "gdsim/models/hk.hpp"
#include "gdsim/parallel.hpp"

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

struct Pop {
  Simulation sim;
  AgentTypeTag person;
  EdgeTypeTag knows;
};

Pop make_pop(std::size_t n, double x) {
  Schema s;
  const auto person = s.register_agent_type({"Person", {{"opinion", ScalarKind::Float64}}, false});
  const auto knows = s.register_edge_type({"Knows", {{"w", ScalarKind::Float64}}, {}, std::nullopt});
  Pop p{Simulation(std::move(s), 0), person, knows};
  for (std::size_t i = 0; i < n; ++i) p.sim.add_agent(person, {x});
  return p;
}

double opinion(const StateView& s) { return s.f64(0); }

}  // namespace

TEST(Params, SetThenGet) {
  auto p = make_pop(1, 0.0);
  p.sim.set_param("epsilon", 0.2);
  EXPECT_EQ(p.sim.get_param("epsilon"), 0.2);
  EXPECT_TRUE(p.sim.params().contains("epsilon"));
}

TEST(Params, FrozenAfterStart) {
  auto p = make_pop(1, 0.0);
  p.sim.apply_transition([](TransitionContext& c) { c.keep_self(); }, TransitionSpec{"t", {"Person"}, {}, {"Person"}, {}});
  p.sim.finalize_step();
  EXPECT_EQ(code_of([&] { p.sim.set_param("epsilon", 0.3); }), ErrorCode::ParamFrozen);
}

TEST(Params, UnknownName) {
  auto p = make_pop(1, 0.0);
  EXPECT_EQ(code_of([&] { p.sim.get_param("nope"); }), ErrorCode::UnknownName);
}

TEST(Aggregate, SumCountMinMax) {
  auto p = make_pop(10, 0.5);
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Sum), 5.0);
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Count), 10.0);
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Min), 0.5);
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Max), 0.5);
}

TEST(Aggregate, CountAfterDeaths) {
  auto p = make_pop(10, 0.5);
  p.sim.apply_transition(
      [](TransitionContext& c) {
        if (c.self().local_index() < 2) c.kill_self();
        else c.keep_self();
      },
      TransitionSpec{"t", {"Person"}, {}, {"Person"}, {}});
  p.sim.finalize_step();
  EXPECT_EQ(aggregate_count(p.sim, p.person), 8.0);
}

TEST(Aggregate, EmptyMinMaxIsNan) {
  auto p = make_pop(0, 0.0);
  EXPECT_TRUE(std::isnan(aggregate(p.sim, p.person, opinion, Reduce::Min)));
  EXPECT_TRUE(std::isnan(aggregate(p.sim, p.person, opinion, Reduce::Max)));
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Sum), 0.0);
}

TEST(Aggregate, AscendingOrderMatchesSerialOracle) {
  Schema s;
  const auto person = s.register_agent_type({"Person", {{"opinion", ScalarKind::Float64}}, false});
  Simulation sim(std::move(s), 0);
  Rng rng(4);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) {
    // Wide magnitudes make the sum order-sensitive.
    const double x = (rng.uniform01() - 0.5) * std::pow(10.0, static_cast<double>(rng.below(12)));
    xs.push_back(x);
    sim.add_agent(person, {x});
  }
  double oracle = 0.0;
  for (double x : xs) oracle += x;
  EXPECT_EQ(aggregate(sim, person, opinion, Reduce::Sum), oracle);
}

TEST(Aggregate, EdgeAggregation) {
  auto p = make_pop(3, 0.0);
  const AgentId a = p.sim.id_of(p.person, 0), b = p.sim.id_of(p.person, 1);
  p.sim.add_edge(p.knows, a, b, {Value(1.5)});
  p.sim.add_edge(p.knows, b, a, {Value(2.0)});
  auto w = [](const EdgeRecord& e) { return e.state().f64(0); };
  EXPECT_EQ(aggregate_edges(p.sim, p.knows, w, Reduce::Sum), 3.5);
  EXPECT_EQ(aggregate_edges(p.sim, p.knows, w, Reduce::Count), 2.0);
  EXPECT_EQ(aggregate_edges(p.sim, p.knows, w, Reduce::Max), 2.0);
}

TEST(Aggregate, EdgeMapOverDroppedFieldIsHintViolation) {
  Schema s;
  const auto person = s.register_agent_type({"Person", {}, false});
  const auto stateless = s.register_edge_type({"S", {{"w", ScalarKind::Float64}}, HintSet{EdgeHint::Stateless}, std::nullopt});
  const auto counted =
      s.register_edge_type({"C", {}, HintSet{EdgeHint::Stateless, EdgeHint::IgnoreFrom}, std::nullopt});
  Simulation sim(std::move(s), 0);
  const AgentId a = sim.add_agent(person, {});
  sim.add_edge(stateless, a, a);
  sim.add_edge(counted, a, a);
  sim.add_edge(counted, a, a);
  auto w = [](const EdgeRecord& e) { return e.state().f64(0); };
  EXPECT_EQ(code_of([&] { aggregate_edges(sim, stateless, w, Reduce::Sum); }), ErrorCode::HintViolation);
  EXPECT_EQ(aggregate_edges(sim, counted, w, Reduce::Count), 2.0);
  EXPECT_EQ(code_of([&] { aggregate_edges(sim, counted, w, Reduce::Sum); }), ErrorCode::HintViolation);
}

TEST(Aggregate, SumIdenticalAcrossWorkers) {
  models::HkConfig cfg;
  cfg.n = 500;
  cfg.epsilon = 0.3;
  cfg.seed = 12;
  std::optional<double> base;
  for (std::uint32_t w : {1u, 2u, 4u, 8u}) {
    const auto r = models::hk_run(cfg, 5, w);
    if (!base) base = r.metrics.back().mean;
    EXPECT_EQ(r.metrics.back().mean, *base);
  }
}

TEST(Aggregate, MaxContractsAfterOneHkStep) {
  models::HkConfig cfg;
  cfg.n = 100;
  cfg.epsilon = 0.1;
  cfg.seed = 21;
  auto m = models::make_hk(cfg);
  const double before = aggregate(m.sim, m.person, opinion, Reduce::Max);
  models::hk_advance(m);
  EXPECT_LE(aggregate(m.sim, m.person, opinion, Reduce::Max), before);
}

TEST(Globals, VisibleNextTransition) {
  auto p = make_pop(4, 1.0);
  p.sim.set_global("mean_opinion", 0.25);
  const TransitionSpec spec{"g", {"Person"}, {}, {"Person"}, {}};
  p.sim.apply_transition([](TransitionContext& c) { c.keep_self({c.globals().get("mean_opinion")}); }, spec);
  p.sim.finalize_step();
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Sum), 1.0);
  p.sim.set_global("mean_opinion", aggregate(p.sim, p.person, opinion, Reduce::Sum) / 4.0 + 1.0);
  p.sim.apply_transition([](TransitionContext& c) { c.keep_self({c.globals().get("mean_opinion")}); }, spec);
  p.sim.finalize_step();
  EXPECT_EQ(p.sim.agent_state(p.sim.id_of(p.person, 3)).f64(0), 1.25);
}

TEST(Globals, SetInsideTransitionRejected) {
  auto p = make_pop(2, 1.0);
  auto fn = [&](TransitionContext& c) {
    p.sim.set_global("x", 1.0);
    c.keep_self();
  };
  EXPECT_EQ(code_of([&] { p.sim.apply_transition(fn, TransitionSpec{"g", {"Person"}, {}, {"Person"}, {}}); }),
            ErrorCode::MidStepMutation);
}

TEST(Globals, UnsetReadIsUnknownName) {
  auto p = make_pop(1, 1.0);
  EXPECT_EQ(code_of([&] { p.sim.get_global("never"); }), ErrorCode::UnknownName);
}

TEST(Globals, SnapshotIsolatedFromLaterWrites) {
  auto p = make_pop(8, 0.0);
  p.sim.set_global("g", 3.0);
  p.sim.set_partition(partition_graph(p.sim, 4, PartitionStrategy::RoundRobin));
  const TransitionSpec spec{"g", {"Person"}, {}, {"Person"}, {}};
  p.sim.apply_transition([](TransitionContext& c) { c.keep_self({c.globals().get("g")}); }, spec);
  p.sim.set_global("g", 100.0);  // after the transition ran, before commit
  p.sim.finalize_step();
  EXPECT_EQ(aggregate(p.sim, p.person, opinion, Reduce::Sum), 24.0);
}
