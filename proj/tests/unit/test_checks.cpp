#include <gtest/gtest.h>

#include "gdsim/models/epidemic.hpp"
#include "gdsim/models/hk.hpp"

using namespace gdsim;

namespace {

struct Two {
  Simulation sim;
  AgentTypeTag person, place;
  EdgeTypeTag single, typed;
  AgentId p0, p1, l0;
};

Two make_two(CheckMode mode) {
  Schema s;
  const auto person = s.register_agent_type({"Person", {{"x", ScalarKind::Float64}}, false});
  const auto place = s.register_agent_type({"Place", {{"x", ScalarKind::Float64}}, false});
  const auto single = s.register_edge_type({"Partner", {}, HintSet{EdgeHint::SingleEdge}, std::nullopt});
  const auto typed =
      s.register_edge_type({"Knows", {}, HintSet{EdgeHint::Stateless, EdgeHint::SingleType}, std::string("Person")});
  Two t{Simulation(std::move(s), 8), person, place, single, typed, {}, {}, {}};
  t.sim.checks().mode = mode;
  t.p0 = t.sim.add_agent(person, {1.0});
  t.p1 = t.sim.add_agent(person, {2.0});
  t.l0 = t.sim.add_agent(place, {3.0});
  t.sim.finish_init();
  return t;
}

const TransitionSpec kAddSpec{"add", {"Person"}, {}, {"Partner", "Knows"}, {}};

}  // namespace

TEST(CheckSingleEdge, PureFunction) {
  Schema s;
  s.register_agent_type({"A", {}, false});
  const auto e = s.register_edge_type({"E", {}, HintSet{EdgeHint::SingleEdge}, std::nullopt});
  const AgentId t = AgentId::encode(AgentTypeTag{0}, 0, 4);
  EXPECT_FALSE(check_single_edge(s.edge(e), t, false, 0));
  const auto r = check_single_edge(s.edge(e), t, true, 3);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->kind, ContractKind::SingleEdge);
  EXPECT_EQ(r->step, 3);
  EXPECT_EQ(r->target, t);
  EXPECT_EQ(r->type_name, "E");
}

TEST(CheckSingleEdge, TwoAddsSameTargetFlagged) {
  auto t = make_two(CheckMode::On);
  try {
    t.sim.apply_transition([&](TransitionContext& c) { c.add_edge(t.single, t.p0, c.self()); }, kAddSpec);
    FAIL() << "expected a ContractViolation";
  } catch (const ContractViolation& e) {
    EXPECT_EQ(e.report().kind, ContractKind::SingleEdge);
    EXPECT_EQ(e.report().target, t.p0);
    EXPECT_EQ(e.report().type_name, "Partner");
    ASSERT_TRUE(e.report().producer);
    EXPECT_EQ(*e.report().producer, t.p1);  // the second producer in merge order
    EXPECT_EQ(e.report().step, 0);
  }
}

TEST(CheckSingleEdge, DifferentTargetsOk) {
  auto t = make_two(CheckMode::On);
  t.sim.apply_transition([&](TransitionContext& c) { c.add_edge(t.single, c.self(), c.self()); }, kAddSpec);
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_edges(t.single), 2u);
}

TEST(CheckSingleEdge, OffMeansLastWriteWinsAndNoReport) {
  auto t = make_two(CheckMode::Off);
  t.sim.apply_transition([&](TransitionContext& c) { c.add_edge(t.single, t.p0, c.self()); }, kAddSpec);
  t.sim.finalize_step();
  EXPECT_TRUE(t.sim.contract_reports().empty());
  ASSERT_TRUE(t.sim.has_edge(t.single, t.p0));
  EXPECT_EQ((*t.sim.edges_to(t.single, t.p0).begin()).source(), t.p1);
}

TEST(CheckSingleEdge, WarnRecordsAndContinues) {
  auto t = make_two(CheckMode::Warn);
  t.sim.apply_transition([&](TransitionContext& c) { c.add_edge(t.single, t.p0, c.self()); }, kAddSpec);
  t.sim.finalize_step();
  ASSERT_EQ(t.sim.contract_reports().size(), 1u);
  EXPECT_EQ(t.sim.contract_reports()[0].kind, ContractKind::SingleEdge);
  EXPECT_NE(t.sim.contract_reports()[0].describe().find("Partner"), std::string::npos);
}

TEST(CheckSingleType, DeclaredTargetOk) {
  auto t = make_two(CheckMode::On);
  t.sim.apply_transition([&](TransitionContext& c) { c.add_edge(t.typed, t.p0, c.self()); }, kAddSpec);
  t.sim.finalize_step();
  EXPECT_EQ(t.sim.num_edges_to(t.typed, t.p0), 2u);
}

TEST(CheckSingleType, OtherTargetFlagged) {
  auto t = make_two(CheckMode::On);
  try {
    t.sim.apply_transition([&](TransitionContext& c) { c.add_edge(t.typed, t.l0, c.self()); }, kAddSpec);
    FAIL() << "expected a ContractViolation";
  } catch (const ContractViolation& e) {
    EXPECT_EQ(e.report().kind, ContractKind::SingleType);
    EXPECT_EQ(e.report().target, t.l0);
    EXPECT_EQ(*e.report().producer, t.p0);
  }
}

TEST(CheckSingleType, InitAddAlsoChecked) {
  Schema s;
  s.register_agent_type({"Person", {}, false});
  const auto place = s.register_agent_type({"Place", {}, false});
  const auto typed = s.register_edge_type({"Knows", {}, HintSet{EdgeHint::SingleType}, std::string("Person")});
  Simulation sim(std::move(s), 0);
  const AgentId l = sim.add_agent(place, {});
  EXPECT_THROW(sim.add_edge(typed, l, l), ContractViolation);
}

// With checks off the wrong-type target silently shares the Person slot
// with the same index, which a FullEdgeList oracle tells apart.
TEST(CheckSingleType, OffAliasesSlotsAcrossTypes) {
  auto t = make_two(CheckMode::Off);
  t.sim.apply_transition([&](TransitionContext& c) {
    if (c.self() == t.p0) c.add_edge(t.typed, t.l0, c.self());
  }, kAddSpec);
  t.sim.finalize_step();
  EXPECT_TRUE(t.sim.contract_reports().empty());
  // l0 is Place slot 0, so the edge lands in Person slot 0's entry.
  const AgentId alias = AgentId::encode(t.person, 0, t.l0.local_index());
  EXPECT_EQ(alias, t.p0);
  EXPECT_EQ(t.sim.num_edges_to(t.typed, t.l0), 1u);
  EXPECT_EQ(t.sim.num_edges_to(t.typed, alias), 1u);

  // A FullEdgeList oracle keeps the two targets apart.
  Schema s;
  s.register_agent_type({"Person", {}, false});
  const auto place = s.register_agent_type({"Place", {}, false});
  const auto full = s.register_edge_type({"Knows", {}, {}, std::nullopt});
  Simulation oracle(std::move(s), 0);
  const AgentId q0 = oracle.add_agent(AgentTypeTag{0}, {});
  const AgentId m0 = oracle.add_agent(place, {});
  oracle.add_edge(full, m0, q0);
  EXPECT_EQ(oracle.num_edges_to(full, m0), 1u);
  EXPECT_EQ(oracle.num_edges_to(full, q0), 0u);
}

TEST(CheckImmortal, KillingImmortalFlagged) {
  Schema s;
  const auto a = s.register_agent_type({"A", {}, true});
  Simulation sim(std::move(s), 0);
  sim.add_agent(a, {});
  const TransitionSpec spec{"t", {"A"}, {}, {"A"}, {}};
  try {
    sim.apply_transition([](TransitionContext& c) { c.kill_self(); }, spec);
    FAIL();
  } catch (const ContractViolation& e) {
    EXPECT_EQ(e.report().kind, ContractKind::Immortal);
  }
  sim.checks().mode = CheckMode::Warn;
  sim.apply_transition([](TransitionContext& c) { c.kill_self(); }, spec);
  sim.finalize_step();
  EXPECT_EQ(sim.num_alive(a), 1u);
  EXPECT_EQ(sim.contract_reports().size(), 1u);
}

TEST(CheckMode, Parse) {
  EXPECT_EQ(parse_check_mode("on"), CheckMode::On);
  EXPECT_EQ(parse_check_mode("off"), CheckMode::Off);
  EXPECT_EQ(parse_check_mode("warn"), CheckMode::Warn);
  EXPECT_THROW(parse_check_mode("maybe"), Error);
}

TEST(Checks, ContractRespectingModelsUnaffected) {
  for (auto topo : {models::HkTopology::Complete, models::HkTopology::Regular, models::HkTopology::Clique}) {
    models::HkConfig cfg;
    cfg.n = 120;
    cfg.k = 6;
    cfg.cliques = 6;
    cfg.clique_size = 20;
    cfg.topology = topo;
    cfg.checks = CheckMode::On;
    const auto on = models::hk_run(cfg, 10, 2);
    cfg.checks = CheckMode::Off;
    const auto off = models::hk_run(cfg, 10, 2);
    EXPECT_EQ(on.trajectory, off.trajectory);
    EXPECT_EQ(on.checksum, off.checksum);
  }
  models::EpiConfig e;
  e.persons = 60;
  e.locations = 6;
  e.theta = 0.4;
  e.schedule = models::random_schedule(60, 6, 1);
  e.initially_infected = {0, 1};
  std::vector<std::uint64_t> sums;
  for (auto mode : {CheckMode::On, CheckMode::Off}) {
    e.checks = mode;
    auto m = models::make_epi(e);
    for (int d = 0; d < 5; ++d) models::epi_day(m);
    sums.push_back(m.sim.checksum());
  }
  EXPECT_EQ(sums[0], sums[1]);
}
