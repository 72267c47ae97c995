#pragma once

// Person/location epidemic. Persons visit locations on a fixed daily
// schedule (Visit edges person -> location carrying [start, end] minutes).
// Each day, every location looks at its visitors, and each susceptible
// visitor gets one Bernoulli(theta) trial per overlapping infectious
// visitor. Transmissions become Infection edges location -> person, which
// the persons read to update their health.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "gdsim/aggregate.hpp"
#include "gdsim/simulation.hpp"

namespace gdsim::models {

enum Health : std::int64_t { Susceptible = 0, Infectious = 1 };

struct Visit {
  std::size_t person = 0;
  std::size_t location = 0;
  std::int64_t start = 0;  // minutes, inclusive
  std::int64_t end = 0;    // minutes, inclusive
};

/// Closed-interval overlap.
inline bool visits_overlap(std::int64_t s1, std::int64_t e1, std::int64_t s2, std::int64_t e2) {
  return s1 <= e2 && s2 <= e1;
}

struct EpiConfig {
  std::size_t persons = 0;
  std::size_t locations = 0;
  std::vector<Visit> schedule;
  double theta = 0.0;
  std::vector<std::size_t> initially_infected;
  std::uint64_t seed = 0;
  bool hints = true;
  CheckMode checks = CheckMode::On;
};

struct EpiModel {
  Simulation sim;
  AgentTypeTag person;
  AgentTypeTag location;
  EdgeTypeTag visit;
  EdgeTypeTag infection;
  std::vector<AgentId> persons;
  std::vector<AgentId> locations;
  TransitionSpec transmit;
  TransitionSpec update;
};

inline Schema epi_schema(bool hints) {
  Schema schema;
  schema.register_agent_type(
      {"Person", {{"health", ScalarKind::Enum}, {"infected_day", ScalarKind::Int64}}, hints});
  schema.register_agent_type({"Location", {}, hints});
  schema.register_edge_type(
      {"Visit", {{"start", ScalarKind::Int64}, {"end", ScalarKind::Int64}}, {}, std::nullopt});
  EdgeTypeDecl infection{"Infection", {{"day", ScalarKind::Int64}, {"infector", ScalarKind::Int64}}, {}, std::nullopt};
  if (hints) {
    infection.hints = HintSet{EdgeHint::SingleType};
    infection.single_type_target = "Person";
  }
  schema.register_edge_type(infection);
  return schema;
}

/// Location transition: emits at most one Infection edge per susceptible
/// visitor.
inline auto epi_transmit(EdgeTypeTag visit, EdgeTypeTag infection) {
  return [visit, infection](TransitionContext& ctx) {
    const double theta = ctx.params().get("theta");
    struct Seen {
      AgentId person;
      std::int64_t start, end;
      bool infectious;
    };
    std::vector<Seen> seen;
    for (EdgeRecord e : ctx.edges_to(visit)) {
      const auto st = e.state();
      seen.push_back({e.source(), st.i64(0), st.i64(1), ctx.source_state(e).i64(0) == Infectious});
    }
    std::vector<AgentId> infected;
    for (const Seen& s : seen) {
      if (s.infectious) continue;
      if (std::find(infected.begin(), infected.end(), s.person) != infected.end()) continue;
      for (const Seen& i : seen) {
        if (!i.infectious || i.person == s.person) continue;
        if (!visits_overlap(s.start, s.end, i.start, i.end)) continue;
        if (ctx.rng().bernoulli(theta)) {
          ctx.add_edge(infection, s.person, ctx.self(),
                       {Value(ctx.step()), Value(static_cast<std::int64_t>(i.person.canonical_key()))});
          infected.push_back(s.person);
          break;
        }
      }
    }
  };
}

/// Person transition: becomes infectious when any Infection edge arrived.
inline auto epi_update(EdgeTypeTag infection) {
  return [infection](TransitionContext& ctx) {
    if (ctx.state().i64(0) == Susceptible && ctx.has_edge(infection)) {
      ctx.keep_self({Value(std::int64_t{Infectious}), Value(ctx.step())});
    } else {
      ctx.keep_self();
    }
  };
}

inline EpiModel make_epi(const EpiConfig& cfg) {
  if (!(cfg.theta >= 0.0 && cfg.theta <= 1.0)) fail(ErrorCode::InvalidArgument, "theta must be in [0, 1]");
  EpiModel m{Simulation(epi_schema(cfg.hints), cfg.seed), {}, {}, {}, {}, {}, {}, {}, {}};
  const Schema& schema = m.sim.schema();
  m.person = schema.agent_tag("Person");
  m.location = schema.agent_tag("Location");
  m.visit = schema.edge_tag("Visit");
  m.infection = schema.edge_tag("Infection");
  m.sim.checks().mode = cfg.checks;
  m.sim.set_param("theta", cfg.theta);
  std::vector<bool> seeded(cfg.persons, false);
  for (std::size_t p : cfg.initially_infected) {
    if (p >= cfg.persons) fail(ErrorCode::InvalidArgument, "initially infected person " + std::to_string(p));
    seeded[p] = true;
  }
  for (std::size_t p = 0; p < cfg.persons; ++p) {
    const std::int64_t h = seeded[p] ? Infectious : Susceptible;
    m.persons.push_back(m.sim.add_agent(m.person, {Value(h), Value(std::int64_t{-1})}));
  }
  for (std::size_t l = 0; l < cfg.locations; ++l) m.locations.push_back(m.sim.add_agent(m.location, {}));
  for (const Visit& v : cfg.schedule) {
    if (v.person >= cfg.persons || v.location >= cfg.locations) {
      fail(ErrorCode::InvalidArgument, "visit references an unknown person or location");
    }
    if (v.end < v.start) fail(ErrorCode::InvalidArgument, "visit ends before it starts");
    m.sim.add_edge(m.visit, m.locations[v.location], m.persons[v.person], {Value(v.start), Value(v.end)});
  }
  m.sim.finish_init();
  m.transmit = TransitionSpec{"transmit", {"Location"}, {"Visit", "Person"}, {"Infection"}, {}};
  m.update = TransitionSpec{"update", {"Person"}, {"Infection"}, {"Person"}, {}};
  return m;
}

/// One day: transmission at locations, then the health update.
inline void epi_day(EpiModel& m, const ExecutionOptions& options = {}) {
  m.sim.apply_transition(epi_transmit(m.visit, m.infection), m.transmit, options);
  m.sim.apply_transition(epi_update(m.infection), m.update, options);
  m.sim.finalize_step();
}

struct EpiMetrics {
  std::size_t susceptible = 0;
  std::size_t infected = 0;
  std::size_t new_infections = 0;
};

/// Counts after the most recent day.
inline EpiMetrics epi_metrics(const EpiModel& m) {
  const std::int64_t last_day = m.sim.step() - 1;
  auto is_infected = [](const StateView& s) { return s.i64(0) == Infectious ? 1.0 : 0.0; };
  auto is_new = [last_day](const StateView& s) {
    return s.i64(0) == Infectious && s.i64(1) == last_day && last_day >= 0 ? 1.0 : 0.0;
  };
  EpiMetrics out;
  out.infected = static_cast<std::size_t>(aggregate(m.sim, m.person, is_infected, Reduce::Sum));
  out.susceptible = m.sim.num_alive(m.person) - out.infected;
  out.new_infections = static_cast<std::size_t>(aggregate(m.sim, m.person, is_new, Reduce::Sum));
  return out;
}

inline std::vector<bool> infected_persons(const EpiModel& m) {
  std::vector<bool> out;
  out.reserve(m.persons.size());
  for (AgentId p : m.persons) out.push_back(m.sim.agent_state(p).i64(0) == Infectious);
  return out;
}

/// Random daily schedule: each person makes 0..max_visits visits to uniform
/// locations; intervals lie within one day.
inline std::vector<Visit> random_schedule(std::size_t persons, std::size_t locations, std::uint64_t seed,
                                          std::size_t max_visits = 3) {
  std::vector<Visit> out;
  if (locations == 0) return out;
  Rng rng(splitmix64(seed ^ 0x9d2c5680a1b3e7f1ull));
  for (std::size_t p = 0; p < persons; ++p) {
    const std::size_t visits = rng.below(max_visits + 1);
    for (std::size_t v = 0; v < visits; ++v) {
      const auto start = static_cast<std::int64_t>(rng.below(1440));
      const auto length = static_cast<std::int64_t>(rng.below(240));
      out.push_back({p, rng.below(locations), start, std::min<std::int64_t>(1439, start + length)});
    }
  }
  return out;
}

namespace detail {

inline bool parse_u64_field(std::string_view s, std::uint64_t& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// Reads person_id,location_id,start_minute,end_minute rows. A first line
/// that does not parse as numbers is taken as a header.
inline std::vector<Visit> read_schedule_csv(std::istream& in) {
  std::vector<Visit> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::uint64_t f[4];
    std::size_t n = 0;
    std::string_view rest(line);
    bool ok = true;
    while (ok) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      if (n == 4 || !detail::parse_u64_field(field, f[n])) ok = false;
      ++n;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    ok = ok && n == 4;
    if (!ok) {
      if (line_no == 1 && out.empty()) continue;
      fail(ErrorCode::InvalidArgument, "schedule line " + std::to_string(line_no) + ": expected 4 integers");
    }
    if (f[3] < f[2]) fail(ErrorCode::InvalidArgument, "schedule line " + std::to_string(line_no) + ": end < start");
    out.push_back({static_cast<std::size_t>(f[0]), static_cast<std::size_t>(f[1]), static_cast<std::int64_t>(f[2]),
                   static_cast<std::int64_t>(f[3])});
  }
  return out;
}

inline void write_schedule_csv(std::ostream& out, const std::vector<Visit>& schedule) {
  out << "person_id,location_id,start_minute,end_minute\n";
  for (const Visit& v : schedule) out << v.person << ',' << v.location << ',' << v.start << ',' << v.end << '\n';
}

}  // namespace gdsim::models
