#pragma once

// Command implementations behind the gdsim executable. Each command writes
// CSV to a stream and returns a process exit code.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "gdsim/bench.hpp"
#include "gdsim/models/epidemic.hpp"
#include "gdsim/models/hk.hpp"
#include "gdsim/parallel.hpp"

namespace gdsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitContract = 1;
inline constexpr int kExitConfig = 2;

enum class Model { Hk, Episim };

struct RunConfig {
  Model model = Model::Hk;
  std::int64_t steps = 10;
  std::vector<std::uint32_t> workers{1};
  std::uint64_t seed = 0;
  CheckMode checks = CheckMode::On;
  bool hints = true;
  PartitionStrategy partition = PartitionStrategy::ContiguousBlock;
  // hk
  models::HkTopology topology = models::HkTopology::Complete;
  double epsilon = 0.2;
  std::size_t n = 1000;
  std::size_t k = 10;
  std::size_t cliques = 10;
  std::size_t clique_size = 10;
  // episim (n is the number of persons)
  double theta = 0.05;
  std::size_t locations = 50;
  std::size_t initial_infected = 1;
  std::string schedule;
  // microbench
  std::size_t calls = 10'000'000;
  std::string out;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view s) {
  T v{};
  const std::string t = trim(s);
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    fail(ErrorCode::InvalidArgument, "bad value '" + std::string(s) + "' for " + std::string(key));
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view s) {
  const std::string t = trim(s);
  if (t == "on" || t == "true" || t == "1" || t == "yes") return true;
  if (t == "off" || t == "false" || t == "0" || t == "no") return false;
  fail(ErrorCode::InvalidArgument, "bad value '" + t + "' for " + std::string(key));
}

inline std::string format(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int precision) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, ptr);
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  auto [ptr, ec] = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, ptr);
  return std::string(16 - s.size(), '0') + s;
}

}  // namespace detail

inline std::string_view to_string(Model m) { return m == Model::Hk ? "hk" : "episim"; }

/// Applies one key=value setting. Keys match the long flag names; '-' and
/// '_' are interchangeable.
inline void set_option(RunConfig& c, std::string key, std::string_view value) {
  for (char& ch : key) ch = ch == '_' ? '-' : ch;
  const std::string v = detail::trim(value);
  if (key == "model") {
    if (v == "hk") c.model = Model::Hk;
    else if (v == "episim") c.model = Model::Episim;
    else fail(ErrorCode::InvalidArgument, "unknown model '" + v + "'");
  } else if (key == "steps") {
    c.steps = detail::parse_number<std::int64_t>(key, v);
  } else if (key == "workers") {
    c.workers.clear();
    std::string_view rest(v);
    while (true) {
      const auto comma = rest.find(',');
      c.workers.push_back(detail::parse_number<std::uint32_t>(key, rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  } else if (key == "seed") {
    c.seed = detail::parse_number<std::uint64_t>(key, v);
  } else if (key == "checks") {
    c.checks = parse_check_mode(v);
  } else if (key == "hints") {
    c.hints = detail::parse_bool(key, v);
  } else if (key == "partition") {
    c.partition = parse_partition_strategy(v);
  } else if (key == "topology") {
    c.topology = models::parse_hk_topology(v);
  } else if (key == "epsilon") {
    c.epsilon = detail::parse_number<double>(key, v);
  } else if (key == "n") {
    c.n = detail::parse_number<std::size_t>(key, v);
  } else if (key == "k") {
    c.k = detail::parse_number<std::size_t>(key, v);
  } else if (key == "cliques") {
    c.cliques = detail::parse_number<std::size_t>(key, v);
  } else if (key == "clique-size") {
    c.clique_size = detail::parse_number<std::size_t>(key, v);
  } else if (key == "theta") {
    c.theta = detail::parse_number<double>(key, v);
  } else if (key == "locations") {
    c.locations = detail::parse_number<std::size_t>(key, v);
  } else if (key == "initial-infected") {
    c.initial_infected = detail::parse_number<std::size_t>(key, v);
  } else if (key == "schedule") {
    c.schedule = v;
  } else if (key == "calls") {
    c.calls = detail::parse_number<std::size_t>(key, v);
  } else if (key == "out") {
    c.out = v;
  } else {
    fail(ErrorCode::UnknownName, "unknown config key '" + key + "'");
  }
}

/// Reads flat key=value lines; '#' starts a comment.
inline void load_config(RunConfig& c, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::InvalidArgument, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    set_option(c, detail::trim(t.substr(0, eq)), t.substr(eq + 1));
  }
}

inline void load_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InvalidArgument, "cannot open config file '" + path + "'");
  load_config(c, in);
}

/// Inverse of load_config.
inline std::string to_config_text(const RunConfig& c) {
  std::ostringstream o;
  std::string workers;
  for (std::size_t i = 0; i < c.workers.size(); ++i) workers += (i ? "," : "") + std::to_string(c.workers[i]);
  o << "model=" << to_string(c.model) << '\n'
    << "steps=" << c.steps << '\n'
    << "workers=" << workers << '\n'
    << "seed=" << c.seed << '\n'
    << "checks=" << to_string(c.checks) << '\n'
    << "hints=" << (c.hints ? "on" : "off") << '\n'
    << "partition=" << to_string(c.partition) << '\n'
    << "topology=" << models::to_string(c.topology) << '\n'
    << "epsilon=" << detail::format(c.epsilon) << '\n'
    << "n=" << c.n << '\n'
    << "k=" << c.k << '\n'
    << "cliques=" << c.cliques << '\n'
    << "clique-size=" << c.clique_size << '\n'
    << "theta=" << detail::format(c.theta) << '\n'
    << "locations=" << c.locations << '\n'
    << "initial-infected=" << c.initial_infected << '\n'
    << "calls=" << c.calls << '\n';
  if (!c.schedule.empty()) o << "schedule=" << c.schedule << '\n';
  if (!c.out.empty()) o << "out=" << c.out << '\n';
  return o.str();
}

inline void validate(const RunConfig& c) {
  if (c.steps < 1) fail(ErrorCode::InvalidArgument, "steps must be >= 1");
  if (c.workers.empty()) fail(ErrorCode::InvalidArgument, "workers must be nonempty");
  for (auto w : c.workers) {
    if (w < 1) fail(ErrorCode::InvalidArgument, "workers must be >= 1");
  }
}

inline models::HkConfig hk_config(const RunConfig& c) {
  models::HkConfig h;
  h.n = c.n;
  h.epsilon = c.epsilon;
  h.topology = c.topology;
  h.k = c.k;
  h.cliques = c.cliques;
  h.clique_size = c.clique_size;
  h.seed = c.seed;
  h.hints = c.hints;
  h.checks = c.checks;
  return h;
}

inline models::EpiConfig epi_config(const RunConfig& c) {
  models::EpiConfig e;
  e.persons = c.n;
  e.locations = c.locations;
  e.theta = c.theta;
  e.seed = c.seed;
  e.hints = c.hints;
  e.checks = c.checks;
  if (c.schedule.empty()) {
    e.schedule = models::random_schedule(c.n, c.locations, c.seed);
  } else {
    std::ifstream in(c.schedule);
    if (!in) fail(ErrorCode::InvalidArgument, "cannot open schedule '" + c.schedule + "'");
    e.schedule = models::read_schedule_csv(in);
    std::size_t persons = c.n, locations = c.locations;
    for (const auto& v : e.schedule) {
      persons = std::max(persons, v.person + 1);
      locations = std::max(locations, v.location + 1);
    }
    e.persons = persons;
    e.locations = locations;
  }
  if (c.initial_infected > e.persons) fail(ErrorCode::InvalidArgument, "initial-infected exceeds persons");
  // Seeds are a seeded random sample of persons.
  std::vector<std::size_t> order(e.persons);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(splitmix64(c.seed ^ 0x1f83d9abfb41bd6bull));
  for (std::size_t i = 0; i < c.initial_infected; ++i) std::swap(order[i], order[i + rng.below(order.size() - i)]);
  e.initially_infected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(c.initial_infected));
  std::sort(e.initially_infected.begin(), e.initially_infected.end());
  return e;
}

/// One model instance driven step by step; hides the model choice from the
/// commands.
class ModelRunner {
 public:
  ModelRunner(const RunConfig& c, std::uint32_t workers) : model_(c.model) {
    if (model_ == Model::Hk) {
      hk_.emplace(models::make_hk(hk_config(c)));
    } else {
      epi_.emplace(models::make_epi(epi_config(c)));
    }
    if (workers > 1) sim().set_partition(partition_graph(sim(), workers, c.partition));
  }

  Simulation& sim() { return model_ == Model::Hk ? (*hk_).sim : (*epi_).sim; }

  void advance() {
    if (model_ == Model::Hk) models::hk_advance((*hk_));
    else models::epi_day((*epi_));
  }

  static std::string metrics_header(Model m) {
    return m == Model::Hk ? "min,max,mean,clusters" : "susceptible,infected,new_infections";
  }

  std::string metrics_row() {
    if (model_ == Model::Hk) {
      const auto x = models::hk_metrics((*hk_).sim, (*hk_).person);
      return detail::format(x.min) + ',' + detail::format(x.max) + ',' + detail::format(x.mean) + ',' +
             std::to_string(x.clusters);
    }
    const auto x = models::epi_metrics((*epi_));
    return std::to_string(x.susceptible) + ',' + std::to_string(x.infected) + ',' + std::to_string(x.new_infections);
  }

 private:
  Model model_;
  std::optional<models::HkModel> hk_;
  std::optional<models::EpiModel> epi_;
};

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << '\n';
    return kExitContract;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

inline void report_warnings(Simulation& sim, std::ostream& err) {
  for (const auto& r : sim.contract_reports()) err << "warning: " << r.describe() << '\n';
}

/// One CSV row per step: step, wall_ms and the model metrics.
inline int cmd_run(const RunConfig& c, std::ostream& out, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    validate(c);
    ModelRunner runner(c, c.workers.front());
    out << "step,wall_ms," << ModelRunner::metrics_header(c.model) << '\n';
    for (std::int64_t s = 0; s < c.steps; ++s) {
      runner.advance();
      const auto& m = runner.sim().step_metrics().back();
      out << m.step << ',' << detail::format_fixed(m.wall_ms, 3) << ',' << runner.metrics_row() << '\n';
    }
    report_warnings(runner.sim(), err);
    return kExitOk;
  });
}

/// One CSV row per worker count. Time covers transition steps only; the
/// speedup is relative to a single-worker run.
inline int cmd_scale(const RunConfig& c, std::ostream& out, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    validate(c);
    auto measure = [&](std::uint32_t w) {
      ModelRunner runner(c, w);
      for (std::int64_t s = 0; s < c.steps; ++s) runner.advance();
      double ms = 0.0;
      for (const auto& m : runner.sim().step_metrics()) ms += m.wall_ms;
      report_warnings(runner.sim(), err);
      return std::pair{ms, runner.sim().checksum()};
    };
    std::map<std::uint32_t, std::pair<double, std::uint64_t>> results;
    for (auto w : c.workers) results[w] = measure(w);
    if (!results.count(1)) results[1] = measure(1);
    const double base = results[1].first;
    out << "workers,wall_ms,speedup,checksum\n";
    for (auto w : c.workers) {
      const auto [ms, sum] = results[w];
      const double speedup = w == 1 ? 1.0 : (ms > 0.0 ? base / ms : 0.0);
      out << w << ',' << detail::format_fixed(ms, 3) << ',' << detail::format_fixed(speedup, 4) << ','
          << detail::hex64(sum) << '\n';
    }
    return kExitOk;
  });
}

/// Mean add_edge cost per storage plan.
inline int cmd_microbench(const RunConfig& c, std::ostream& out, std::ostream& err = std::cerr) {
  return guarded(err, [&] {
    MicrobenchConfig mb;
    mb.timed_calls = c.calls;
    mb.seed = c.seed;
    out << "edge_plan,ns_per_add\n";
    for (auto plan : all_edge_plans()) {
      const auto r = microbench_add_edge(plan, mb);
      out << to_string(plan) << ',' << detail::format_fixed(r.ns_per_add, 3) << '\n';
    }
    return kExitOk;
  });
}

}  // namespace gdsim::cli
