// Conway's Game of Life on a periodic raster, written against the engine
// API directly. Prints the board every few generations.

#include <cstdlib>
#include <iostream>
#include <string>

#include "gdsim/gdsim.hpp"

int main(int argc, char** argv) {
  using namespace gdsim;
  const std::int64_t generations = argc > 1 ? std::atoll(argv[1]) : 8;
  const std::size_t rows = 12, cols = 24;

  Schema schema;
  const auto cell = schema.register_agent_type({"Cell", {{"alive", ScalarKind::Bool}}, true});
  const auto adj = schema.register_edge_type({"Adjacent", {}, HintSet{EdgeHint::Stateless}, std::nullopt});
  Simulation sim(std::move(schema), 1);

  // A glider in the top-left corner.
  auto glider = [](std::span<const std::int64_t> ix) {
    const auto r = ix[0], c = ix[1];
    const bool on = (r == 0 && c == 1) || (r == 1 && c == 2) || (r == 2 && c <= 2);
    return std::vector<Value>{Value(on)};
  };
  const RasterMap& grid = add_raster(sim, "board", {rows, cols}, cell, glider);
  connect_raster_neighbors(sim, grid, adj, RasterTopology::Moore, true);
  sim.finish_init();

  const TransitionSpec life{"life", {"Cell"}, {"Cell", "Adjacent"}, {"Cell"}, {}};
  auto rule = [adj](TransitionContext& ctx) {
    int live = 0;
    for (EdgeRecord e : ctx.edges_to(adj)) live += ctx.source_state(e).flag(0) ? 1 : 0;
    const bool was = ctx.state().flag(0);
    ctx.keep_self({Value(live == 3 || (was && live == 2))});
  };

  auto print = [&](const Simulation& s) {
    std::cout << "generation " << s.step() << ", population "
              << aggregate(s, cell, [](const StateView& v) { return v.flag(0) ? 1.0 : 0.0; }, Reduce::Sum) << '\n';
    for (std::size_t r = 0; r < rows; ++r) {
      std::string line;
      for (std::size_t c = 0; c < cols; ++c) {
        const auto id = cell_id(grid, {static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)});
        line += s.agent_state(id).flag(0) ? '#' : '.';
      }
      std::cout << line << '\n';
    }
  };

  print(sim);
  StepProgram program{{ProgramStep{rule, life}}, [&](Simulation& s) {
                        if (s.step() % 4 == 0) print(s);
                      }, {}};
  run(sim, generations, program);
  return 0;
}
