#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "gdsim/simulation.hpp"

namespace gdsim {

struct ProgramStep {
  TransitionFn fn;
  TransitionSpec spec;
};

/// Transitions applied in order every step, followed by an optional
/// control-thread hook (aggregation, globals updates, metrics).
struct StepProgram {
  std::vector<ProgramStep> transitions;
  std::function<void(Simulation&)> after_step;
  ExecutionOptions options;
};

inline void run(Simulation& sim, std::int64_t steps, const StepProgram& program) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "steps must be >= 1");
  for (std::int64_t s = 0; s < steps; ++s) {
    for (const auto& t : program.transitions) sim.apply_transition(t.fn, t.spec, program.options);
    sim.finalize_step();
    if (program.after_step) program.after_step(sim);
  }
}

}  // namespace gdsim
