#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "kasner/config.hpp"
#include "kasner/io.hpp"

namespace kasner {

/// Background from the config: the searched vacuum exponents or the given
/// ones. Throws ConfigError if the search fails or the relations do not hold.
KasnerData resolve_background(const RunConfig& cfg);

/// Stability parameters from the config, or the midpoint of the admissible
/// window. When neither is admissible the weights fall back to q = 1,
/// sigma = 0.05 and `fallback` is set.
StabilityParams resolve_stability(const RunConfig& cfg, const KasnerData& background,
                                  bool& fallback);

/// Initial state at t = 1 for the config. Throws ConfigError for invalid
/// data and LapseError if the first lapse solve fails.
ReducedState build_initial_state(const RunConfig& cfg, const KasnerData& background);

struct RunOutcome {
  int exit_code = 0;  // 0 finished, 1 solver abort
  std::string message;
  long steps = 0;
  double t_reached = 1.0;
  double max_t4K = 0.0;
  std::optional<FinalState> final_state;
  Summary summary;
};

/// Runs the configured evolution and writes into cfg.output_dir:
///   diagnostics.csv    one row every evolve.snapshot_every steps and at the end
///   snapshot_final.snap (or snapshot_last_good.snap on abort)
///   summary.txt        config, seed, final exponents and residuals
/// Final Kasner data are extrapolated from states at t_final / ratio^j,
/// j < final.count. Throws ConfigError for invalid settings or data.
RunOutcome run_simulation(const RunConfig& cfg, std::ostream* log = nullptr);

}  // namespace kasner
