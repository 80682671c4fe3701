#ifndef QROUTESIM_HARNESS_HPP
#define QROUTESIM_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "qroutesim/engine.hpp"

namespace qroutesim {

struct ExperimentSpec {
  SimConfig base;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<PolicyKind> policies = {PolicyKind::q_routing,
                                      PolicyKind::cq_routing};

  void validate() const;  // seeds distinct and non-empty, valid base
};

// Pointwise mean of window averages across curves sharing one step grid.
// Gap points drop out of the mean; a step where every curve has a gap
// stays a gap. delivered counts are summed.
LearningCurve aggregate_curves(const std::vector<LearningCurve>& curves);

struct ComparisonResult {
  std::vector<PolicyKind> policies;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<LearningCurve>> per_seed;  // [policy][seed]
  std::vector<LearningCurve> aggregated;             // [policy]
};

// Runs every (policy, seed) pair; seed runs execute in parallel and are
// joined in a fixed order, so results are reproducible.
ComparisonResult run_comparison(const ExperimentSpec& spec);

struct SweepRow {
  PolicyKind policy;
  double load;
  double mean;     // steady-state mean delivery time, averaged over seeds
  double stderr_;  // standard error of the per-seed means
  int seed_count;  // seeds that delivered packets in the steady-state region
};

// Steady-state mean delivery time per (policy, load): deliveries in the
// final fifth of each run, averaged per seed and then across seeds.
std::vector<SweepRow> run_load_sweep(const std::vector<PolicyKind>& policies,
                                     const std::vector<double>& loads,
                                     const ExperimentSpec& spec);

// Mean delivery time of packets processed in the final fifth of a run;
// nullopt when nothing was delivered there.
std::optional<double> steady_state_mean(const std::vector<DeliveryRecord>& records,
                                        std::int64_t steps);

// Earliest step after which every later windowed mean stays at or below
// (1 + fraction) times the final window's mean. nullopt when the curve is
// still climbing at the end (its last fifth sits more than the tolerance
// above the fifth before it) or when every window is a gap.
std::optional<std::int64_t> settling_step(const LearningCurve& curve,
                                          double fraction = 0.10);

}  // namespace qroutesim

#endif
