#ifndef QROUTESIM_IO_HPP
#define QROUTESIM_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qroutesim/engine.hpp"
#include "qroutesim/harness.hpp"

namespace qroutesim {

// All CSVs: header row, LF endings, '.' decimal separator, reals with six
// decimals, empty field for gaps.

void write_curve_csv(std::ostream& out, const LearningCurve& curve);
void write_deliveries_csv(std::ostream& out,
                          const std::vector<DeliveryRecord>& records);
// per-step counters; the window column is filled on the step that
// completes a window
void write_metrics_csv(std::ostream& out, const std::vector<StepReport>& reports,
                       const LearningCurve& curve);
void write_comparison_csv(std::ostream& out, const ComparisonResult& result);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// Link schedule file: "<step> up|down <u> <v>" per line, '#' comments.
std::vector<LinkEvent> load_events(std::istream& in);
std::vector<LinkEvent> load_events(const std::string& path);

// Experiment config file (JSON). Every field optional; flags take
// precedence when both are given.
struct ExperimentFileConfig {
  std::optional<std::string> topology;  // "grid6x6" or a topology file path
  std::optional<std::vector<std::string>> policies;
  std::optional<double> load;
  std::optional<std::vector<double>> loads;
  std::optional<std::int64_t> steps;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<std::string> tie_break;
  std::optional<std::int64_t> window;
  std::optional<std::string> injection;
  std::optional<std::vector<LinkEvent>> events;
};

ExperimentFileConfig load_experiment_config(const std::string& path);

std::uint64_t fnv1a64(std::string_view data);

// manifest.json: version, config fingerprint, seeds, policies
void write_manifest(std::ostream& out, const std::string& command,
                    const std::string& canonical_config,
                    const std::vector<std::uint64_t>& seeds,
                    const std::vector<PolicyKind>& policies);

std::string version_string();

std::string format_real(double value);  // fixed, six decimals

}  // namespace qroutesim

#endif
