#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "radloc/diagnostics.hpp"
#include "radloc/filter.hpp"
#include "radloc/mobility.hpp"

namespace radloc {

enum class PriorKind { Box, Hull, Kde };
enum class BinMode { Bin12, Total };

/// One experiment definition: world, detector network, inference settings and
/// (optionally) the true source and a mobility policy.
struct Scenario {
  Scene scene;
  std::vector<DetectorSpec> detectors;
  std::vector<std::string> detector_ids;
  std::optional<Particle> source_truth;
  ForwardModel model = ForwardModel::QA;
  LikelihoodMode likelihood = LikelihoodMode::poisson();
  PriorKind prior = PriorKind::Box;
  int n_particles = 1000;
  double resample_fraction = 0.6;
  int n_frames = 100;
  std::uint64_t seed = 1;
  bool background_in_model = true;
  int kde_fit_start = 10;
  int kde_refresh = 3;
  std::optional<MoveConfig> mobility;
};

/// Cross-field invariants; throws ConfigError naming the offending field.
void validate(const Scenario &s);

/// Parses and fully validates a scenario file. Unknown sections or keys are
/// rejected with the line number.
Scenario load_scenario(const std::filesystem::path &path);

/// Canonical emission; load_scenario(save_scenario(s)) round-trips.
void save_scenario(const Scenario &s, const std::filesystem::path &path);

/// The filter-facing view of a scenario. Hull priors are built from the
/// detector positions; prior kind Kde means hull initialization plus
/// KDE-refreshed importance sampling.
RunConfig to_run_config(const Scenario &s);

struct CountsData {
  std::vector<MeasurementFrame> frames;
  std::vector<std::string> detector_ids; // order of first appearance
};

/// Reads a counts table (either the scalar `counts` schema or 21 spectral
/// bins). Bin mode selects the cesium photopeak bin (bin_12) or row totals.
CountsData ingest_counts(const std::filesystem::path &path, BinMode bin_mode);

void write_counts_csv(const std::filesystem::path &path,
                      const std::vector<std::string> &detector_ids,
                      const std::vector<MeasurementFrame> &frames);

/// Per-detector background mean: each detector is matched to its nearest
/// background detector by Euclidean distance (ties to the lowest index) and
/// takes the time-average of that detector's background counts.
std::vector<double> match_background(std::span<const DetectorSpec> dets,
                                     std::span<const DetectorSpec> bg_dets,
                                     std::span<const MeasurementFrame> bg_frames);

struct ExportInputs {
  const RunResult &run;
  const Scenario &scenario;
  std::uint64_t seed = 0; // effective seed, echoed into the summary
  const std::vector<std::vector<Point2>> *detector_history = nullptr;
};

/// Writes particles.csv, summary.json, scatter.svg and (when a detector
/// history is present) detectors.csv into out_dir.
void export_results(const ExportInputs &in,
                    const std::filesystem::path &out_dir);

/// report.json plus a readable report.txt.
void write_convergence_report(const ConvergenceReport &report,
                              const std::filesystem::path &out_dir);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Activity magnitude with an optional Ci/mCi/uCi/Bq suffix, converted to Bq
/// at 3.7e10 Bq/Ci.
double parse_intensity(const std::string &text);

} // namespace radloc
