#include "radloc/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <optional>

#include <CLI11.hpp>

#include "radloc/data_io.hpp"
#include "radloc/errors.hpp"

namespace radloc {

namespace {

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> n_particles;
  std::optional<int> frames;
  std::optional<std::string> model;
  std::optional<std::string> likelihood;
  std::optional<std::string> prior;
};

void add_overrides(CLI::App *cmd, CommonOverrides &ov) {
  cmd->add_option("--seed", ov.seed, "override the scenario seed");
  cmd->add_option("--n-particles", ov.n_particles,
                  "override the particle count");
  cmd->add_option("--frames", ov.frames, "override the frame count");
  cmd->add_option("--model", ov.model, "override the forward model (qa|rt)");
  cmd->add_option("--likelihood", ov.likelihood,
                  "override the likelihood (poisson|gaussian:SIGMA)");
  cmd->add_option("--prior", ov.prior, "override the prior (box|hull|kde)");
}

Scenario load_with_overrides(const std::string &path,
                             const CommonOverrides &ov) {
  Scenario s = load_scenario(path);
  if (ov.seed)
    s.seed = *ov.seed;
  if (ov.n_particles)
    s.n_particles = *ov.n_particles;
  if (ov.frames)
    s.n_frames = *ov.frames;
  if (ov.model) {
    if (*ov.model == "qa")
      s.model = ForwardModel::QA;
    else if (*ov.model == "rt")
      s.model = ForwardModel::RT;
    else
      throw ConfigError("--model expects qa or rt");
  }
  if (ov.likelihood) {
    if (*ov.likelihood == "poisson") {
      s.likelihood = LikelihoodMode::poisson();
    } else if (ov.likelihood->rfind("gaussian:", 0) == 0) {
      try {
        s.likelihood = LikelihoodMode::gaussian(std::stod(ov.likelihood->substr(9)));
      } catch (const std::exception &) {
        throw ConfigError("--likelihood gaussian:SIGMA needs a positive sigma");
      }
    } else {
      throw ConfigError("--likelihood expects poisson or gaussian:SIGMA");
    }
  }
  if (ov.prior) {
    if (*ov.prior == "box")
      s.prior = PriorKind::Box;
    else if (*ov.prior == "hull")
      s.prior = PriorKind::Hull;
    else if (*ov.prior == "kde")
      s.prior = PriorKind::Kde;
    else
      throw ConfigError("--prior expects box, hull or kde");
  }
  validate(s);
  return s;
}

const Particle &require_truth(const Scenario &s, const char *verb) {
  if (!s.source_truth)
    throw ConfigError(std::string(verb) +
                      " needs a scenario with a source (add 'source = x y "
                      "intensity' to [scene])");
  return *s.source_truth;
}

std::vector<MeasurementFrame> simulate_frames(const Scenario &s,
                                              RandomStream &rng) {
  const Particle &truth = require_truth(s, "simulation");
  std::vector<MeasurementFrame> frames;
  frames.reserve(static_cast<std::size_t>(s.n_frames));
  for (int k = 1; k <= s.n_frames; ++k)
    frames.push_back(
        simulate_observation(truth, s.detectors, s.scene, s.model, rng, k));
  return frames;
}

int cmd_simulate(const std::string &scenario_path, const std::string &out_dir,
                 const std::string &background_out, const CommonOverrides &ov) {
  const Scenario s = load_with_overrides(scenario_path, ov);
  require_truth(s, "simulate");

  RandomStream meas(s.seed, streams::kMeasurement);
  const std::vector<MeasurementFrame> frames = simulate_frames(s, meas);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw DataError("cannot create output directory: " + out_dir);
  write_counts_csv(std::filesystem::path(out_dir) / "counts.csv",
                   s.detector_ids, frames);

  if (!background_out.empty()) {
    // companion background-only dataset, 60 one-second-style frames
    RandomStream bg_rng(s.seed, streams::kBackground);
    std::vector<double> bg_means;
    for (const DetectorSpec &d : s.detectors)
      bg_means.push_back(d.background_rate * d.dwell);
    const std::vector<MeasurementFrame> bg_frames =
        augment_measurements(bg_means, 60, bg_rng);
    write_counts_csv(background_out, s.detector_ids, bg_frames);
  }
  std::printf("seed: %llu\n", static_cast<unsigned long long>(s.seed));
  std::printf("wrote %d frames to %s\n", s.n_frames,
              (std::filesystem::path(out_dir) / "counts.csv").c_str());
  return 0;
}

void report_final(const Scenario &s, const RunResult &run) {
  std::printf("seed: %llu\n", static_cast<unsigned long long>(s.seed));
  if (!run.summary_series.empty()) {
    const PosteriorSummary &fin = run.summary_series.back();
    std::printf("posterior mean: (%.3f, %.3f) m, %.4g Bq\n", fin.mean.x,
                fin.mean.y, fin.mean.intensity);
    if (s.source_truth)
      std::printf("final localization error: %.3f m\n",
                  localization_error(fin, *s.source_truth));
  }
}

int cmd_localize(const std::string &scenario_path, const std::string &out_dir,
                 const std::string &mobility_mode, const CommonOverrides &ov) {
  Scenario s = load_with_overrides(scenario_path, ov);
  const Particle truth = require_truth(s, "localize");

  if (mobility_mode == "off")
    s.mobility.reset();
  else if (mobility_mode == "mean-pursuit") {
    if (!s.mobility)
      s.mobility = MoveConfig{};
  } else if (mobility_mode == "kde") {
    if (!s.mobility)
      s.mobility = MoveConfig{};
    s.prior = PriorKind::Kde;
  } else if (!mobility_mode.empty()) {
    throw ConfigError("--mobility expects off, mean-pursuit or kde");
  }

  const RunConfig cfg = to_run_config(s);
  FilterStreams fs = FilterStreams::from_seed(s.seed);
  RandomStream meas(s.seed, streams::kMeasurement);

  if (s.mobility) {
    RandomStream mob(s.seed, streams::kMobility);
    const MobileRunResult res = run_sir_mobile(
        cfg, truth, s.n_frames, *s.mobility, RunOptions{}, fs, meas, mob);
    export_results(
        ExportInputs{res.run, s, s.seed, &res.detector_history}, out_dir);
    report_final(s, res.run);
  } else {
    const std::vector<MeasurementFrame> frames = simulate_frames(s, meas);
    const RunResult res = run_sir(cfg, frames, RunOptions{}, fs);
    export_results(ExportInputs{res, s, s.seed, nullptr}, out_dir);
    report_final(s, res);
  }
  return 0;
}

int cmd_replay(const std::string &scenario_path, const std::string &counts_path,
               const std::string &background_path,
               const std::string &background_layout_path,
               const std::string &out_dir, const std::string &bin_mode_name,
               int augment_n, const CommonOverrides &ov) {
  Scenario s = load_with_overrides(scenario_path, ov);
  if (augment_n < 0)
    throw ConfigError("--augment expects a nonnegative frame count");
  const BinMode bin_mode = [&] {
    if (bin_mode_name == "bin12")
      return BinMode::Bin12;
    if (bin_mode_name == "total")
      return BinMode::Total;
    throw ConfigError("--bin-mode expects bin12 or total");
  }();

  CountsData data = ingest_counts(counts_path, bin_mode);
  if (data.frames.empty())
    throw DataError("counts file holds no frames: " + counts_path);

  // reorder counts columns into scenario detector order
  std::vector<std::size_t> perm;
  perm.reserve(s.detector_ids.size());
  for (const std::string &id : s.detector_ids) {
    const auto it =
        std::find(data.detector_ids.begin(), data.detector_ids.end(), id);
    if (it == data.detector_ids.end())
      throw DataError("counts file is missing detector '" + id + "'");
    perm.push_back(static_cast<std::size_t>(it - data.detector_ids.begin()));
  }
  if (data.detector_ids.size() != s.detector_ids.size())
    throw DataError("counts file contains detectors unknown to the scenario");
  std::vector<MeasurementFrame> frames;
  frames.reserve(data.frames.size());
  for (const MeasurementFrame &f : data.frames) {
    MeasurementFrame g;
    g.time_index = f.time_index;
    g.counts.reserve(perm.size());
    for (std::size_t j : perm)
      g.counts.push_back(f.counts[j]);
    frames.push_back(std::move(g));
  }

  if (!background_path.empty()) {
    const CountsData bg = ingest_counts(background_path, bin_mode);
    if (bg.frames.empty())
      throw DataError("background file holds no frames: " + background_path);
    // background detector positions come from the background layout scenario
    // when given, otherwise ids are looked up in the replay scenario
    const Scenario bg_layout = background_layout_path.empty()
                                   ? s
                                   : load_scenario(background_layout_path);
    std::vector<DetectorSpec> bg_dets;
    for (const std::string &id : bg.detector_ids) {
      const auto it = std::find(bg_layout.detector_ids.begin(),
                                bg_layout.detector_ids.end(), id);
      if (it == bg_layout.detector_ids.end())
        throw DataError("background detector '" + id +
                        "' is unknown to the layout scenario");
      bg_dets.push_back(
          bg_layout.detectors[static_cast<std::size_t>(
              it - bg_layout.detector_ids.begin())]);
    }
    const std::vector<double> bg_means =
        match_background(s.detectors, bg_dets, bg.frames);
    RandomStream bg_rng(s.seed, streams::kBackground);
    for (MeasurementFrame &f : frames)
      f = subtract_background(f, bg_means, bg_rng);
  }

  if (augment_n > 0) {
    std::vector<double> base_means(s.detectors.size(), 0.0);
    for (const MeasurementFrame &f : frames)
      for (std::size_t j = 0; j < base_means.size(); ++j)
        base_means[j] += static_cast<double>(f.counts[j]);
    for (double &m : base_means)
      m /= static_cast<double>(frames.size());
    RandomStream aug_rng(s.seed, streams::kAugment);
    frames = augment_measurements(base_means, augment_n, aug_rng);
  }

  const RunConfig cfg = to_run_config(s);
  FilterStreams fs = FilterStreams::from_seed(s.seed);
  const RunResult res = run_sir(cfg, frames, RunOptions{}, fs);
  export_results(ExportInputs{res, s, s.seed, nullptr}, out_dir);
  report_final(s, res);
  return 0;
}

int cmd_diagnose(const std::string &scenario_path, const std::string &out_dir,
                 const std::string &phi_name, const std::string &n_list,
                 int seeds, int reference_n, const CommonOverrides &ov) {
  const Scenario s = load_with_overrides(scenario_path, ov);
  const Particle truth = require_truth(s, "diagnose");

  std::function<double(const Particle &)> phi;
  if (phi_name == "x")
    phi = [](const Particle &p) { return p.x; };
  else if (phi_name == "y")
    phi = [](const Particle &p) { return p.y; };
  else if (phi_name == "intensity")
    phi = [](const Particle &p) { return p.intensity; };
  else if (phi_name == "one")
    phi = [](const Particle &) { return 1.0; };
  else
    throw ConfigError("--phi expects x, y, intensity or one");

  std::vector<int> n_values;
  for (const std::string &tok : [&] {
         std::vector<std::string> out;
         std::string cur;
         for (char c : n_list) {
           if (c == ',') {
             out.push_back(cur);
             cur.clear();
           } else
             cur.push_back(c);
         }
         out.push_back(cur);
         return out;
       }()) {
    try {
      n_values.push_back(std::stoi(tok));
    } catch (const std::exception &) {
      throw ConfigError("--n expects a comma-separated list of integers");
    }
  }

  const RunConfig cfg = to_run_config(s);
  const RandomStream root(s.seed, streams::kDiagnostics);
  ConvergenceReport report = mse_slope_experiment(
      cfg, truth, s.n_frames, phi, n_values, reference_n, seeds, root);

  // one standard run for the radius statistics and the final error
  FilterStreams fs = FilterStreams::from_seed(s.seed);
  RandomStream meas(s.seed, streams::kMeasurement);
  const std::vector<MeasurementFrame> frames = simulate_frames(s, meas);
  const RunResult run = run_sir(cfg, frames, RunOptions{false}, fs);
  report.radius_monotone_fraction = radius_monotonicity_stat(run.r_series, 0.5);
  report.final_error_m =
      localization_error(run.summary_series.back(), truth);

  write_convergence_report(report, out_dir);
  std::printf("seed: %llu\n", static_cast<unsigned long long>(s.seed));
  std::printf("loglog_slope: %.4f\n", report.loglog_slope);
  for (std::size_t i = 0; i < report.n_values.size(); ++i)
    std::printf("N=%d mse=%.6g\n", report.n_values[i], report.mse_values[i]);
  std::printf("radius_monotone_fraction: %.4f\n",
              report.radius_monotone_fraction);
  std::printf("final_error_m: %.4f\n", report.final_error_m);
  return 0;
}

} // namespace

int run_cli(int argc, const char *const *argv) {
  CLI::App app{"SIR particle filter toolkit for radiation source localization"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, counts_path, background_path,
      background_layout_path;
  std::string mobility_mode, bin_mode_name = "bin12";
  std::string phi_name = "x", n_list = "100,400,1600";
  int seeds = 10, reference_n = 102400, augment_n = 0;
  std::string background_out;

  CommonOverrides ov_sim, ov_loc, ov_rep, ov_diag;

  CLI::App *sim = app.add_subcommand(
      "simulate", "generate a counts file from a scenario's source");
  sim->add_option("--scenario", scenario_path, "scenario file")->required();
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--background", background_out,
                  "also write a background-only counts file here");
  add_overrides(sim, ov_sim);

  CLI::App *loc = app.add_subcommand(
      "localize", "simulate measurements and run the filter");
  loc->add_option("--scenario", scenario_path, "scenario file")->required();
  loc->add_option("--out", out_dir, "output directory")->required();
  loc->add_option("--mobility", mobility_mode,
                  "off, mean-pursuit or kde (overrides the scenario)");
  add_overrides(loc, ov_loc);

  CLI::App *rep = app.add_subcommand(
      "replay", "run the filter against a counts file");
  rep->add_option("--scenario", scenario_path, "scenario file")->required();
  rep->add_option("--counts", counts_path, "counts csv")->required();
  rep->add_option("--background", background_path,
                  "background counts csv to subtract");
  rep->add_option("--background-layout", background_layout_path,
                  "scenario file giving the background detector layout");
  rep->add_option("--out", out_dir, "output directory")->required();
  rep->add_option("--bin-mode", bin_mode_name, "bin12 or total");
  rep->add_option("--augment", augment_n,
                  "replace the data with this many Poisson frames drawn "
                  "around the per-detector mean responses");
  add_overrides(rep, ov_rep);

  CLI::App *diag = app.add_subcommand(
      "diagnose", "particle-count scaling and radius shrinkage reports");
  diag->add_option("--scenario", scenario_path, "scenario file")->required();
  diag->add_option("--out", out_dir, "output directory")->required();
  diag->add_option("--phi", phi_name, "test function: x, y, intensity or one");
  diag->add_option("--n", n_list, "comma-separated particle counts");
  diag->add_option("--seeds", seeds, "seed suite size");
  diag->add_option("--reference-n", reference_n,
                   "particle count of the reference run");
  add_overrides(diag, ov_diag);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(scenario_path, out_dir, background_out, ov_sim);
    if (loc->parsed())
      return cmd_localize(scenario_path, out_dir, mobility_mode, ov_loc);
    if (rep->parsed())
      return cmd_replay(scenario_path, counts_path, background_path,
                        background_layout_path, out_dir, bin_mode_name,
                        augment_n, ov_rep);
    if (diag->parsed())
      return cmd_diagnose(scenario_path, out_dir, phi_name, n_list, seeds,
                          reference_n, ov_diag);
    return 2;
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError &e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const DegenerateLikelihoodError &e) {
    std::fprintf(stderr, "degenerate likelihood: %s\n", e.what());
    return 4;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

int run_cli(const std::vector<std::string> &args) {
  std::vector<const char *> argv;
  argv.push_back("radloc");
  for (const std::string &a : args)
    argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace radloc
