#include "radloc/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "radloc/errors.hpp"

namespace radloc {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string &s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos)
    return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_ws(const std::string &s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok)
    out.push_back(tok);
  return out;
}

std::vector<std::string> split_char(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double_strict(const std::string &s, const std::string &what) {
  const std::string t = trim(s);
  char *end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw std::invalid_argument("bad numeric value for " + what + ": '" + s +
                                "'");
  return v;
}

long long parse_int_strict(const std::string &s, const std::string &what) {
  const std::string t = trim(s);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size())
    throw std::invalid_argument("bad integer value for " + what + ": '" + s +
                                "'");
  return v;
}

} // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

double parse_intensity(const std::string &text) {
  const std::string t = trim(text);
  char *end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end == t.c_str())
    throw std::invalid_argument("bad intensity value: '" + text + "'");
  const std::string suffix = trim(std::string(end));
  if (!std::isfinite(v))
    throw std::invalid_argument("bad intensity value: '" + text + "'");
  if (suffix.empty() || suffix == "Bq")
    return v;
  if (suffix == "Ci")
    return v * 3.7e10;
  if (suffix == "mCi")
    return v * 3.7e7;
  if (suffix == "uCi")
    return v * 3.7e4;
  throw std::invalid_argument("unknown intensity unit '" + suffix + "' in '" +
                              text + "'");
}

void validate(const Scenario &s) {
  if (s.detectors.empty())
    throw ConfigError("scenario has no detectors");
  if (s.detector_ids.size() != s.detectors.size())
    throw ConfigError("detector ids do not match detector count");
  for (std::size_t i = 0; i < s.detector_ids.size(); ++i)
    for (std::size_t j = i + 1; j < s.detector_ids.size(); ++j)
      if (s.detector_ids[i] == s.detector_ids[j])
        throw ConfigError("duplicate detector id '" + s.detector_ids[i] + "'");
  for (std::size_t i = 0; i < s.detectors.size(); ++i) {
    try {
      validate(s.detectors[i]);
    } catch (const std::invalid_argument &e) {
      throw ConfigError("detector '" + s.detector_ids[i] + "': " + e.what());
    }
    if (!s.scene.bounds().contains(s.detectors[i].position))
      throw ConfigError("detector '" + s.detector_ids[i] +
                        "' lies outside the scene bounds");
  }
  if (s.n_particles < 2)
    throw ConfigError("invariant violation: n_particles must be >= 2");
  if (!(s.resample_fraction > 0.0) || !(s.resample_fraction < 1.0))
    throw ConfigError(
        "invariant violation: resample_fraction must lie in (0, 1)");
  if (s.n_frames < 1)
    throw ConfigError("invariant violation: n_frames must be >= 1");
  if (s.kde_fit_start < 1 || s.kde_refresh < 1)
    throw ConfigError("invariant violation: kde_fit_start and kde_refresh "
                      "must be >= 1");
  if (s.likelihood.kind == LikelihoodMode::Kind::Gaussian &&
      !(s.likelihood.sigma > 0.0))
    throw ConfigError("invariant violation: gaussian sigma must be positive");
  if (s.source_truth) {
    if (!(s.source_truth->intensity > 0.0))
      throw ConfigError("invariant violation: source intensity must be > 0");
    if (!s.scene.bounds().contains(s.source_truth->position()))
      throw ConfigError("source lies outside the scene bounds");
  }
  if (s.mobility) {
    try {
      validate(*s.mobility);
    } catch (const std::invalid_argument &e) {
      throw ConfigError(std::string("invariant violation: ") + e.what());
    }
  }
}

namespace {

struct RawEntry {
  int line;
  std::string value;
};

using SectionMap = std::map<std::string, std::vector<RawEntry>>;

const std::map<std::string, std::vector<std::string>> kKnownKeys = {
    {"scene", {"bounds", "intensity_range", "source"}},
    {"buildings", {"building"}},
    {"detectors", {"detector"}},
    {"filter",
     {"n_particles", "resample_fraction", "prior", "likelihood", "model",
      "seed", "n_frames", "background_in_model", "kde_fit_start",
      "kde_refresh"}},
    {"mobility", {"step_length", "cadence", "max_random_tries"}}};

ForwardModel parse_model(const std::string &v, int line) {
  if (v == "qa")
    return ForwardModel::QA;
  if (v == "rt")
    return ForwardModel::RT;
  throw ConfigError("line " + std::to_string(line) + ": unknown model '" + v +
                    "' (expected qa or rt)");
}

PriorKind parse_prior(const std::string &v, int line) {
  if (v == "box")
    return PriorKind::Box;
  if (v == "hull")
    return PriorKind::Hull;
  if (v == "kde")
    return PriorKind::Kde;
  throw ConfigError("line " + std::to_string(line) + ": unknown prior '" + v +
                    "' (expected box, hull or kde)");
}

LikelihoodMode parse_likelihood(const std::string &v, int line) {
  if (v == "poisson")
    return LikelihoodMode::poisson();
  if (v.rfind("gaussian:", 0) == 0) {
    try {
      return LikelihoodMode::gaussian(
          parse_double_strict(v.substr(9), "gaussian sigma"));
    } catch (const std::invalid_argument &e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  throw ConfigError("line " + std::to_string(line) + ": unknown likelihood '" +
                    v + "' (expected poisson or gaussian:SIGMA)");
}

bool parse_bool(const std::string &v, int line) {
  if (v == "true")
    return true;
  if (v == "false")
    return false;
  throw ConfigError("line " + std::to_string(line) + ": expected true/false, "
                    "got '" + v + "'");
}

} // namespace

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("cannot open scenario file: " + path.string());

  std::map<std::string, SectionMap> sections;
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos)
      line.erase(hash);
    line = trim(line);
    if (line.empty())
      continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      if (kKnownKeys.find(current) == kKnownKeys.end())
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unknown section [" + current + "]");
      sections[current]; // make the section exist even if empty
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    if (current.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": entry outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto &known = kKnownKeys.at(current);
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" +
                        key + "' in [" + current + "]");
    sections[current][key].push_back(RawEntry{lineno, value});
  }

  const auto require_section = [&sections](const std::string &name) {
    if (sections.find(name) == sections.end())
      throw ConfigError("missing required section [" + name + "]");
  };
  require_section("scene");
  require_section("detectors");
  require_section("filter");

  const auto get_one = [&sections](const std::string &sec, const std::string &key,
                                   bool required) -> const RawEntry * {
    const auto sit = sections.find(sec);
    if (sit != sections.end()) {
      const auto kit = sit->second.find(key);
      if (kit != sit->second.end()) {
        if (kit->second.size() > 1)
          throw ConfigError("line " + std::to_string(kit->second[1].line) +
                            ": duplicate key '" + key + "'");
        return &kit->second.front();
      }
    }
    if (required)
      throw ConfigError("missing required key '" + key + "' in [" + sec + "]");
    return nullptr;
  };

  const auto wrap = [](int line, const auto &fn) {
    try {
      return fn();
    } catch (const std::invalid_argument &e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  };

  // [scene]
  const RawEntry *bounds_e = get_one("scene", "bounds", true);
  const std::vector<std::string> bounds_tok = split_ws(bounds_e->value);
  if (bounds_tok.size() != 4)
    throw ConfigError("line " + std::to_string(bounds_e->line) +
                      ": bounds expects 'xmin ymin xmax ymax'");
  const double xmin = parse_double_strict(bounds_tok[0], "bounds");
  const double ymin = parse_double_strict(bounds_tok[1], "bounds");
  const double xmax = parse_double_strict(bounds_tok[2], "bounds");
  const double ymax = parse_double_strict(bounds_tok[3], "bounds");

  const RawEntry *ir_e = get_one("scene", "intensity_range", true);
  const std::vector<std::string> ir_tok = split_ws(ir_e->value);
  if (ir_tok.size() != 2)
    throw ConfigError("line " + std::to_string(ir_e->line) +
                      ": intensity_range expects 'min max'");
  const double imin = wrap(ir_e->line, [&] { return parse_intensity(ir_tok[0]); });
  const double imax = wrap(ir_e->line, [&] { return parse_intensity(ir_tok[1]); });

  // [buildings]
  std::vector<BuildingPolygon> buildings;
  if (sections.count("buildings")) {
    for (const RawEntry &e : sections["buildings"]["building"]) {
      const auto colon = e.value.find(':');
      if (colon == std::string::npos)
        throw ConfigError("line " + std::to_string(e.line) +
                          ": building expects 'mean_free_path : x,y x,y ...'");
      const double mfp =
          parse_double_strict(e.value.substr(0, colon), "mean_free_path");
      std::vector<Point2> verts;
      for (const std::string &pair : split_ws(e.value.substr(colon + 1))) {
        const std::vector<std::string> xy = split_char(pair, ',');
        if (xy.size() != 2)
          throw ConfigError("line " + std::to_string(e.line) +
                            ": building vertex expects 'x,y'");
        verts.push_back(Point2{parse_double_strict(xy[0], "vertex x"),
                               parse_double_strict(xy[1], "vertex y")});
      }
      wrap(e.line, [&] {
        buildings.emplace_back(std::move(verts), mfp);
        return 0;
      });
    }
  }

  // [detectors]
  std::vector<DetectorSpec> detectors;
  std::vector<std::string> detector_ids;
  for (const RawEntry &e : sections["detectors"]["detector"]) {
    const std::vector<std::string> tok = split_ws(e.value);
    if (tok.size() != 7)
      throw ConfigError("line " + std::to_string(e.line) +
                        ": detector expects 'id x y area efficiency dwell "
                        "background_rate'");
    DetectorSpec d;
    d.position = Point2{parse_double_strict(tok[1], "detector x"),
                        parse_double_strict(tok[2], "detector y")};
    d.area = parse_double_strict(tok[3], "detector area");
    d.efficiency = parse_double_strict(tok[4], "detector efficiency");
    d.dwell = parse_double_strict(tok[5], "detector dwell");
    d.background_rate = parse_double_strict(tok[6], "detector background_rate");
    detector_ids.push_back(tok[0]);
    detectors.push_back(d);
  }

  // [scene] source (after detectors so errors read naturally)
  std::optional<Particle> source;
  if (const RawEntry *se = get_one("scene", "source", false)) {
    const std::vector<std::string> tok = split_ws(se->value);
    if (tok.size() != 3)
      throw ConfigError("line " + std::to_string(se->line) +
                        ": source expects 'x y intensity'");
    source = Particle{parse_double_strict(tok[0], "source x"),
                      parse_double_strict(tok[1], "source y"),
                      wrap(se->line, [&] { return parse_intensity(tok[2]); })};
  }

  // [filter]
  const RawEntry *np_e = get_one("filter", "n_particles", true);
  const RawEntry *rf_e = get_one("filter", "resample_fraction", true);
  const RawEntry *prior_e = get_one("filter", "prior", true);
  const RawEntry *model_e = get_one("filter", "model", true);
  const RawEntry *seed_e = get_one("filter", "seed", true);
  const RawEntry *nf_e = get_one("filter", "n_frames", true);

  Scene scene = [&] {
    try {
      return Scene(BoundingBox{{xmin, ymin}, {xmax, ymax}},
                   std::move(buildings), IntensityRange{imin, imax});
    } catch (const std::invalid_argument &e) {
      throw ConfigError(std::string("scene: ") + e.what());
    }
  }();

  Scenario s{.scene = std::move(scene),
             .detectors = std::move(detectors),
             .detector_ids = std::move(detector_ids),
             .source_truth = source,
             .model = ForwardModel::QA,
             .likelihood = LikelihoodMode::poisson(),
             .prior = PriorKind::Box,
             .n_particles = 1000,
             .resample_fraction = 0.6,
             .n_frames = 100,
             .seed = 1,
             .background_in_model = true,
             .kde_fit_start = 10,
             .kde_refresh = 3,
             .mobility = std::nullopt};
  s.n_particles =
      static_cast<int>(parse_int_strict(np_e->value, "n_particles"));
  s.resample_fraction = parse_double_strict(rf_e->value, "resample_fraction");
  s.prior = parse_prior(prior_e->value, prior_e->line);
  s.model = parse_model(model_e->value, model_e->line);
  s.seed = static_cast<std::uint64_t>(parse_int_strict(seed_e->value, "seed"));
  s.n_frames = static_cast<int>(parse_int_strict(nf_e->value, "n_frames"));
  if (const RawEntry *e = get_one("filter", "likelihood", false))
    s.likelihood = parse_likelihood(e->value, e->line);
  if (const RawEntry *e = get_one("filter", "background_in_model", false))
    s.background_in_model = parse_bool(e->value, e->line);
  if (const RawEntry *e = get_one("filter", "kde_fit_start", false))
    s.kde_fit_start = static_cast<int>(parse_int_strict(e->value, "kde_fit_start"));
  if (const RawEntry *e = get_one("filter", "kde_refresh", false))
    s.kde_refresh = static_cast<int>(parse_int_strict(e->value, "kde_refresh"));

  if (sections.count("mobility")) {
    MoveConfig mc;
    if (const RawEntry *e = get_one("mobility", "step_length", false))
      mc.step_length = parse_double_strict(e->value, "step_length");
    if (const RawEntry *e = get_one("mobility", "cadence", false))
      mc.cadence = static_cast<int>(parse_int_strict(e->value, "cadence"));
    if (const RawEntry *e = get_one("mobility", "max_random_tries", false))
      mc.max_random_tries =
          static_cast<int>(parse_int_strict(e->value, "max_random_tries"));
    s.mobility = mc;
  }

  validate(s);
  return s;
}

void save_scenario(const Scenario &s, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write scenario file: " + path.string());
  out << "[scene]\n";
  out << "bounds = " << format_double(s.scene.bounds().lo.x) << ' '
      << format_double(s.scene.bounds().lo.y) << ' '
      << format_double(s.scene.bounds().hi.x) << ' '
      << format_double(s.scene.bounds().hi.y) << '\n';
  out << "intensity_range = " << format_double(s.scene.intensity_range().min_bq)
      << ' ' << format_double(s.scene.intensity_range().max_bq) << '\n';
  if (s.source_truth)
    out << "source = " << format_double(s.source_truth->x) << ' '
        << format_double(s.source_truth->y) << ' '
        << format_double(s.source_truth->intensity) << '\n';
  if (!s.scene.buildings().empty()) {
    out << "\n[buildings]\n";
    for (const BuildingPolygon &b : s.scene.buildings()) {
      out << "building = " << format_double(b.mean_free_path()) << " :";
      for (const Point2 &p : b.vertices())
        out << ' ' << format_double(p.x) << ',' << format_double(p.y);
      out << '\n';
    }
  }
  out << "\n[detectors]\n";
  for (std::size_t i = 0; i < s.detectors.size(); ++i) {
    const DetectorSpec &d = s.detectors[i];
    out << "detector = " << s.detector_ids[i] << ' '
        << format_double(d.position.x) << ' ' << format_double(d.position.y)
        << ' ' << format_double(d.area) << ' ' << format_double(d.efficiency)
        << ' ' << format_double(d.dwell) << ' '
        << format_double(d.background_rate) << '\n';
  }
  out << "\n[filter]\n";
  out << "n_particles = " << s.n_particles << '\n';
  out << "resample_fraction = " << format_double(s.resample_fraction) << '\n';
  out << "prior = "
      << (s.prior == PriorKind::Box ? "box"
                                    : s.prior == PriorKind::Hull ? "hull" : "kde")
      << '\n';
  out << "likelihood = ";
  if (s.likelihood.kind == LikelihoodMode::Kind::Poisson)
    out << "poisson\n";
  else
    out << "gaussian:" << format_double(s.likelihood.sigma) << '\n';
  out << "model = " << (s.model == ForwardModel::QA ? "qa" : "rt") << '\n';
  out << "seed = " << s.seed << '\n';
  out << "n_frames = " << s.n_frames << '\n';
  out << "background_in_model = " << (s.background_in_model ? "true" : "false")
      << '\n';
  out << "kde_fit_start = " << s.kde_fit_start << '\n';
  out << "kde_refresh = " << s.kde_refresh << '\n';
  if (s.mobility) {
    out << "\n[mobility]\n";
    out << "step_length = " << format_double(s.mobility->step_length) << '\n';
    out << "cadence = " << s.mobility->cadence << '\n';
    out << "max_random_tries = " << s.mobility->max_random_tries << '\n';
  }
}

RunConfig to_run_config(const Scenario &s) {
  PriorSpec prior = UniformBoxPrior{};
  if (s.prior == PriorKind::Hull || s.prior == PriorKind::Kde) {
    std::vector<Point2> pts;
    pts.reserve(s.detectors.size());
    for (const DetectorSpec &d : s.detectors)
      pts.push_back(d.position);
    try {
      prior = UniformHullPrior{convex_hull(pts)};
    } catch (const std::invalid_argument &e) {
      throw ConfigError(std::string("hull prior: ") + e.what());
    }
  }
  return RunConfig{s.scene,
                   s.detectors,
                   s.model,
                   s.likelihood,
                   std::move(prior),
                   s.n_particles,
                   s.resample_fraction,
                   s.background_in_model,
                   s.prior == PriorKind::Kde,
                   s.kde_fit_start,
                   s.kde_refresh};
}

CountsData ingest_counts(const std::filesystem::path &path, BinMode bin_mode) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open counts file: " + path.string());

  CountsData data;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  bool bins_schema = false;

  std::vector<std::string> order;                       // first appearance
  std::map<std::string, std::size_t> index_of;
  std::vector<std::vector<std::pair<long long, std::int64_t>>> series;

  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty())
      continue;
    const std::vector<std::string> cells = split_char(t, ',');
    if (!have_header) {
      if (cells.size() == 3 && trim(cells[0]) == "time_s" &&
          trim(cells[1]) == "detector_id" && trim(cells[2]) == "counts") {
        bins_schema = false;
      } else if (cells.size() == 23 && trim(cells[0]) == "time_s" &&
                 trim(cells[1]) == "detector_id") {
        for (int b = 1; b <= 21; ++b) {
          char expect[8];
          std::snprintf(expect, sizeof(expect), "bin_%02d", b);
          if (trim(cells[static_cast<std::size_t>(b) + 1]) != expect)
            throw DataError("line " + std::to_string(lineno) +
                            ": schema error, expected header column " +
                            expect);
        }
        bins_schema = true;
      } else {
        throw DataError("line " + std::to_string(lineno) +
                        ": schema error, expected 'time_s,detector_id,counts' "
                        "or 'time_s,detector_id,bin_01..bin_21'");
      }
      have_header = true;
      continue;
    }

    const std::size_t expected_cells = bins_schema ? 23 : 3;
    if (cells.size() != expected_cells)
      throw DataError("line " + std::to_string(lineno) + ": schema error, got " +
                      std::to_string(cells.size()) + " columns, expected " +
                      std::to_string(expected_cells));

    long long time_s;
    try {
      time_s = parse_int_strict(cells[0], "time_s");
    } catch (const std::invalid_argument &e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string id = trim(cells[1]);
    if (id.empty())
      throw DataError("line " + std::to_string(lineno) + ": empty detector_id");

    std::int64_t value = 0;
    try {
      if (bins_schema) {
        std::int64_t total = 0, bin12 = 0;
        for (int b = 1; b <= 21; ++b) {
          const std::int64_t c = parse_int_strict(
              cells[static_cast<std::size_t>(b) + 1], "bin counts");
          if (c < 0)
            throw std::invalid_argument("negative counts");
          total += c;
          if (b == 12)
            bin12 = c;
        }
        value = bin_mode == BinMode::Bin12 ? bin12 : total;
      } else {
        value = parse_int_strict(cells[2], "counts");
        if (value < 0)
          throw std::invalid_argument("negative counts");
      }
    } catch (const std::invalid_argument &e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }

    auto it = index_of.find(id);
    if (it == index_of.end()) {
      it = index_of.emplace(id, order.size()).first;
      order.push_back(id);
      series.emplace_back();
    }
    auto &ts = series[it->second];
    if (!ts.empty() && time_s <= ts.back().first)
      throw DataError("line " + std::to_string(lineno) +
                      ": time must be strictly increasing for detector '" +
                      id + "'");
    ts.emplace_back(time_s, value);
  }

  if (order.empty())
    return data; // empty file: zero frames, no detectors

  // every detector must report at every time step
  std::vector<long long> times;
  for (const auto &ts : series)
    for (const auto &[t, v] : ts)
      times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  for (std::size_t j = 0; j < order.size(); ++j) {
    if (series[j].size() == times.size())
      continue;
    std::size_t pos = 0;
    for (long long t : times) {
      if (pos >= series[j].size() || series[j][pos].first != t)
        throw DataError("gap: detector '" + order[j] +
                        "' has no row at time " + std::to_string(t));
      ++pos;
    }
  }

  data.detector_ids = order;
  data.frames.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    MeasurementFrame f;
    f.time_index = static_cast<int>(k + 1);
    f.counts.reserve(order.size());
    for (std::size_t j = 0; j < order.size(); ++j)
      f.counts.push_back(series[j][k].second);
    data.frames.push_back(std::move(f));
  }
  return data;
}

void write_counts_csv(const std::filesystem::path &path,
                      const std::vector<std::string> &detector_ids,
                      const std::vector<MeasurementFrame> &frames) {
  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write counts file: " + path.string());
  out << "time_s,detector_id,counts\n";
  for (const MeasurementFrame &f : frames) {
    if (f.counts.size() != detector_ids.size())
      throw DataError("frame width does not match detector id count");
    for (std::size_t j = 0; j < detector_ids.size(); ++j)
      out << f.time_index << ',' << detector_ids[j] << ',' << f.counts[j]
          << '\n';
  }
}

std::vector<double> match_background(std::span<const DetectorSpec> dets,
                                     std::span<const DetectorSpec> bg_dets,
                                     std::span<const MeasurementFrame> bg_frames) {
  if (bg_dets.empty() || bg_frames.empty())
    throw DataError("match_background: background data is empty");
  for (const MeasurementFrame &f : bg_frames)
    if (f.counts.size() != bg_dets.size())
      throw DataError("match_background: background frame width mismatch");

  std::vector<double> bg_means(bg_dets.size(), 0.0);
  for (const MeasurementFrame &f : bg_frames)
    for (std::size_t j = 0; j < bg_dets.size(); ++j)
      bg_means[j] += static_cast<double>(f.counts[j]);
  for (double &m : bg_means)
    m /= static_cast<double>(bg_frames.size());

  std::vector<double> out;
  out.reserve(dets.size());
  for (const DetectorSpec &det : dets) {
    std::size_t best = 0;
    double best_d = distance(det.position, bg_dets[0].position);
    for (std::size_t j = 1; j < bg_dets.size(); ++j) {
      const double d = distance(det.position, bg_dets[j].position);
      if (d < best_d) { // ties keep the lowest index
        best_d = d;
        best = j;
      }
    }
    out.push_back(bg_means[best]);
  }
  return out;
}

namespace {

ordered_json particle_json(const Particle &p) {
  return ordered_json{
      {"x", p.x}, {"y", p.y}, {"intensity", p.intensity}};
}

ordered_json covariance_json(const std::array<std::array<double, 3>, 3> &c) {
  ordered_json rows = ordered_json::array();
  for (int r = 0; r < 3; ++r)
    rows.push_back(ordered_json::array({c[r][0], c[r][1], c[r][2]}));
  return rows;
}

void write_scatter_svg(const ExportInputs &in,
                       const std::filesystem::path &path) {
  const Scenario &sc = in.scenario;
  const BoundingBox &b = sc.scene.bounds();
  const double pad = 0.05 * std::max(b.width(), b.height());
  const double W = b.width() + 2.0 * pad;
  const double H = b.height() + 2.0 * pad;
  const auto tx = [&](double x) { return x - b.lo.x + pad; };
  const auto ty = [&](double y) { return b.hi.y - y + pad; };
  const double sw = std::max(b.width(), b.height()) / 500.0;
  const double pr = std::max(b.width(), b.height()) / 300.0;

  std::ofstream out(path);
  if (!out)
    throw DataError("cannot write svg file: " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 "
      << format_double(W) << ' ' << format_double(H) << "\">\n";
  out << "  <rect class=\"domain\" x=\"" << format_double(pad) << "\" y=\""
      << format_double(pad) << "\" width=\"" << format_double(b.width())
      << "\" height=\"" << format_double(b.height())
      << "\" fill=\"white\" stroke=\"#333333\" stroke-width=\""
      << format_double(sw) << "\"/>\n";

  for (const BuildingPolygon &poly : sc.scene.buildings()) {
    out << "  <polygon class=\"building\" points=\"";
    bool first = true;
    for (const Point2 &p : poly.vertices()) {
      if (!first)
        out << ' ';
      out << format_double(tx(p.x)) << ',' << format_double(ty(p.y));
      first = false;
    }
    out << "\" fill=\"#bbbbbb\" stroke=\"#666666\" stroke-width=\""
        << format_double(sw) << "\"/>\n";
  }

  // hull of the detector network, when one exists
  {
    std::vector<Point2> pts;
    for (const DetectorSpec &d : sc.detectors)
      pts.push_back(d.position);
    try {
      const ConvexHull hull = convex_hull(pts);
      out << "  <polygon class=\"hull\" points=\"";
      bool first = true;
      for (const Point2 &p : hull.vertices) {
        if (!first)
          out << ' ';
        out << format_double(tx(p.x)) << ',' << format_double(ty(p.y));
        first = false;
      }
      out << "\" fill=\"none\" stroke=\"#2ca02c\" stroke-width=\""
          << format_double(sw) << "\" stroke-dasharray=\""
          << format_double(4.0 * sw) << "\"/>\n";
    } catch (const std::invalid_argument &) {
      // collinear network: no hull to draw
    }
  }

  const Ensemble &cloud = in.run.final_weighted;
  for (const Particle &p : cloud.particles)
    out << "  <circle class=\"particle\" cx=\"" << format_double(tx(p.x))
        << "\" cy=\"" << format_double(ty(p.y)) << "\" r=\""
        << format_double(0.6 * pr)
        << "\" fill=\"#1f77b4\" fill-opacity=\"0.35\"/>\n";

  for (const DetectorSpec &d : sc.detectors) {
    const double cx = tx(d.position.x), cy = ty(d.position.y), s = 1.6 * pr;
    out << "  <path class=\"detector\" d=\"M " << format_double(cx) << ' '
        << format_double(cy - s) << " L " << format_double(cx + s) << ' '
        << format_double(cy) << " L " << format_double(cx) << ' '
        << format_double(cy + s) << " L " << format_double(cx - s) << ' '
        << format_double(cy) << " Z\" fill=\"#d62728\"/>\n";
  }

  if (sc.source_truth) {
    const double cx = tx(sc.source_truth->x), cy = ty(sc.source_truth->y),
                 s = 2.2 * pr;
    out << "  <path class=\"truth\" d=\"M " << format_double(cx - s) << ' '
        << format_double(cy - s) << " L " << format_double(cx + s) << ' '
        << format_double(cy + s) << " M " << format_double(cx - s) << ' '
        << format_double(cy + s) << " L " << format_double(cx + s) << ' '
        << format_double(cy - s) << "\" stroke=\"#000000\" stroke-width=\""
        << format_double(2.0 * sw) << "\" fill=\"none\"/>\n";
  }

  if (!in.run.summary_series.empty()) {
    const Particle &m = in.run.summary_series.back().mean;
    out << "  <circle class=\"mean\" cx=\"" << format_double(tx(m.x))
        << "\" cy=\"" << format_double(ty(m.y)) << "\" r=\""
        << format_double(2.0 * pr)
        << "\" fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\""
        << format_double(2.0 * sw) << "\"/>\n";
  }
  out << "</svg>\n";
}

} // namespace

void export_results(const ExportInputs &in,
                    const std::filesystem::path &out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw DataError("cannot create output directory: " + out_dir.string());

  // particles.csv: the weighted cloud at every step
  {
    std::ofstream out(out_dir / "particles.csv");
    if (!out)
      throw DataError("cannot write particles.csv in " + out_dir.string());
    out << "step,index,x,y,intensity,weight\n";
    for (std::size_t k = 0; k < in.run.ensemble_history.size(); ++k) {
      const Ensemble &ens = in.run.ensemble_history[k];
      for (std::size_t i = 0; i < ens.size(); ++i)
        out << (k + 1) << ',' << i << ',' << format_double(ens.particles[i].x)
            << ',' << format_double(ens.particles[i].y) << ','
            << format_double(ens.particles[i].intensity) << ','
            << format_double(ens.norm_weights[i]) << '\n';
    }
  }

  // summary.json
  {
    const Scenario &sc = in.scenario;
    ordered_json j;
    j["seed"] = in.seed;
    j["n_particles"] = sc.n_particles;
    j["n_frames"] = in.run.r_series.size();
    j["model"] = sc.model == ForwardModel::QA ? "qa" : "rt";
    j["likelihood"] =
        sc.likelihood.kind == LikelihoodMode::Kind::Poisson
            ? std::string("poisson")
            : "gaussian:" + format_double(sc.likelihood.sigma);
    j["prior"] = sc.prior == PriorKind::Box
                     ? "box"
                     : sc.prior == PriorKind::Hull ? "hull" : "kde";
    if (sc.source_truth)
      j["source_truth"] = particle_json(*sc.source_truth);
    j["r_series"] = in.run.r_series;

    ordered_json steps = ordered_json::array();
    for (std::size_t k = 0; k < in.run.summary_series.size(); ++k) {
      const PosteriorSummary &s = in.run.summary_series[k];
      ordered_json step;
      step["k"] = k + 1;
      step["mean"] = particle_json(s.mean);
      step["covariance"] = covariance_json(s.covariance);
      step["r"] = in.run.r_series[k];
      if (sc.source_truth)
        step["localization_error_m"] =
            localization_error(s, *sc.source_truth);
      steps.push_back(std::move(step));
    }
    j["steps"] = std::move(steps);

    if (!in.run.summary_series.empty()) {
      const PosteriorSummary &fin = in.run.summary_series.back();
      ordered_json f;
      f["mean"] = particle_json(fin.mean);
      f["map"] = particle_json(fin.map_particle);
      f["r"] = in.run.r_series.back();
      if (sc.source_truth)
        f["localization_error_m"] = localization_error(fin, *sc.source_truth);
      j["final"] = std::move(f);
    }

    std::ofstream out(out_dir / "summary.json");
    if (!out)
      throw DataError("cannot write summary.json in " + out_dir.string());
    out << j.dump(2) << '\n';
  }

  write_scatter_svg(in, out_dir / "scatter.svg");

  if (in.detector_history) {
    std::ofstream out(out_dir / "detectors.csv");
    if (!out)
      throw DataError("cannot write detectors.csv in " + out_dir.string());
    out << "step,detector,x,y\n";
    for (std::size_t k = 0; k < in.detector_history->size(); ++k) {
      const auto &layout = (*in.detector_history)[k];
      for (std::size_t jdx = 0; jdx < layout.size(); ++jdx)
        out << k << ',' << in.scenario.detector_ids[jdx] << ','
            << format_double(layout[jdx].x) << ','
            << format_double(layout[jdx].y) << '\n';
    }
  }
}

void write_convergence_report(const ConvergenceReport &report,
                              const std::filesystem::path &out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec)
    throw DataError("cannot create output directory: " + out_dir.string());

  ordered_json j;
  j["n_values"] = report.n_values;
  j["mse_values"] = report.mse_values;
  j["loglog_slope"] = report.loglog_slope;
  j["radius_monotone_fraction"] = report.radius_monotone_fraction;
  j["final_error_m"] = report.final_error_m;
  {
    std::ofstream out(out_dir / "report.json");
    if (!out)
      throw DataError("cannot write report.json in " + out_dir.string());
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out(out_dir / "report.txt");
    if (!out)
      throw DataError("cannot write report.txt in " + out_dir.string());
    out << "convergence report\n";
    out << "loglog_slope " << format_double(report.loglog_slope) << '\n';
    for (std::size_t i = 0; i < report.n_values.size(); ++i)
      out << "N " << report.n_values[i] << " mse "
          << format_double(report.mse_values[i]) << '\n';
    out << "radius_monotone_fraction "
        << format_double(report.radius_monotone_fraction) << '\n';
    out << "final_error_m " << format_double(report.final_error_m) << '\n';
  }
}

} // namespace radloc
