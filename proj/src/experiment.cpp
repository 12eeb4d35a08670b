#include "ocdm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace ocdm {

namespace {

using nlohmann::json;

int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

// Line of the first occurrence of "key" in the source, or 1.
int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 1 : line_at(text, pos);
}

class ConfigReader {
 public:
  explicit ConfigReader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    throw ConfigError("line " + std::to_string(line_of_key(text_, key)) + ": " + message);
  }

  template <typename T>
  T get(const json& obj, const std::string& key, T fallback) const {
    if (!obj.contains(key)) return fallback;
    try {
      return obj.at(key).get<T>();
    } catch (const json::exception&) {
      fail(key, "key '" + key + "' has the wrong type");
    }
  }

  template <typename T>
  std::optional<T> get_optional(const json& obj, const std::string& key) const {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return get<T>(obj, key, T{});
  }

 private:
  const std::string& text_;
};

ArmConfig parse_arm(const json& j, const ConfigReader& reader) {
  if (!j.is_object()) reader.fail("arms", "each arm must be an object");
  ArmConfig arm;
  const auto predictor = reader.get<std::string>(j, "predictor", "linear");
  try {
    if (predictor == "linear" || predictor == "mlp" || predictor == "nn") {
      arm.predictor = ModelPredictor{parse_model_kind(predictor)};
      arm.loss = parse_loss_kind(reader.get<std::string>(j, "loss", "spo_plus"));
    } else {
      arm.predictor = parse_benchmark_kind(predictor);
      if (j.contains("loss")) reader.fail("loss", "benchmark arms take no loss");
    }
  } catch (const ConfigError& e) {
    if (std::string_view(e.what()).starts_with("line ")) throw;
    reader.fail(j.contains("loss") ? "loss" : "predictor", e.what());
  }
  arm.name = reader.get<std::string>(
      j, "name",
      arm.loss ? std::string(to_string(*arm.loss)) + "_" + predictor_name(arm.predictor)
               : predictor_name(arm.predictor));
  return arm;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("line " + std::to_string(line_at(text, e.byte == 0 ? 0 : e.byte - 1)) +
                      ": malformed JSON (" + e.what() + ")");
  }
  const ConfigReader reader(text);
  if (!root.is_object()) throw ConfigError("line 1: configuration must be a JSON object");

  static const std::set<std::string> known = {
      "instance", "overrides", "arms",  "T",    "n_trials", "mode",   "schedule",
      "zeta",     "train",     "seed",  "workers", "output", "timing"};
  for (const auto& [key, value] : root.items()) {
    if (!known.contains(key)) reader.fail(key, "unknown key '" + key + "'");
  }

  RunConfig cfg;
  const auto instance = reader.get<std::string>(root, "instance", "knapsack");
  if (instance == "knapsack") {
    cfg.family = Family::kKnapsack;
  } else if (instance == "longest_path" || instance == "grid_path") {
    cfg.family = Family::kGridPath;
  } else {
    reader.fail("instance", "unknown instance '" + instance + "'");
  }

  if (root.contains("overrides")) {
    const json& o = root.at("overrides");
    if (!o.is_object()) reader.fail("overrides", "'overrides' must be an object");
    auto& k = cfg.knapsack;
    auto& g = cfg.longest_path;
    static const std::set<std::string> knap_keys = {"p", "d", "m", "degree", "noise", "k",
                                                    "budget", "overdemand", "warmup", "instance_seed"};
    static const std::set<std::string> path_keys = {"p", "n", "degree", "noise", "v_cap",
                                                    "instance_seed"};
    for (const auto& [key, value] : o.items()) {
      const auto& allowed = cfg.family == Family::kKnapsack ? knap_keys : path_keys;
      if (!allowed.contains(key)) reader.fail(key, "override '" + key + "' does not apply to " + instance);
    }
    k.p = g.p = reader.get<int>(o, "p", 5);
    k.degree = g.degree = reader.get<int>(o, "degree", 6);
    k.noise = g.noise = reader.get<double>(o, "noise", 0.5);
    k.d = reader.get<int>(o, "d", k.d);
    k.m = reader.get<int>(o, "m", k.m);
    k.k = reader.get<int>(o, "k", k.k);
    k.budget = reader.get_optional<double>(o, "budget");
    k.overdemand = reader.get<double>(o, "overdemand", k.overdemand);
    k.warmup = reader.get<int>(o, "warmup", k.warmup);
    g.n = reader.get<int>(o, "n", g.n);
    g.v_cap = reader.get<double>(o, "v_cap", g.v_cap);
    const auto instance_seed = reader.get_optional<std::uint64_t>(o, "instance_seed");
    if (instance_seed) k.seed = g.seed = *instance_seed;
  }

  if (!root.contains("arms") || !root.at("arms").is_array() || root.at("arms").empty()) {
    reader.fail("arms", "'arms' must be a non-empty array");
  }
  for (const json& a : root.at("arms")) cfg.arms.push_back(parse_arm(a, reader));
  std::set<std::string> names;
  for (const auto& a : cfg.arms) {
    if (!names.insert(a.name).second) reader.fail("arms", "duplicate arm name '" + a.name + "'");
  }

  if (root.contains("T")) {
    const json& t = root.at("T");
    if (t.is_number_integer()) {
      cfg.horizons = {t.get<int>()};
    } else if (t.is_array() && !t.empty()) {
      for (const json& v : t) {
        if (!v.is_number_integer()) reader.fail("T", "'T' entries must be integers");
        cfg.horizons.push_back(v.get<int>());
      }
    } else {
      reader.fail("T", "'T' must be an integer or a non-empty array of integers");
    }
  } else {
    cfg.horizons = {cfg.family == Family::kKnapsack ? 1000 : cfg.longest_path.horizon};
  }
  for (int T : cfg.horizons) {
    if (T < 1) reader.fail("T", "horizons must be >= 1");
  }

  cfg.n_trials = reader.get<int>(root, "n_trials", 1);
  if (cfg.n_trials < 1) reader.fail("n_trials", "'n_trials' must be >= 1");

  if (root.contains("mode")) {
    const auto mode = reader.get<std::string>(root, "mode", "");
    if (mode == "hard") {
      cfg.mode = ConstraintMode::kHard;
    } else if (mode == "soft") {
      cfg.mode = ConstraintMode::kSoft;
    } else {
      reader.fail("mode", "'mode' must be \"hard\" or \"soft\"");
    }
  }

  if (root.contains("schedule")) {
    const json& s = root.at("schedule");
    if (!s.is_object()) reader.fail("schedule", "'schedule' must be an object");
    if (s.contains("period") == s.contains("beta")) {
      reader.fail("schedule", "'schedule' needs exactly one of 'period' or 'beta'");
    }
    if (s.contains("period")) {
      cfg.schedule = Schedule::periodic(reader.get<int>(s, "period", 10));
      if (cfg.schedule.period < 1) reader.fail("period", "'period' must be >= 1");
    } else {
      cfg.schedule = Schedule::power(reader.get<double>(s, "beta", 1.0));
      if (!(cfg.schedule.beta >= 1.0)) reader.fail("beta", "'beta' must be >= 1");
    }
  }

  cfg.zeta = reader.get_optional<double>(root, "zeta");
  if (cfg.zeta && !(*cfg.zeta > 0.0)) reader.fail("zeta", "'zeta' must be positive");

  if (root.contains("train")) {
    const json& t = root.at("train");
    if (!t.is_object()) reader.fail("train", "'train' must be an object");
    cfg.train.steps = reader.get<int>(t, "steps", cfg.train.steps);
    cfg.train.batch_size = reader.get<int>(t, "batch_size", cfg.train.batch_size);
    cfg.learning_rate = reader.get_optional<double>(t, "lr");
    if (cfg.train.steps < 0) reader.fail("steps", "'steps' must be >= 0");
    if (cfg.train.batch_size < 0) reader.fail("batch_size", "'batch_size' must be >= 0");
    if (cfg.learning_rate && !(*cfg.learning_rate > 0.0)) reader.fail("lr", "'lr' must be positive");
  }

  cfg.seed = reader.get<std::uint64_t>(root, "seed", 1);
  cfg.workers = reader.get<int>(root, "workers", 0);
  if (cfg.workers < 0) reader.fail("workers", "'workers' must be >= 0");
  cfg.output = reader.get<std::string>(root, "output", cfg.output);
  cfg.timing = reader.get<bool>(root, "timing", false);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

Problem build_instance(const RunConfig& config) {
  if (config.family == Family::kKnapsack) return make_knapsack_instance(config.knapsack);
  return make_longest_path_instance(config.longest_path);
}

int default_worker_count() {
  if (const char* env = std::getenv("OCDM_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CsvRow> run_experiment(const RunConfig& config, int workers) {
  const Problem instance = build_instance(config);
  const Calibration calib = calibrate(instance, config.seed);
  const ConstraintMode mode = config.mode.value_or(instance.default_mode);

  struct Job {
    std::size_t horizon_index;
    int trial;
  };
  std::vector<Job> jobs;
  for (std::size_t h = 0; h < config.horizons.size(); ++h) {
    for (int trial = 0; trial < config.n_trials; ++trial) jobs.push_back({h, trial});
  }
  const std::size_t n_arms = config.arms.size();
  // results[job][arm]
  std::vector<std::vector<Metrics>> results(jobs.size(), std::vector<Metrics>(n_arms));

  auto run_job = [&](std::size_t j) {
    const int T = config.horizons[jobs[j].horizon_index];
    const int trial = jobs[j].trial;
    const std::uint64_t seed = derive_seed(config.seed, static_cast<std::uint64_t>(trial));
    const std::vector<Arrival> stream = generate_stream(instance, T, seed);
    EpisodeConfig base;
    base.mode = mode;
    base.T = T;
    base.zeta = config.zeta;
    base.schedule = config.schedule;
    base.train = config.train;
    base.learning_rate = config.learning_rate;
    base.seed = seed;
    EpisodeConfig hindsight = base;
    hindsight.predictor = BenchmarkKind::kHindsight;
    const Trajectory best = run_episode(hindsight, instance, stream, calib);
    for (std::size_t a = 0; a < n_arms; ++a) {
      EpisodeConfig arm = base;
      arm.predictor = config.arms[a].predictor;
      arm.loss = config.arms[a].loss.value_or(LossKind::kSpoPlus);
      Metrics m = evaluate(run_episode(arm, instance, stream, calib), best, instance);
      m.trial = trial;
      m.seed = seed;
      results[j][a] = m;
    }
  };

  const int threads = std::clamp(workers, 1, static_cast<int>(std::max<std::size_t>(jobs.size(), 1)));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          try {
            run_job(j);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<CsvRow> rows;
  rows.reserve(jobs.size() * n_arms);
  for (std::size_t h = 0; h < config.horizons.size(); ++h) {
    for (std::size_t a = 0; a < n_arms; ++a) {
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].horizon_index != h) continue;
        const ArmConfig& arm = config.arms[a];
        rows.push_back({instance.name, arm.name,
                        arm.loss ? std::string(to_string(*arm.loss)) : std::string("none"),
                        predictor_name(arm.predictor), results[j][a]});
      }
    }
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& os, const std::vector<CsvRow>& rows, bool timing) {
  os << kCsvHeader << '\n';
  for (const CsvRow& r : rows) {
    const Metrics& m = r.metrics;
    os << r.instance << ',' << r.arm << ',' << r.loss << ',' << r.predictor << ',' << m.T << ','
       << m.trial << ',' << m.seed << ',' << m.tau << ',' << format_number(m.obj) << ','
       << format_number(m.obj_hindsight) << ','
       << (m.rel_regret ? format_number(*m.rel_regret) : std::string()) << ','
       << format_number(m.infeasibility) << ',' << format_number(m.dv_measured) << ','
       << (timing ? format_number(m.wall_ms) : std::string()) << '\n';
  }
}

int count_undefined(const std::vector<CsvRow>& rows) {
  return static_cast<int>(
      std::count_if(rows.begin(), rows.end(), [](const CsvRow& r) { return !r.metrics.rel_regret; }));
}

std::vector<CsvRecord> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) return {};
  if (line != kCsvHeader) throw ConfigError("CSV header does not match the expected columns");
  std::vector<CsvRecord> out;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 14) throw ConfigError("CSV line " + std::to_string(line_no) + ": expected 14 fields");
    try {
      CsvRecord r;
      r.instance = f[0];
      r.arm = f[1];
      r.T = std::stoi(f[4]);
      r.tau = std::stoi(f[7]);
      r.obj = std::stod(f[8]);
      if (!f[10].empty()) r.rel_regret = std::stod(f[10]);
      r.infeasibility = std::stod(f[11]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ConfigError("CSV line " + std::to_string(line_no) + ": bad number");
    }
  }
  return out;
}

namespace {

struct SeriesPoint {
  int T;
  double mean;
  double sd;
};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// arm -> points sorted by T, in first-appearance order of arms.
std::vector<std::pair<std::string, std::vector<SeriesPoint>>> collect(
    const std::vector<CsvRecord>& records, const std::string& instance, bool infeasibility) {
  std::vector<std::string> order;
  std::map<std::string, std::map<int, std::vector<double>>> values;
  for (const auto& r : records) {
    if (r.instance != instance) continue;
    if (!values.contains(r.arm)) order.push_back(r.arm);
    auto& bucket = values[r.arm][r.T];
    if (infeasibility) {
      bucket.push_back(r.infeasibility);
    } else if (r.rel_regret) {
      bucket.push_back(*r.rel_regret);
    }
  }
  std::vector<std::pair<std::string, std::vector<SeriesPoint>>> out;
  for (const auto& arm : order) {
    std::vector<SeriesPoint> pts;
    for (const auto& [T, xs] : values[arm]) {
      if (xs.empty()) continue;
      double mean = 0.0;
      for (double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - mean) * (x - mean);
      const double sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
      pts.push_back({T, mean, sd});
    }
    out.emplace_back(arm, std::move(pts));
  }
  return out;
}

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

void render_panel(std::ostream& os, const std::vector<std::pair<std::string, std::vector<SeriesPoint>>>& series,
                  const std::string& metric, const std::string& ylabel, double top) {
  constexpr double left = 70.0, width = 440.0, height = 260.0;
  int xmin = INT32_MAX, xmax = INT32_MIN;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& [arm, pts] : series) {
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.T);
      xmax = std::max(xmax, p.T);
      if (first) {
        lo = p.mean - p.sd;
        hi = p.mean + p.sd;
        first = false;
      }
      lo = std::min(lo, p.mean - p.sd);
      hi = std::max(hi, p.mean + p.sd);
    }
  }
  if (first) {
    xmin = 0;
    xmax = 1;
  }
  const double pad = hi > lo ? 0.05 * (hi - lo) : 0.1 * std::max(1.0, std::abs(hi));
  const double ymin = lo - pad;
  const double ymax = hi + pad;
  auto xpos = [&](int T) {
    return xmax == xmin ? left + width / 2.0
                        : left + width * static_cast<double>(T - xmin) / static_cast<double>(xmax - xmin);
  };
  auto ypos = [&](double v) { return top + height * (ymax - v) / (ymax - ymin); };

  os << "<g class=\"panel\" data-metric=\"" << metric << "\" data-left=\"" << format_number(left)
     << "\" data-top=\"" << format_number(top) << "\" data-width=\"" << format_number(width)
     << "\" data-height=\"" << format_number(height) << "\" data-xmin=\"" << xmin
     << "\" data-xmax=\"" << xmax << "\" data-ymin=\"" << format_number(ymin) << "\" data-ymax=\""
     << format_number(ymax) << "\">\n";
  os << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top + height << "\" x2=\""
     << left + width << "\" y2=\"" << top + height << "\" stroke=\"black\"/>\n";
  os << "<line class=\"axis\" x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
     << "\" y2=\"" << top + height << "\" stroke=\"black\"/>\n";
  os << "<text class=\"xlabel\" x=\"" << left + width / 2 << "\" y=\"" << top + height + 35
     << "\" text-anchor=\"middle\">T</text>\n";
  os << "<text class=\"ylabel\" x=\"15\" y=\"" << top + height / 2
     << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << top + height / 2 << ")\">"
     << ylabel << "</text>\n";
  for (double v : {ymin, ymax}) {
    os << "<text class=\"ytick\" x=\"" << left - 5 << "\" y=\"" << format_number(ypos(v))
       << "\" text-anchor=\"end\">" << format_number(v) << "</text>\n";
  }
  std::set<int> ticks;
  for (const auto& s : series) {
    for (const auto& p : s.second) ticks.insert(p.T);
  }
  for (int T : ticks) {
    os << "<text class=\"xtick\" x=\"" << format_number(xpos(T)) << "\" y=\"" << top + height + 15
       << "\" text-anchor=\"middle\">" << T << "</text>\n";
  }
  std::size_t idx = 0;
  for (const auto& [arm, pts] : series) {
    const char* color = kColors[idx % std::size(kColors)];
    os << "<polyline class=\"series\" data-arm=\"" << xml_escape(arm) << "\" fill=\"none\" stroke=\""
       << color << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << format_number(xpos(pts[i].T)) << ',' << format_number(ypos(pts[i].mean));
    }
    os << "\"/>\n";
    for (const auto& p : pts) {
      os << "<line class=\"errbar\" data-arm=\"" << xml_escape(arm) << "\" x1=\""
         << format_number(xpos(p.T)) << "\" y1=\"" << format_number(ypos(p.mean - p.sd))
         << "\" x2=\"" << format_number(xpos(p.T)) << "\" y2=\"" << format_number(ypos(p.mean + p.sd))
         << "\" stroke=\"" << color << "\"/>\n";
    }
    const double ly = top + 12 + 16 * static_cast<double>(idx);
    os << "<text class=\"legend-entry\" x=\"" << left + width + 10 << "\" y=\"" << ly
       << "\" fill=\"" << color << "\">" << xml_escape(arm) << "</text>\n";
    ++idx;
  }
  os << "</g>\n";
}

}  // namespace

std::string render_svg(const std::vector<CsvRecord>& records, const std::string& instance) {
  const bool soft = std::any_of(records.begin(), records.end(), [&](const CsvRecord& r) {
    return r.instance == instance && r.tau == r.T && r.infeasibility > 0.0;
  });
  const double panel_height = 330.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"680\" height=\""
     << format_number(panel_height * (soft ? 2 : 1) + 20) << "\">\n";
  os << "<text class=\"title\" x=\"290\" y=\"16\" text-anchor=\"middle\">" << xml_escape(instance)
     << "</text>\n";
  render_panel(os, collect(records, instance, false), "rel_regret", "relative regret", 30.0);
  if (soft) {
    render_panel(os, collect(records, instance, true), "infeasibility", "infeasibility",
                 30.0 + panel_height);
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::string> plot_csv(const std::string& csv_path, const std::string& svg_path) {
  std::ifstream in(csv_path);
  if (!in) throw ConfigError("cannot read CSV '" + csv_path + "'");
  const std::vector<CsvRecord> records = read_csv(in);
  if (records.empty()) throw ConfigError("CSV '" + csv_path + "' has no data rows");
  std::vector<std::string> instances;
  for (const auto& r : records) {
    if (std::find(instances.begin(), instances.end(), r.instance) == instances.end()) {
      instances.push_back(r.instance);
    }
  }
  std::vector<std::string> written;
  for (const auto& inst : instances) {
    std::string path = svg_path;
    if (instances.size() > 1) {
      const std::filesystem::path p(svg_path);
      path = (p.parent_path() / (p.stem().string() + "_" + inst + p.extension().string())).string();
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << render_svg(records, inst);
    written.push_back(path);
  }
  return written;
}

}  // namespace ocdm
