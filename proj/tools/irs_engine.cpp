// irs-engine: score, matrix, viz and synth subcommands.
//
// Exit codes: 0 success, 2 usage or validation error, 3 only inactive
// features in the result, 4 I/O failure.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irs/irs.hpp"

namespace fs = std::filesystem;
using irs::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitIo = 4;

struct DataArgs {
  std::string codes;
  std::string factors;
  std::string plan;
  std::string code_cols;
  std::string factor_cols;
};

struct EstimatorArgs {
  std::string distance = "l2";
  std::string mode = "weighted";
  bool raw_weights = false;
  std::size_t min_cell_size = 1;
  bool clamp = false;
  double activity_threshold = 1e-8;
  unsigned workers = 1;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(',', start);
    if (pos == std::string::npos) pos = text.size();
    auto item = text.substr(start, pos - start);
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(item);
    start = pos + 1;
  }
  return out;
}

// Resolves a comma-separated list of 0-based indices or column names.
std::vector<std::size_t> resolve(const std::string& flag, const std::string& text,
                                 const std::vector<std::string>& names, std::size_t bound) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t idx = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), idx);
    if (ec == std::errc{} && ptr == item.data() + item.size()) {
      if (idx >= bound)
        throw irs::ValidationError(flag + ": index " + item + " out of range (have " + std::to_string(bound) + ")");
    } else {
      auto it = std::find(names.begin(), names.end(), item);
      if (it == names.end()) throw irs::ValidationError(flag + ": unknown name '" + item + "'");
      idx = static_cast<std::size_t>(it - names.begin());
    }
    if (std::find(out.begin(), out.end(), idx) != out.end())
      throw irs::ValidationError(flag + ": '" + item + "' listed twice");
    out.push_back(idx);
  }
  return out;
}

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--codes", a.codes, "Latent codes (.csv or .npy)")->required();
  cmd->add_option("--factors", a.factors, "Generative factors (.csv or .npy)")->required();
  cmd->add_option("--plan", a.plan, "Discretization plan JSON");
  cmd->add_option("--code-cols", a.code_cols, "Code columns (names or indices); default z_* or all");
  cmd->add_option("--factor-cols", a.factor_cols, "Factor columns (names or indices); default g_* or all");
}

void add_estimator_options(CLI::App* cmd, EstimatorArgs& a) {
  cmd->add_option("--distance", a.distance, "l2, l1 or linf")->capture_default_str();
  cmd->add_option("--mode", a.mode, "weighted or conditional")->capture_default_str();
  cmd->add_flag("--raw-weights", a.raw_weights, "Use unnormalized importance weights");
  cmd->add_option("--min-cell-size", a.min_cell_size, "Skip inner cells smaller than this")->capture_default_str();
  cmd->add_flag("--clamp", a.clamp, "Clamp scores to [0, 1]");
  cmd->add_option("--activity-threshold", a.activity_threshold, "Relative inactivity threshold")
      ->capture_default_str();
  cmd->add_option("--workers", a.workers, "Worker threads (default: IRS_ENGINE_WORKERS or 1)");
}

irs::LabeledDataset load(const DataArgs& a) {
  const auto codes = irs::select_columns(irs::read_table(a.codes, "z_"), split_list(a.code_cols), "z_", "--code-cols");
  const auto factors =
      irs::select_columns(irs::read_table(a.factors, "g_"), split_list(a.factor_cols), "g_", "--factor-cols");
  const irs::DiscretizationPlan plan = a.plan.empty() ? irs::DiscretizationPlan{} : irs::read_plan(a.plan);
  return irs::ingest(codes, factors, plan);
}

irs::EstimatorConfig make_config(const EstimatorArgs& a) {
  irs::EstimatorConfig cfg;
  try {
    cfg.distance = irs::parse_distance(a.distance);
  } catch (const irs::ValidationError& e) {
    throw irs::ValidationError(std::string("--distance: ") + e.what());
  }
  try {
    cfg.mode = irs::parse_mean_mode(a.mode);
  } catch (const irs::ValidationError& e) {
    throw irs::ValidationError(std::string("--mode: ") + e.what());
  }
  cfg.self_normalize = !a.raw_weights;
  if (a.min_cell_size == 0) throw irs::ValidationError("--min-cell-size: must be >= 1");
  cfg.min_cell_size = a.min_cell_size;
  cfg.clamp = a.clamp;
  if (!(a.activity_threshold >= 0.0)) throw irs::ValidationError("--activity-threshold: must be >= 0");
  cfg.activity_threshold = a.activity_threshold;
  if (a.workers == 0) throw irs::ValidationError("--workers: must be >= 1");
  cfg.workers = a.workers;
  return cfg;
}

void emit(const Json& doc, const std::string& out) {
  const auto text = doc.dump(2) + "\n";
  if (out.empty() || out == "-")
    std::cout << text;
  else
    irs::write_file(out, text);
}

Json index_list(const std::vector<std::size_t>& v) { return Json(v); }

// ---- score ----

struct ScoreArgs {
  DataArgs data;
  EstimatorArgs est;
  std::string L, I, J, S;
  bool has_J = false, has_S = false;
  std::string out;
  std::string dump_partition;
};

int cmd_score(const ScoreArgs& a) {
  const auto d = load(a.data);
  auto cfg = make_config(a.est);
  std::vector<std::size_t> L;
  if (a.L.empty()) {
    L.resize(d.feature_count());
    std::iota(L.begin(), L.end(), std::size_t{0});
  } else {
    L = resolve("--L", a.L, d.feature_names(), d.feature_count());
    if (L.empty()) throw irs::ValidationError("--L: must name at least one feature");
  }

  Json query{{"L", index_list(L)}};
  irs::IndexSpec spec;
  irs::IrsResult r;
  if (a.has_S) {
    if (a.has_J || !a.I.empty()) throw irs::ValidationError("--S: cannot be combined with --I or --J");
    auto S = resolve("--S", a.S, d.factor_names(), d.factor_count());
    if (S.empty()) throw irs::ValidationError("--S: must name at least one factor");
    if (S.size() == d.factor_count()) throw irs::ValidationError("--S: must leave at least one factor unshifted");
    spec = irs::IndexSpec{L, irs::complement(d.factor_count(), S), S};
    query["S"] = index_list(S);
    query["kind"] = "domain_shift";
    r = irs::domain_shift_score(d, L, S, cfg);
  } else {
    auto I = resolve("--I", a.I, d.factor_names(), d.factor_count());
    auto J = resolve("--J", a.J, d.factor_names(), d.factor_count());
    if (J.empty()) throw irs::ValidationError("--J: must name at least one nuisance factor");
    for (auto j : J)
      if (std::find(I.begin(), I.end(), j) != I.end())
        throw irs::ValidationError("--J: factor " + std::to_string(j) + " also appears in --I");
    spec = irs::IndexSpec{L, I, J};
    query["I"] = index_list(I);
    query["J"] = index_list(J);
    query["kind"] = "irs";
    r = irs::irs(d, spec, cfg);
  }

  if (!a.dump_partition.empty()) emit(irs::partition_skeleton(irs::build_partition(d, spec)), a.dump_partition);

  Json doc{{"query", query},
           {"IRS", r.score ? Json(*r.score) : Json(nullptr)},
           {"empida", r.empida},
           {"normalizer", r.normalizer},
           {"active", r.active},
           {"excluded_cells", r.excluded_cells},
           {"config", irs::to_json(cfg)},
           {"warnings", r.warnings}};
  emit(doc, a.out);
  return r.active ? kExitOk : kExitDegenerate;
}

// ---- matrix ----

struct MatrixArgs {
  DataArgs data;
  EstimatorArgs est;
  std::string metric = "irs";
  int buckets = 20;
  std::string fast_path = "auto";
  std::string csv;
  std::string out;
};

void write_matrix_csv(const std::string& path, const irs::LabeledDataset& d,
                      const std::vector<double>& values) {
  std::string text = "feature";
  for (const auto& n : d.factor_names()) text += "," + n;
  text += "\n";
  for (std::size_t l = 0; l < d.feature_count(); ++l) {
    text += d.feature_names()[l];
    for (std::size_t i = 0; i < d.factor_count(); ++i) {
      text += ",";
      const double v = values[l * d.factor_count() + i];
      if (std::isfinite(v)) {
        char buf[32];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
        text.append(buf, end);
      }
    }
    text += "\n";
  }
  irs::write_file(path, text);
}

int cmd_matrix(const MatrixArgs& a) {
  const auto d = load(a.data);
  if (a.metric == "mi") {
    if (a.buckets < 2) throw irs::ValidationError("--buckets: must be >= 2");
    const auto rep = irs::mi_report(d, a.buckets);
    emit(irs::to_json(rep), a.out);
    if (!a.csv.empty()) write_matrix_csv(a.csv, d, rep.matrix.values);
    return kExitOk;
  }
  if (a.metric != "irs") throw irs::ValidationError("--metric: expected irs or mi, got '" + a.metric + "'");
  auto cfg = make_config(a.est);
  try {
    cfg.fast_path = irs::parse_fast_path(a.fast_path);
  } catch (const irs::ValidationError& e) {
    throw irs::ValidationError(std::string("--fast-path: ") + e.what());
  }
  if (cfg.fast_path == irs::FastPath::on && !irs::is_fully_crossed(d))
    throw irs::ValidationError("--fast-path: 'on' requires a fully crossed dataset");
  const auto rep = irs::dependency_matrix(d, cfg);
  emit(irs::to_json(rep), a.out);
  if (!a.csv.empty()) write_matrix_csv(a.csv, d, rep.matrix);
  return rep.overall ? kExitOk : kExitDegenerate;
}

// ---- viz ----

struct VizArgs {
  DataArgs data;
  EstimatorArgs est;
  std::string features;
  std::string out;
};

int cmd_viz(const VizArgs& a) {
  const auto d = load(a.data);
  const auto cfg = make_config(a.est);
  std::vector<std::size_t> list;
  if (a.features.empty()) {
    list.resize(d.feature_count());
    std::iota(list.begin(), list.end(), std::size_t{0});
  } else {
    list = resolve("--feature", a.features, d.feature_names(), d.feature_count());
  }
  Json sets = Json::array();
  bool any_active = false;
  for (auto l : list) {
    const auto v = irs::viz_curves(d, l, cfg);
    any_active = any_active || v.active;
    sets.push_back(irs::to_json(v));
  }
  emit(Json{{"features", std::move(sets)}, {"config", irs::to_json(cfg)}}, a.out);
  return any_active ? kExitOk : kExitDegenerate;
}

// ---- synth ----

struct SynthArgs {
  std::string config;
  std::size_t n = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool crossed = false;
  std::string format = "csv";
};

std::string fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int cmd_synth(const SynthArgs& a) {
  const auto text = irs::io_detail::slurp(a.config);
  const auto doc = irs::parse_scm(text, a.config);
  if (a.format != "csv" && a.format != "npy")
    throw irs::ValidationError("--format: expected csv or npy, got '" + a.format + "'");
  const auto mode = a.crossed ? irs::SamplingMode::crossed : irs::SamplingMode::ancestral;
  std::size_t n = a.n;
  if (n == 0) {
    if (!a.crossed) throw irs::ValidationError("--n: required unless --crossed is given");
    n = irs::grid_size(doc.scm);
  }
  const std::uint64_t seed = a.seed ? *a.seed : doc.seed.value_or(0);
  const auto s = irs::sample_raw(doc.scm, doc.encoder, n, seed, mode);

  irs::RawTable codes, factors;
  codes.rows = factors.rows = n;
  codes.cols = s.feature_count;
  factors.cols = s.factor_count;
  codes.values = s.codes;
  factors.values.assign(s.factors.begin(), s.factors.end());
  for (std::size_t l = 0; l < s.feature_count; ++l) codes.names.push_back("z_" + std::to_string(l));
  for (std::size_t i = 0; i < s.factor_count; ++i) {
    const auto& name = doc.scm.factors[i].name;
    factors.names.push_back(name.empty() ? "g_" + std::to_string(i)
                                         : (name.rfind("g_", 0) == 0 ? name : "g_" + name));
  }

  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec) throw irs::IoError("cannot create output directory '" + a.out + "': " + ec.message());
  const fs::path dir(a.out);
  const std::string ext = "." + a.format;
  if (a.format == "csv") {
    irs::write_csv(dir / "codes.csv", codes);
    irs::write_csv(dir / "factors.csv", factors);
  } else {
    irs::write_npy(dir / "codes.npy", codes, irs::NpyType::f8);
    irs::write_npy(dir / "factors.npy", factors, irs::NpyType::i8);
  }
  const auto canonical = Json::parse(text).dump(2) + "\n";
  irs::write_file(dir / "config.json", canonical);
  Json manifest{{"seed", seed},
                {"n", n},
                {"mode", a.crossed ? "crossed" : "ancestral"},
                {"rng", "mt19937_64"},
                {"config_hash", "fnv1a64:" + fnv1a64(canonical)},
                {"files", {"codes" + ext, "factors" + ext, "config.json"}},
                {"factor_names", factors.names},
                {"feature_names", codes.names}};
  irs::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

unsigned default_workers() {
  const char* env = std::getenv("IRS_ENGINE_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  unsigned v = 0;
  const std::string s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0)
    throw irs::ValidationError("IRS_ENGINE_WORKERS: expected a positive integer, got '" + s + "'");
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interventional robustness scores for latent representations"};
  app.name("irs-engine");
  app.require_subcommand(1);

  ScoreArgs score;
  MatrixArgs matrix;
  VizArgs viz;
  SynthArgs synth;

  auto* score_cmd = app.add_subcommand("score", "IRS or domain-shift score for one query");
  add_data_options(score_cmd, score.data);
  add_estimator_options(score_cmd, score.est);
  score_cmd->add_option("--L", score.L, "Feature set (default: all features)");
  score_cmd->add_option("--I", score.I, "Conditioning factors");
  auto* j_opt = score_cmd->add_option("--J", score.J, "Nuisance factors")->expected(0, 1);
  auto* s_opt = score_cmd->add_option("--S", score.S, "Shifted factors (domain-shift score)")->expected(0, 1);
  score_cmd->add_option("--out", score.out, "Write JSON here instead of stdout");
  score_cmd->add_option("--dump-partition", score.dump_partition, "Write the partition skeleton as JSON");

  auto* matrix_cmd = app.add_subcommand("matrix", "Full dependency matrix and disentanglement scores");
  add_data_options(matrix_cmd, matrix.data);
  add_estimator_options(matrix_cmd, matrix.est);
  matrix_cmd->add_option("--metric", matrix.metric, "irs or mi")->capture_default_str();
  matrix_cmd->add_option("--buckets", matrix.buckets, "Buckets per latent for --metric mi")->capture_default_str();
  matrix_cmd->add_option("--fast-path", matrix.fast_path, "auto, on or off")->capture_default_str();
  matrix_cmd->add_option("--csv", matrix.csv, "Also write the matrix as CSV");
  matrix_cmd->add_option("--out", matrix.out, "Write JSON here instead of stdout");

  auto* viz_cmd = app.add_subcommand("viz", "Curve data for interventional robustness plots");
  add_data_options(viz_cmd, viz.data);
  add_estimator_options(viz_cmd, viz.est);
  viz_cmd->add_option("--feature", viz.features, "Features to plot (default: all)");
  viz_cmd->add_option("--out", viz.out, "Write JSON here instead of stdout");

  auto* synth_cmd = app.add_subcommand("synth", "Sample a synthetic dataset from an SCM config");
  synth_cmd->add_option("--config", synth.config, "SCM config JSON")->required();
  synth_cmd->add_option("--n", synth.n, "Number of rows (default with --crossed: one pass over the grid)");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed (default: config seed, else 0)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();
  synth_cmd->add_flag("--crossed", synth.crossed, "Enumerate the factor grid instead of sampling");
  synth_cmd->add_option("--format", synth.format, "csv or npy")->capture_default_str();

  try {
    const unsigned workers = default_workers();
    score.est.workers = matrix.est.workers = viz.est.workers = workers;
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const irs::ValidationError& e) {
    std::cerr << "irs-engine: " << e.what() << "\n";
    return kExitUsage;
  }
  score.has_J = j_opt->count() > 0;
  score.has_S = s_opt->count() > 0;

  try {
    if (*score_cmd) return cmd_score(score);
    if (*matrix_cmd) return cmd_matrix(matrix);
    if (*viz_cmd) return cmd_viz(viz);
    if (*synth_cmd) return cmd_synth(synth);
  } catch (const irs::ValidationError& e) {
    std::cerr << "irs-engine: " << e.what() << "\n";
    return kExitUsage;
  } catch (const irs::IoError& e) {
    std::cerr << "irs-engine: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "irs-engine: internal error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
