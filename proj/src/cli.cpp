#include "atmgad/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "atmgad/bench.hpp"
#include "atmgad/error.hpp"
#include "atmgad/motif.hpp"
#include "atmgad/train.hpp"

namespace atmgad::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(where + "." + key + ": wrong type (" + std::string(it->type_name()) + ")");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

SynthConfig synth_from_json(const Json& j, const std::string& where) {
  require_keys(j,
               {"n_nodes", "fraud_fraction", "burst_len", "horizon", "avg_degree", "community_size",
                "chains_per_fraud", "feature_dim", "feature_noise", "seed"},
               where);
  SynthConfig c;
  read(j, "n_nodes", c.n_nodes, where);
  read(j, "fraud_fraction", c.fraud_fraction, where);
  read(j, "burst_len", c.burst_len, where);
  read(j, "horizon", c.horizon, where);
  read(j, "avg_degree", c.avg_degree, where);
  read(j, "community_size", c.community_size, where);
  read(j, "chains_per_fraud", c.chains_per_fraud, where);
  read(j, "feature_dim", c.feature_dim, where);
  read(j, "feature_noise", c.feature_noise, where);
  read(j, "seed", c.seed, where);
  c.validate();
  return c;
}

}  // namespace

RunConfig parse_run_config(const Json& j, const fs::path& base_dir) {
  require_keys(j, {"data", "model", "train", "analysis", "output"}, "config");
  RunConfig rc;
  rc.base_dir = base_dir;

  if (j.contains("data")) {
    const Json& d = j["data"];
    require_keys(d,
                 {"format", "edges", "features", "labels", "remap_ids", "synthetic", "splits", "train_fraction",
                  "split_seed"},
                 "data");
    read(d, "format", rc.data.format, "data");
    if (rc.data.format != "csv" && rc.data.format != "synthetic")
      throw ValidationError("data.format must be 'csv' or 'synthetic', got '" + rc.data.format + "'");
    for (auto [key, target] : {std::pair{"edges", &rc.data.edges}, std::pair{"features", &rc.data.features},
                               std::pair{"labels", &rc.data.labels}}) {
      std::string p;
      read(d, key, p, "data");
      if (!p.empty()) *target = resolve(base_dir, p);
    }
    read(d, "remap_ids", rc.data.remap_ids, "data");
    if (d.contains("synthetic")) rc.data.synthetic = synth_from_json(d["synthetic"], "data.synthetic");
    read(d, "splits", rc.data.splits, "data");
    read(d, "train_fraction", rc.data.train_fraction, "data");
    if (d.contains("split_seed") && !d["split_seed"].is_null()) {
      std::uint64_t s = 0;
      read(d, "split_seed", s, "data");
      rc.data.split_seed = s;
    }
    if (rc.data.splits < 1) throw ValidationError("data.splits must be at least 1");
    if (!(rc.data.train_fraction > 0.0 && rc.data.train_fraction < 1.0))
      throw ValidationError("data.train_fraction must lie in (0, 1)");
  }
  if (rc.data.format == "csv" && (rc.data.edges.empty() || rc.data.features.empty() || rc.data.labels.empty()))
    throw ValidationError("data: csv format needs edges, features and labels paths");

  if (j.contains("model")) rc.model = model_config_from_json(j["model"]);
  if (j.contains("train")) rc.train = train_config_from_json(j["train"]);

  if (j.contains("analysis")) {
    const Json& a = j["analysis"];
    require_keys(a,
                 {"delta_grid", "correlation_delta", "ablations", "window_grid", "bench_sizes", "bench_repeats",
                  "bench_avg_degree", "bench_delta"},
                 "analysis");
    read(a, "delta_grid", rc.analysis.delta_grid, "analysis");
    if (a.contains("correlation_delta") && !a["correlation_delta"].is_null()) {
      double c = 0.0;
      read(a, "correlation_delta", c, "analysis");
      rc.analysis.correlation_delta = c;
    }
    std::vector<std::string> ablations;
    read(a, "ablations", ablations, "analysis");
    for (const auto& s : ablations) rc.analysis.ablations.push_back(ablation_from_string(s));
    read(a, "window_grid", rc.analysis.window_grid, "analysis");
    read(a, "bench_sizes", rc.analysis.bench_sizes, "analysis");
    read(a, "bench_repeats", rc.analysis.bench_repeats, "analysis");
    read(a, "bench_avg_degree", rc.analysis.bench_avg_degree, "analysis");
    read(a, "bench_delta", rc.analysis.bench_delta, "analysis");
  }

  if (j.contains("output")) {
    require_keys(j["output"], {"directory"}, "output");
    std::string dir;
    read(j["output"], "directory", dir, "output");
    if (!dir.empty()) rc.output_dir = dir;
  }
  rc.output_dir = resolve(base_dir, rc.output_dir.string());
  return rc;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), 0, std::string("invalid JSON: ") + e.what());
  }
  return parse_run_config(j, fs::absolute(path).parent_path());
}

namespace {

struct Context {
  RunConfig rc;
  std::ostream& out;
  std::ostream& err;
};

fs::path out_path(const Context& ctx, const std::string& name) { return ctx.rc.output_dir / name; }

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw InputError("cannot write output file: " + p.string());
  f << std::setprecision(17);
  return f;
}

void write_json(const fs::path& p, const Json& j) {
  auto f = open_out(p);
  f << j.dump(2) << "\n";
}

TransactionGraph build_graph(const RunConfig& rc) {
  if (rc.data.format == "synthetic") return synth_burst_graph(rc.data.synthetic);
  TransactionGraph g = load_edge_list(rc.data.edges, EdgeCsvOptions{rc.data.remap_ids});
  if (!fs::exists(rc.data.features)) throw InputError("features file not found: " + rc.data.features.string());
  if (!fs::exists(rc.data.labels)) throw InputError("labels file not found: " + rc.data.labels.string());
  return attach_features_labels(g, rc.data.features, rc.data.labels);
}

TransactionGraph load_graph(const Context& ctx) {
  fs::path cache = out_path(ctx, "graph.cache");
  if (fs::exists(cache)) return load_graph_cache(cache);
  return build_graph(ctx.rc);
}

Json graph_summary(const TransactionGraph& g) {
  std::size_t fraud = 0, normal = 0;
  for (auto y : g.labels()) {
    fraud += y == 1;
    normal += y == 0;
  }
  return {{"num_nodes", g.num_nodes()},
          {"num_edges", g.num_edges()},
          {"tau_max", g.tau_max()},
          {"average_degree", g.average_degree()},
          {"feature_dim", g.feature_dim()},
          {"labeled", fraud + normal},
          {"fraud", fraud},
          {"normal", normal},
          {"fraud_ratio", fraud + normal ? static_cast<double>(fraud) / static_cast<double>(fraud + normal) : 0.0}};
}

std::uint64_t split_seed(const RunConfig& rc) { return rc.data.split_seed.value_or(rc.train.seed); }

int cmd_ingest(Context& ctx) {
  TransactionGraph g = build_graph(ctx.rc);
  save_graph_cache(g, out_path(ctx, "graph.cache"));
  {
    auto f = open_out(out_path(ctx, "id_map.csv"));
    f << "node_id,external_id\n";
    const auto& ids = g.external_ids();
    for (std::size_t v = 0; v < g.num_nodes(); ++v) f << v << "," << (ids.empty() ? std::to_string(v) : ids[v]) << "\n";
  }
  Json summary = graph_summary(g);
  write_json(out_path(ctx, "summary.json"), summary);
  ctx.out << summary.dump(2) << "\n";
  return 0;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string(what) + ": not a number: '" + item + "'");
    }
  }
  return out;
}

int cmd_motifs(Context& ctx, const std::string& grid_flag) {
  std::vector<double> grid = grid_flag.empty() ? ctx.rc.analysis.delta_grid : parse_list(grid_flag, "--delta-grid");
  if (grid.empty()) throw ValidationError("motifs: empty delta grid (set analysis.delta_grid or --delta-grid)");
  TransactionGraph g = load_graph(ctx);
  const double tau = static_cast<double>(std::max<Timestamp>(g.tau_max(), 1));
  for (auto& d : grid) {
    if (!(d > 0.0)) throw ValidationError("motifs: delta values must be positive");
    if (d > tau) {
      ctx.err << "warning: delta " << d << " exceeds tau_max " << tau << "; clamped\n";
      d = tau;
    }
  }
  const auto& catalog = build_catalog(ctx.rc.model.head.catalog_mode);
  const auto labeled = g.labeled_nodes();
  BuildIndexOptions opts{ctx.rc.train.instance_cap, ctx.rc.train.jobs, 0};
  std::vector<MotifIndex> indexes;
  for (double d : grid) indexes.push_back(build_index(g, std::vector<double>(g.num_nodes(), d), labeled, catalog, opts));
  MotifHistogram hist = motif_histogram(indexes, g.labels(), grid);
  Json files = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::string name = "motif_hist_" + std::to_string(i) + ".csv";
    auto f = open_out(out_path(ctx, name));
    write_histogram_csv(hist, i, catalog, f);
    files.push_back({{"delta", grid[i]}, {"file", name}});
  }

  double corr_delta = ctx.rc.analysis.correlation_delta.value_or(*std::min_element(grid.begin(), grid.end()));
  corr_delta = std::min(corr_delta, tau);
  std::vector<NodeId> fraud;
  for (NodeId v : labeled)
    if (g.labels()[v] == 1) fraud.push_back(v);
  MotifIndex corr_index = build_index(g, std::vector<double>(g.num_nodes(), corr_delta), fraud, catalog, opts);
  {
    auto f = open_out(out_path(ctx, "motif_correlation.csv"));
    write_matrix_csv(motif_cross_correlation(corr_index, fraud), f);
  }
  Json summary = {{"catalog", {{"mode", to_string(catalog.mode())}, {"size", catalog.size()}}},
                  {"histograms", files},
                  {"correlation", {{"delta", corr_delta}, {"nodes", fraud.size()}, {"file", "motif_correlation.csv"}}}};
  write_json(out_path(ctx, "motifs_summary.json"), summary);
  ctx.out << summary.dump(2) << "\n";
  return 0;
}

struct SplitRun {
  SplitSpec split;
  TrainResult result;
};

std::vector<SplitRun> run_splits(const Context& ctx, const TransactionGraph& g, const TrainConfig& tc) {
  auto splits = make_splits(g, ctx.rc.data.splits, ctx.rc.data.train_fraction, split_seed(ctx.rc));
  std::vector<SplitRun> runs;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    TrainConfig c = tc;
    c.seed = tc.seed + i;
    runs.push_back({splits[i], train(g, splits[i], ctx.rc.model, c)});
  }
  return runs;
}

EvalMetrics mean_test(const std::vector<SplitRun>& runs) {
  EvalMetrics m;
  for (const auto& r : runs) {
    m.auc += r.result.report.test.auc;
    m.auprc += r.result.report.test.auprc;
    m.accuracy += r.result.report.test.accuracy;
    m.num_nodes += r.result.report.test.num_nodes;
  }
  const auto k = static_cast<double>(runs.size());
  m.auc /= k;
  m.auprc /= k;
  m.accuracy /= k;
  return m;
}

void write_deltas_csv(const fs::path& p, const ModelState& s, const TransactionGraph& g, std::span<const NodeId> nodes) {
  auto f = open_out(p);
  f << "node,label,delta\n";
  if (s.deltas.empty()) return;
  for (NodeId v : nodes) f << v << "," << static_cast<int>(g.labels()[v]) << "," << s.deltas[v] << "\n";
}

Json run_metadata(const RunConfig& rc, const TrainConfig& tc) {
  const auto& cat = build_catalog(rc.model.head.catalog_mode);
  ModelConfig mc = rc.model;
  mc.ablation = tc.ablation;
  return {{"model", to_json(mc)},
          {"train", to_json(tc)},
          {"catalog", {{"mode", to_string(cat.mode())}, {"size", cat.size()}}},
          {"window_input", "backbone embedding h_v (the final embedding depends on the extracted motifs)"},
          {"splits", {{"k", rc.data.splits}, {"train_fraction", rc.data.train_fraction}, {"seed", split_seed(rc)}}}};
}

int cmd_train(Context& ctx, bool ablation_table, bool compare_windows) {
  TransactionGraph g = load_graph(ctx);
  const auto& rc = ctx.rc;
  auto runs = run_splits(ctx, g, rc.train);

  Json report = run_metadata(rc, rc.train);
  Json per_split = Json::array();
  const auto labeled = g.labeled_nodes();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    std::string tag = "split" + std::to_string(i);
    save_checkpoint(r.result.state, out_path(ctx, "model_" + tag + ".ckpt"));
    {
      auto f = open_out(out_path(ctx, "loss_curve_" + tag + ".csv"));
      f << "epoch,loss,delta_mean,delta_min,delta_max\n";
      const auto& rep = r.result.report;
      for (std::size_t e = 0; e < rep.loss_curve.size(); ++e) {
        f << e + 1 << "," << rep.loss_curve[e];
        if (e < rep.delta_stats.size())
          f << "," << rep.delta_stats[e].mean << "," << rep.delta_stats[e].min << "," << rep.delta_stats[e].max;
        else
          f << ",,,";
        f << "\n";
      }
    }
    write_deltas_csv(out_path(ctx, "deltas_" + tag + ".csv"), r.result.state, g, labeled);
    Json rep = to_json(r.result.report);
    rep.erase("seconds");
    per_split.push_back({{"index", i},
                         {"seed", r.split.seed},
                         {"train_nodes", r.split.train_ids.size()},
                         {"test_nodes", r.split.test_ids.size()},
                         {"checkpoint", "model_" + tag + ".ckpt"},
                         {"final_delta", to_json(delta_stats(r.result.state.deltas, g.labels()))},
                         {"report", rep}});
  }
  report["per_split"] = per_split;
  report["mean"] = to_json(mean_test(runs));

  if (ablation_table) {
    std::vector<Ablation> list = rc.analysis.ablations;
    if (list.empty())
      list = {Ablation::gcn_only, Ablation::tm_fixed, Ablation::tm_ada, Ablation::tm_ada_intra,
              Ablation::tm_ada_inter, Ablation::full};
    auto f = open_out(out_path(ctx, "ablation_table.csv"));
    f << "ablation,mean_auc,mean_auprc,mean_accuracy\n";
    Json table = Json::array();
    for (Ablation a : list) {
      TrainConfig tc = rc.train;
      tc.ablation = a;
      EvalMetrics m = mean_test(run_splits(ctx, g, tc));
      f << to_string(a) << "," << m.auc << "," << m.auprc << "," << m.accuracy << "\n";
      table.push_back({{"ablation", to_string(a)}, {"mean", to_json(m)}});
    }
    report["ablation_table"] = table;
  }

  if (compare_windows) {
    if (rc.analysis.window_grid.empty()) throw ValidationError("train: --compare-windows needs analysis.window_grid");
    auto f = open_out(out_path(ctx, "window_comparison.csv"));
    f << "delta,fixed_auc,fixed_auprc,adaptive_auc,adaptive_auprc\n";
    Json table = Json::array();
    for (double d : rc.analysis.window_grid) {
      TrainConfig fixed = rc.train, ada = rc.train;
      fixed.ablation = Ablation::tm_fixed;
      fixed.delta_fixed = d;
      ada.ablation = Ablation::tm_ada;
      ada.delta_scope = d;
      EvalMetrics mf = mean_test(run_splits(ctx, g, fixed));
      EvalMetrics ma = mean_test(run_splits(ctx, g, ada));
      f << d << "," << mf.auc << "," << mf.auprc << "," << ma.auc << "," << ma.auprc << "\n";
      table.push_back({{"delta", d}, {"fixed", to_json(mf)}, {"adaptive", to_json(ma)}});
    }
    report["window_comparison"] = table;
  }

  write_json(out_path(ctx, "train_report.json"), report);
  ctx.out << Json{{"mean", report["mean"]}, {"splits", runs.size()}}.dump(2) << "\n";
  return 0;
}

int cmd_eval(Context& ctx, const std::string& checkpoint_flag, const std::string& which, int split_index) {
  if (which != "train" && which != "test") throw ValidationError("eval: --split must be 'train' or 'test'");
  fs::path ckpt = checkpoint_flag.empty() ? out_path(ctx, "model_split" + std::to_string(split_index) + ".ckpt")
                                          : fs::path(checkpoint_flag);
  if (!fs::exists(ckpt)) throw InputError("checkpoint not found: " + ckpt.string());
  ModelState state = load_checkpoint(ckpt);
  if (state.model.config().head.catalog_mode != ctx.rc.model.head.catalog_mode)
    throw FormatError(std::string("checkpoint/catalog mismatch: checkpoint uses ") +
                          to_string(state.model.config().head.catalog_mode) + ", config uses " +
                          to_string(ctx.rc.model.head.catalog_mode));
  TransactionGraph g = load_graph(ctx);
  auto splits = make_splits(g, ctx.rc.data.splits, ctx.rc.data.train_fraction, split_seed(ctx.rc));
  if (split_index < 0 || static_cast<std::size_t>(split_index) >= splits.size())
    throw ValidationError("eval: split index " + std::to_string(split_index) + " out of range");
  const auto& split = splits[static_cast<std::size_t>(split_index)];
  const auto& nodes = which == "train" ? split.train_ids : split.test_ids;
  EvalMetrics m = evaluate(state, g, nodes);
  write_deltas_csv(out_path(ctx, "eval_deltas.csv"), state, g, g.labeled_nodes());
  Json report = {{"checkpoint", ckpt.string()},
                 {"split", which},
                 {"split_index", split_index},
                 {"metrics", to_json(m)},
                 {"delta", to_json(delta_stats(state.deltas, g.labels()))}};
  write_json(out_path(ctx, "eval_report.json"), report);
  ctx.out << report.dump(2) << "\n";
  return 0;
}

int cmd_bench(Context& ctx, const std::string& sizes_flag, int repeats_flag) {
  std::vector<std::size_t> sizes = ctx.rc.analysis.bench_sizes;
  if (!sizes_flag.empty()) {
    sizes.clear();
    for (double s : parse_list(sizes_flag, "--sizes")) {
      if (!(s >= 10) || s != std::floor(s)) throw ValidationError("--sizes: node counts must be integers >= 10");
      sizes.push_back(static_cast<std::size_t>(s));
    }
  }
  BenchOptions opts;
  opts.avg_degree = ctx.rc.analysis.bench_avg_degree;
  opts.delta = ctx.rc.analysis.bench_delta;
  opts.repeats = repeats_flag > 0 ? repeats_flag : ctx.rc.analysis.bench_repeats;
  opts.catalog_mode = ctx.rc.model.head.catalog_mode;
  opts.cap_per_type = ctx.rc.train.instance_cap;
  opts.jobs = ctx.rc.train.jobs;
  opts.seed = ctx.rc.train.seed;
  auto rows = bench_enumeration(sizes, opts);
  std::vector<double> xs, ys;
  auto f = open_out(out_path(ctx, "bench.csv"));
  f << "num_nodes,num_edges,avg_degree,instances,mean_seconds,stddev_seconds\n";
  for (const auto& r : rows) {
    f << r.num_nodes << "," << r.num_edges << "," << r.avg_degree << "," << r.instances << "," << r.mean_seconds << ","
      << r.stddev_seconds << "\n";
    xs.push_back(static_cast<double>(r.num_nodes));
    ys.push_back(std::max(r.mean_seconds, 1e-9));
  }
  Json summary = {{"sizes", sizes}, {"repeats", opts.repeats}, {"avg_degree", opts.avg_degree}, {"delta", opts.delta}};
  if (rows.size() >= 2) summary["loglog_slope"] = loglog_slope(xs, ys);
  write_json(out_path(ctx, "bench_summary.json"), summary);
  ctx.out << summary.dump(2) << "\n";
  return 0;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message, const Json& context) {
  err << Json{{"code", code}, {"message", message}, {"context", context}}.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal-motif fraud detection on transaction graphs"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string output;
  app.add_option("--config", config_path, "Run configuration (JSON)")->required();
  app.add_option("--seed", seed, "Override train.seed and the split seed");
  app.add_option("--jobs", jobs, "Worker threads for motif enumeration")->check(CLI::PositiveNumber);
  app.add_option("--output", output, "Override output.directory");

  auto* ingest = app.add_subcommand("ingest", "Validate raw data and write the graph cache");
  auto* motifs = app.add_subcommand("motifs", "Per-window motif histograms and correlation");
  std::string delta_grid;
  motifs->add_option("--delta-grid", delta_grid, "Comma-separated windows");
  auto* trainc = app.add_subcommand("train", "Train over k splits");
  bool ablation_table = false, compare_windows = false;
  std::string ablation;
  trainc->add_flag("--ablation-table", ablation_table, "Also run every ablation");
  trainc->add_flag("--compare-windows", compare_windows, "Also compare fixed and adaptive windows");
  trainc->add_option("--ablation", ablation, "Override train.ablation");
  auto* evalc = app.add_subcommand("eval", "Re-score a checkpoint on a split");
  std::string checkpoint, which = "test";
  int split_index = 0;
  evalc->add_option("--checkpoint", checkpoint, "Checkpoint path");
  evalc->add_option("--split", which, "train or test");
  evalc->add_option("--split-index", split_index, "Split number");
  auto* bench = app.add_subcommand("bench", "Time motif enumeration against graph size");
  std::string sizes;
  int repeats = 0;
  bench->add_option("--sizes", sizes, "Comma-separated node counts");
  bench->add_option("--repeats", repeats, "Timed repetitions per size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage_error", e.what(), Json::object());
    return 2;
  }

  std::string command = app.get_subcommands().front()->get_name();
  Json context = {{"command", command}, {"config", config_path}};
  try {
    RunConfig rc = load_run_config(config_path);
    if (seed) {
      rc.train.seed = *seed;
      rc.data.split_seed = *seed;
    }
    if (jobs) rc.train.jobs = *jobs;
    if (!output.empty()) rc.output_dir = fs::absolute(output);
    if (!ablation.empty()) rc.train.ablation = ablation_from_string(ablation);
    fs::create_directories(rc.output_dir);
    Context ctx{std::move(rc), out, err};
    if (*ingest) return cmd_ingest(ctx);
    if (*motifs) return cmd_motifs(ctx, delta_grid);
    if (*trainc) return cmd_train(ctx, ablation_table, compare_windows);
    if (*evalc) return cmd_eval(ctx, checkpoint, which, split_index);
    if (*bench) return cmd_bench(ctx, sizes, repeats);
    return 1;
  } catch (const ParseError& e) {
    context["line"] = e.line();
    report_error(err, "parse_error", e.what(), context);
    return 2;
  } catch (const ValidationError& e) {
    report_error(err, "validation_error", e.what(), context);
    return 2;
  } catch (const FormatError& e) {
    report_error(err, "format_error", e.what(), context);
    return 2;
  } catch (const InputError& e) {
    report_error(err, "input_error", e.what(), context);
    return 2;
  } catch (const NumericError& e) {
    report_error(err, "numeric_error", e.what(), context);
    return 1;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "io_error", e.what(), context);
    return 2;
  } catch (const std::exception& e) {
    report_error(err, "internal_error", e.what(), context);
    return 1;
  }
}

}  // namespace atmgad::cli
