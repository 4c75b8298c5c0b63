#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "tspulse/adapt.hpp"
#include "tspulse/anomaly.hpp"
#include "tspulse/cli.hpp"
#include "tspulse/error.hpp"
#include "tspulse/imputation.hpp"
#include "tspulse/io.hpp"
#include "tspulse/kernels.hpp"
#include "tspulse/search.hpp"
#include "tspulse/synth.hpp"
#include "tspulse/train.hpp"

namespace tspulse::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Run {
 public:
  Run(const std::string& command, const json& cfg, std::ostream& log)
      : command_(command), cfg_(cfg), log_(log), out_(cfg.at("out").get<std::string>()) {
    manifest_["command"] = command;
    manifest_["config"] = cfg;
    manifest_["seed"] = seed();
  }

  const json& cfg() const { return cfg_; }
  std::ostream& log() { return log_; }
  std::uint64_t seed() const { return cfg_.at("seed").get<std::uint64_t>(); }
  std::string str(const char* key) const { return cfg_.at(key).get<std::string>(); }
  double num(const char* key) const { return cfg_.at(key).get<double>(); }
  std::size_t count(const char* key) const {
    const long long v = cfg_.at(key).get<long long>();
    if (v < 0) throw ConfigError(std::string("key '") + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }
  std::string required(const char* key) const {
    std::string v = str(key);
    if (v.empty()) throw ConfigError(std::string("key '") + key + "' is required for " + command_);
    return v;
  }
  std::optional<std::string> optional_str(const char* key) const {
    std::string v = str(key);
    if (v.empty()) return std::nullopt;
    return v;
  }

  std::string path(const std::string& name) {
    outputs_.push_back(name);
    return (out_ / name).string();
  }
  void warn(const std::string& w) {
    log_ << "warning: " << w << '\n';
    warnings_.push_back(w);
  }
  template <typename F>
  auto timed(const char* phase, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings_[phase] = seconds_since(t0);
    } else {
      auto r = f();
      timings_[phase] = seconds_since(t0);
      return r;
    }
  }
  json& report() { return report_; }

  void prepare() {
    fs::create_directories(out_);
    kernels::set_num_threads(static_cast<int>(count("threads")));
    const std::string k = str("kernels");
    if (k != "auto") kernels::select(kernels::parse_backend(k));
    manifest_["versions"] = {{"tspulse", kVersion},
                             {"compiler", __VERSION__},
                             {"kernels", kernels::backend_name(kernels::active().backend)}};
  }

  void finish(const std::string& status) {
    manifest_["status"] = status;
    manifest_["timings_s"] = timings_;
    manifest_["outputs"] = outputs_;
    manifest_["warnings"] = warnings_;
    if (!report_.empty()) manifest_["report"] = report_;
    std::error_code ec;
    if (!fs::is_directory(out_, ec)) return;
    std::ofstream os(out_ / "manifest.json", std::ios::trunc);
    os << manifest_.dump(2) << '\n';
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }

  std::string command_;
  json cfg_;
  std::ostream& log_;
  fs::path out_;
  json manifest_;
  json timings_ = json::object();
  json report_ = json::object();
  std::vector<std::string> outputs_;
  std::vector<std::string> warnings_;
};

Model load_model(Run& r) { return r.timed("load", [&] { return load_checkpoint(r.required("checkpoint")); }); }

void write_report(Run& r) {
  std::ofstream os(r.path("report.json"), std::ios::trunc);
  os << r.report().dump(2) << '\n';
}

MaskKind parse_mask_kind(const std::string& s) {
  if (s == "block") return MaskKind::block;
  if (s == "hybrid") return MaskKind::hybrid;
  throw ConfigError("mask kind must be 'block' or 'hybrid', got '" + s + "'");
}

// ---------------------------------------------------------------- pretrain

void cmd_pretrain(Run& r) {
  const TaskPreset preset = task_preset(parse_task(r.str("preset")));
  json mj = r.cfg().at("model");
  if (!mj.contains("patch_len")) mj["patch_len"] = preset.patch_len;
  Model model = r.optional_str("checkpoint") ? load_model(r) : init_model(ModelConfig::from_json(mj), derive_seed(r.seed(), "init"));
  const ModelConfig& mc = model.cfg;

  std::vector<Series> windows;
  if (auto data = r.optional_str("data")) {
    for (auto& it : read_corpus_csv(*data)) windows.push_back(std::move(it.x));
  } else {
    windows = r.timed("generate", [&] {
      return build_pretrain_corpus(r.count("n"), mc.context + mc.pred_len, r.seed(), CorpusSplit::train);
    });
  }
  for (const Series& w : windows)
    if (w.length < mc.context) {
      throw DimensionError("pretraining windows need at least " + std::to_string(mc.context) + " steps, got " +
                           std::to_string(w.length));
    }
  const double frac = r.num("eval_fraction");
  if (!(frac >= 0.0 && frac < 1.0)) throw ConfigError("key 'eval_fraction' must lie in [0, 1)");
  const std::size_t n_eval = static_cast<std::size_t>(std::floor(frac * double(windows.size())));
  std::vector<Series> eval(windows.end() - std::ptrdiff_t(n_eval), windows.end());
  windows.resize(windows.size() - n_eval);

  PretrainOptions opt;
  opt.epochs = r.count("epochs");
  opt.batch_size = r.count("batch_size");
  opt.lr = r.num("lr");
  opt.seed = derive_seed(r.seed(), "pretrain");
  opt.weights = preset.weights;
  opt.mask = r.str("mask_kind").empty() ? preset.mask : parse_mask_kind(r.str("mask_kind"));
  opt.ratio_lo = r.num("ratio_lo");
  opt.ratio_hi = r.num("ratio_hi");
  opt.on_epoch = [&r](std::size_t e, const LossReport& l) {
    r.log() << "epoch " << e + 1 << " loss " << l.total << '\n';
  };
  const auto trace = r.timed("train", [&] { return pretrain(model, windows, opt); });
  save_checkpoint(model, r.path("model.tspl"));

  CsvTable t;
  t.header = {"epoch", "time1", "time2", "fft", "sign", "pred", "total"};
  for (std::size_t e = 0; e < trace.size(); ++e) {
    const LossReport& l = trace[e];
    t.rows.push_back({std::to_string(e + 1), format_double(l.time1), format_double(l.time2), format_double(l.fft),
                      format_double(l.sign), format_double(l.pred), format_double(l.total)});
  }
  write_csv(r.path("losses.csv"), t);
  r.report()["train_windows"] = windows.size();
  r.report()["parameters"] = parameter_count(model.params);
  if (!eval.empty()) {
    PretrainOptions eo = opt;
    eo.seed = derive_seed(r.seed(), "heldout");
    const LossReport l = r.timed("evaluate", [&] { return evaluate_losses(model, eval, eo); });
    r.report()["heldout_total_loss"] = l.total;
    r.report()["heldout_windows"] = eval.size();
  }
  write_report(r);
}

// ------------------------------------------------------- finetune-classify

void cmd_finetune(Run& r) {
  const Model model = load_model(r);
  const std::size_t C = r.count("channels");
  const auto missing = r.optional_str("missing");
  const LabeledSet train = read_labeled_csv(r.required("data"), C, missing);
  FinetuneConfig fc;
  const double mr = r.num("mask_ratio");
  fc.mask_ratio = mr > 0.0 ? std::optional<double>(mr) : std::nullopt;
  fc.channel_expansion = r.count("expansion");
  fc.d_proj = r.count("d_proj");
  fc.activation = parse_head_activation(r.str("activation"));
  fc.head = parse_head_kind(r.str("head"));
  fc.epochs = r.count("epochs");
  fc.batch_size = r.count("batch_size");
  fc.lr = r.num("lr");
  fc.val_fraction = r.num("val_fraction");
  fc.patience = r.count("patience");
  fc.seed = derive_seed(r.seed(), "finetune");
  const FinetuneResult res = r.timed("train", [&] { return finetune_classifier(train, model, fc); });

  CsvTable h;
  h.header = {"epoch", "train_loss", "val_loss", "val_accuracy"};
  for (std::size_t e = 0; e < res.history.size(); ++e) {
    const EpochLog& l = res.history[e];
    h.rows.push_back({std::to_string(e + 1), format_double(l.train_loss), format_double(l.val_loss),
                      format_double(l.val_accuracy)});
  }
  write_csv(r.path("history.csv"), h);
  r.report()["best_epoch"] = res.best_epoch + 1;
  r.report()["val_accuracy"] = res.val_accuracy;
  if (auto test_path = r.optional_str("test_data")) {
    const LabeledSet test = read_labeled_csv(*test_path, C, missing);
    const auto pred = r.timed("predict", [&] { return predict(res.classifier, test.series); });
    std::size_t ok = 0;
    CsvTable p;
    p.header = {"sample", "label", "predicted"};
    for (std::size_t i = 0; i < pred.size(); ++i) {
      ok += pred[i] == test.labels[i];
      p.rows.push_back({std::to_string(i), std::to_string(test.labels[i]), std::to_string(pred[i])});
    }
    write_csv(r.path("predictions.csv"), p);
    r.report()["test_accuracy"] = double(ok) / double(pred.size());
    r.log() << "test accuracy " << double(ok) / double(pred.size()) << '\n';
  }
  write_report(r);
}

// ------------------------------------------------------------------ impute

SeriesCsvOptions series_options(const Run& r, std::optional<std::string> label_column = std::nullopt) {
  SeriesCsvOptions o;
  o.layout = parse_layout(r.str("layout"));
  o.missing = r.optional_str("missing");
  o.label_column = std::move(label_column);
  return o;
}

Series complete(const Series& x, const std::string& method, const Model& model, std::vector<std::string>& warn) {
  if (method == "tspulse") return impute(x, model, &warn);
  return baseline_interpolate(x, parse_baseline(method), &warn);
}

void cmd_impute(Run& r) {
  const Model model = load_model(r);
  const SeriesCsv in = read_series_csv(r.required("data"), series_options(r));
  const std::string method = r.str("method");
  if (method != "tspulse") parse_baseline(method);
  std::vector<std::string> warn;
  Series target = in.series;
  const double ratio = r.num("ratio");
  if (ratio > 0.0) {
    const std::size_t pl = model.cfg.patch_len;
    if (target.length % pl != 0) {
      throw ConfigError("evaluation masks need a length divisible by the patch length " + std::to_string(pl));
    }
    const MaskPlan raw = generate_eval_mask({parse_mask_kind(r.str("mask_kind")), ratio, derive_seed(r.seed(), "impute")},
                                            target.length, target.channels, pl);
    // Only observed entries can be scored.
    std::vector<std::uint8_t> pts = raw.point_mask;
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = pts[i] && in.series.is_observed(i / target.channels, i % target.channels);
    const MaskPlan plan = MaskPlan::from_points(pts, target.length, target.channels, pl);
    target = hide(in.series, plan);
    json mse;
    for (const std::string m : {"tspulse", "naive", "linear", "nearest", "cubic"}) {
      std::vector<std::string> w;
      const Series done = r.timed(m == "tspulse" ? "impute_model" : "impute_baselines",
                                  [&] { return complete(target, m, model, w); });
      mse[m] = eval_mse_masked(in.series, done, plan);
    }
    r.report()["masked_points"] = plan.masked_count();
    r.report()["masked_mse"] = mse;
  }
  const Series out = r.timed("impute", [&] { return complete(target, method, model, warn); });
  for (const auto& w : warn) r.warn(w);
  write_series_csv(r.path("imputed.csv"), out, in.channel_names);
  write_report(r);
}

// ------------------------------------------------------------------ detect

Series fill_gaps(Run& r, const Series& x) {
  if (x.fully_observed()) return x;
  r.warn("input has missing values; they were filled by linear interpolation before scoring");
  std::vector<std::string> w;
  Series out = baseline_interpolate(x, BaselineMethod::linear, &w);
  for (const auto& s : w) r.warn(s);
  return out;
}

void cmd_detect(Run& r) {
  const Model model = load_model(r);
  const std::string label_col = r.str("label_column");
  SeriesCsvOptions opt = series_options(r);
  {
    const CsvTable probe = read_csv(r.required("data"));
    if (std::find(probe.header.begin(), probe.header.end(), label_col) != probe.header.end()) opt.label_column = label_col;
  }
  const SeriesCsv in = read_series_csv(r.required("data"), opt);
  const Series x = fill_gaps(r, in.series);
  const ModelScorer scorer(model);
  const std::size_t S = model.cfg.context;

  std::vector<LabeledSeries> tuning;
  if (auto tune = r.optional_str("tune")) {
    SeriesCsvOptions to = series_options(r, label_col);
    const SeriesCsv t = read_series_csv(*tune, to);
    tuning.push_back({fill_gaps(r, t.series), t.labels});
  }
  std::size_t w = r.count("window");
  if (w == 0) {
    std::vector<std::size_t> cands;
    for (std::size_t c : kWindowCandidates)
      if (c < S) cands.push_back(c);
    if (cands.empty()) throw ConfigError("no default window fits context " + std::to_string(S) + "; set 'window'");
    if (tuning.empty() && std::find(cands.begin(), cands.end(), kDefaultWindow) == cands.end()) {
      throw ConfigError("default window " + std::to_string(kDefaultWindow) + " needs a context above " +
                        std::to_string(kDefaultWindow) + "; set 'window' or supply 'tune'");
    }
    w = r.timed("select_window", [&] { return select_window(tuning, scorer, cands); });
  }
  const std::string head_str = r.str("head");
  ScoreHead head = ScoreHead::ensemble;
  if (head_str == "auto") {
    if (tuning.empty()) throw ConfigError("head 'auto' needs a 'tune' file");
    const HeadChoice hc = r.timed("triangulate", [&] { return triangulate(tuning, scorer, w); });
    head = hc.selected;
    for (ScoreHead h : kScoreHeads) r.report()["tuning_auc_pr"][head_name(h)] = hc.metric[std::size_t(h)];
  } else {
    head = parse_score_head(head_str);
  }
  const HeadScores hs = r.timed("score", [&] { return score_all(x, scorer, w); });
  for (ScoreHead h : kScoreHeads)
    for (double v : hs.get(h).alpha)
      if (!std::isfinite(v)) throw NumericalError(std::string("non-finite ") + head_name(h) + " anomaly score");
  const auto& sel = hs.get(head).alpha;
  CsvTable t;
  t.header = {"t", "score", "time", "fft", "pred", "ensemble"};
  for (std::size_t i = 0; i < x.length; ++i) {
    t.rows.push_back({std::to_string(i), format_double(sel[i]), format_double(hs.time.alpha[i]),
                      format_double(hs.fft.alpha[i]), format_double(hs.pred.alpha[i]),
                      format_double(hs.ensemble.alpha[i])});
  }
  write_csv(r.path("scores.csv"), t);
  r.report()["window"] = w;
  r.report()["head"] = head_name(head);
  r.report()["argmax"] = std::size_t(std::max_element(sel.begin(), sel.end()) - sel.begin());
  if (!in.labels.empty() && std::find(in.labels.begin(), in.labels.end(), 1) != in.labels.end()) {
    for (ScoreHead h : kScoreHeads) r.report()["auc_pr"][head_name(h)] = auc_pr(hs.get(h).alpha, in.labels);
  }
  write_report(r);
}

// -------------------------------------------------------- embed and search

void cmd_embed(Run& r) {
  const Model model = load_model(r);
  const auto items = read_corpus_csv(r.required("data"));
  std::vector<Series> xs;
  for (const auto& it : items) xs.push_back(it.x);
  const EmbeddingView view = parse_view(r.str("view"));
  const auto vecs = r.timed("embed", [&] { return embed_view(model, xs, view); });
  CsvTable t;
  t.header = {"id", "family", "fine"};
  for (std::size_t j = 0; j < (vecs.empty() ? 0 : vecs[0].size()); ++j) t.header.push_back("e" + std::to_string(j));
  FlatIndex index;
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::vector<std::string> row{items[i].id, items[i].family, items[i].fine};
    for (double v : vecs[i]) row.push_back(format_double(v));
    t.rows.push_back(std::move(row));
    if (r.cfg().at("index").get<bool>()) index.add(items[i].id, items[i].family, items[i].fine, vecs[i]);
  }
  write_csv(r.path("embeddings.csv"), t);
  if (r.cfg().at("index").get<bool>()) index.save(r.path("index.tspi"));
  r.report()["count"] = items.size();
  r.report()["dim"] = vecs.empty() ? 0 : vecs[0].size();
  write_report(r);
}

void cmd_search_bench(Run& r) {
  const Model model = load_model(r);
  std::vector<BenchmarkItem> items;
  if (auto data = r.optional_str("data")) items = read_corpus_csv(*data);
  else items = r.timed("generate", [&] { return build_search_corpus(model.cfg.context, r.seed()); });
  std::vector<int> strengths;
  for (const auto& v : r.cfg().at("strengths")) strengths.push_back(v.get<int>());
  const auto rows = r.timed("benchmark", [&] {
    return run_benchmark(items, register_embedder(model), strengths, derive_seed(r.seed(), "bench"), r.count("k"));
  });
  CsvTable t;
  t.header = {"task", "strength", "metric", "value"};
  for (const BenchmarkRow& row : rows) {
    const std::pair<const char*, double> ms[] = {{"prec", row.metrics.prec}, {"mrr", row.metrics.mrr},
                                                 {"ap", row.metrics.ap},     {"ndcg", row.metrics.ndcg},
                                                 {"self_top1", row.self_top1}};
    for (auto [name, v] : ms) t.rows.push_back({task_name(row.task), std::to_string(row.strength), name, format_double(v)});
    r.log() << task_name(row.task) << " s=" << row.strength << " prec@k " << row.metrics.prec << '\n';
  }
  write_csv(r.path("benchmark.csv"), t);
  r.report()["items"] = items.size();
  write_report(r);
}

void cmd_sensitivity(Run& r) {
  const Model model = load_model(r);
  SensitivityConfig sc;
  sc.samples = r.count("samples");
  sc.pairs = r.count("pairs");
  sc.seed = derive_seed(r.seed(), "sensitivity");
  const auto rows = r.timed("sensitivity", [&] { return run_sensitivity(model, sc); });
  CsvTable t;
  t.header = {"view", "perturbation", "level", "delta", "used", "skipped"};
  for (const SensitivityRow& row : rows) {
    t.rows.push_back({view_name(row.view), row.perturbation, format_double(row.level), format_double(row.delta.value),
                      std::to_string(row.delta.used), std::to_string(row.delta.skipped)});
    if (row.delta.skipped) r.warn(row.perturbation + " pairs skipped for the " + view_name(row.view) + " view");
  }
  write_csv(r.path("sensitivity.csv"), t);
  write_report(r);
}

void cmd_synth_gen(Run& r) {
  const std::string kind = r.str("kind");
  const std::size_t n = r.count("n"), L = r.count("length");
  std::vector<BenchmarkItem> items;
  if (kind == "search") {
    items = build_search_corpus(L, r.seed());
    if (n > items.size()) throw ConfigError("key 'n' exceeds the " + std::to_string(items.size()) + " search recipes");
    items.resize(n);
  } else if (kind == "pretrain") {
    const std::string split = r.str("split");
    if (split != "train" && split != "eval") throw ConfigError("key 'split' must be 'train' or 'eval'");
    const auto xs = build_pretrain_corpus(n, L, r.seed(), split == "train" ? CorpusSplit::train : CorpusSplit::eval);
    for (std::size_t i = 0; i < xs.size(); ++i) items.push_back({xs[i], split + std::to_string(i), "pretrain", "pretrain"});
  } else {
    throw ConfigError("key 'kind' must be 'search' or 'pretrain'");
  }
  write_corpus_csv(r.path("corpus.csv"), items);
  r.report()["rows"] = items.size();
  write_report(r);
}

}  // namespace

void run_command(const std::string& command, const json& cfg, std::ostream& log) {
  Run r(command, cfg, log);
  try {
    r.prepare();
    if (command == "pretrain") cmd_pretrain(r);
    else if (command == "finetune-classify") cmd_finetune(r);
    else if (command == "impute") cmd_impute(r);
    else if (command == "detect") cmd_detect(r);
    else if (command == "embed") cmd_embed(r);
    else if (command == "search-bench") cmd_search_bench(r);
    else if (command == "sensitivity") cmd_sensitivity(r);
    else if (command == "synth-gen") cmd_synth_gen(r);
    else throw ConfigError("unknown command '" + command + "'");
  } catch (const std::exception& e) {
    r.finish(std::string("error: ") + e.what());
    throw;
  }
  r.finish("ok");
}

}  // namespace tspulse::cli
