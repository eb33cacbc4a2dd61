#include "hdrfuse/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

#include "hdrfuse/checkpoint.hpp"
#include "hdrfuse/classical_mef.hpp"
#include "hdrfuse/config.hpp"
#include "hdrfuse/gamma.hpp"
#include "hdrfuse/metrics.hpp"
#include "hdrfuse/model.hpp"
#include "hdrfuse/parallel.hpp"
#include "hdrfuse/tables.hpp"
#include "hdrfuse/trainer.hpp"

namespace hdr::cli {
namespace {

namespace fs = std::filesystem;

// Collects output files and writes them only once the command has finished
// computing. If any write fails, files already written are removed.
class OutputSet {
 public:
  void add_image(fs::path path, Image img) {
    pending_.push_back({std::move(path), [img = std::move(img)](const fs::path& p) { save_image(img, p); }});
  }
  void add_text(fs::path path, std::string text) {
    pending_.push_back({std::move(path), [text = std::move(text)](const fs::path& p) {
                          std::ofstream out(p, std::ios::binary | std::ios::trunc);
                          if (!out) throw IoError("cannot write " + p.string());
                          out << text;
                          if (!out) throw IoError("failed writing " + p.string());
                        }});
  }
  void commit() {
    std::vector<fs::path> written;
    try {
      for (auto& [path, write] : pending_) {
        written.push_back(path);
        write(path);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& p : written) fs::remove(p, ec);
      throw;
    }
  }

 private:
  std::vector<std::pair<fs::path, std::function<void(const fs::path&)>>> pending_;
};

std::string fixed6(const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%.6f", key, v);
  return buf;
}

fs::path with_suffix(const std::string& prefix, const std::string& suffix) {
  return fs::path(prefix + suffix + ".png");
}

struct Options {
  std::string under, over, out, weights_out, model, config, image, fused, heatmap, csv, gamma;
  std::vector<std::string> stack, dirs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> window, stride, epochs;
  std::optional<double> width_mult;
  bool deterministic = false;
};

RunConfig resolve_run_config(const Options& o) {
  RunConfig rc;
  if (!o.config.empty()) rc = load_config(o.config, rc);
  if (o.seed) rc.train.seed = *o.seed;
  if (o.epochs) rc.train.epochs = *o.epochs;
  if (o.width_mult) rc.train.width_multiplier = *o.width_mult;
  if (o.window) rc.loss.window.window_size = *o.window;
  if (o.stride) rc.loss.window.stride = *o.stride;
  if (o.deterministic) rc.train.deterministic = true;
  if (!o.gamma.empty()) {
    auto k = parse_attribute(o.gamma);
    if (!k) throw CLI::ValidationError("--gamma", "unknown gamma kind " + o.gamma);
    rc.loss.gamma_kind = *k;
  }
  return rc;
}

SsimWindowSpec eval_window(const Options& o) {
  SsimWindowSpec spec = mef_ssim_default_spec();
  if (o.window) spec.window_size = *o.window;
  if (o.stride) spec.stride = *o.stride;
  return spec;
}

// A path is either one scene directory or a root holding scene directories.
std::vector<Scene> load_scenes(const std::string& path) {
  const fs::path p(path);
  if (is_scene_directory(p)) return {load_scene(p)};
  return load_scene_directory(p);
}

std::vector<Scene> load_scenes(const std::vector<std::string>& paths) {
  std::vector<Scene> scenes;
  for (const auto& path : paths) {
    auto sub = load_scenes(path);
    scenes.insert(scenes.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
  }
  return scenes;
}

ExposurePair load_pair(const Options& o) {
  return ExposurePair(load_image(o.under), load_image(o.over));
}

void add_weight_outputs(OutputSet& outputs, const std::string& prefix, const WeightMap& wmap) {
  for (std::size_t n = 0; n < wmap.exposures(); ++n) {
    outputs.add_image(with_suffix(prefix, "_" + std::to_string(n)), weight_image(wmap, n));
  }
}

double pair_score(const ExposurePair& pair, const Image& fused) {
  const Image stack[] = {pair.under, pair.over};
  return mef_ssim_score(stack, fused);
}

int cmd_fuse_classical(const Options& o, std::ostream& out) {
  const ExposurePair pair = load_pair(o);
  const MefResult r = adaptive_mef(pair, MefParams{});
  OutputSet outputs;
  outputs.add_image(o.out, r.fused);
  if (!o.weights_out.empty()) add_weight_outputs(outputs, o.weights_out, r.weights);
  const double score = pair_score(pair, r.fused);
  outputs.commit();
  out << fixed6("mef_ssim", score) << '\n';
  return kOk;
}

int cmd_fuse_learned(const Options& o, std::ostream& out) {
  const ModelParams<float> model = load_checkpoint<float>(o.model);
  const ExposurePair pair = load_pair(o);
  const WeightMap wmap = predict_weights(model, pair);
  const Image stack[] = {pair.under, pair.over};
  const Image fused = fuse(stack, wmap);
  OutputSet outputs;
  outputs.add_image(o.out, fused);
  if (!o.weights_out.empty()) add_weight_outputs(outputs, o.weights_out, wmap);
  const double score = pair_score(pair, fused);
  outputs.commit();
  out << fixed6("mef_ssim", score) << '\n';
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig rc = resolve_run_config(o);
  std::vector<ExposurePair> corpus;
  for (const auto& scene : load_scenes(o.dirs)) corpus.push_back(scene.pair());
  if (!o.under.empty() || !o.over.empty()) corpus.push_back(load_pair(o));
  if (corpus.empty()) throw CLI::ValidationError("train", "no training pairs given");

  const fs::path ckpt(o.out);
  const bool existed = fs::exists(ckpt);
  try {
    train<float>(corpus, rc.train, rc.loss, ckpt,
                 [&out](const EpochLog& log) { out << format_log_line(log) << '\n' << std::flush; });
  } catch (...) {
    std::error_code ec;
    if (!existed) fs::remove(ckpt, ec);
    fs::remove(fs::path(ckpt.string() + ".tmp"), ec);
    throw;
  }
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  std::vector<Image> stack;
  for (const auto& p : o.stack) stack.push_back(load_image(p));
  if (!o.under.empty()) stack.push_back(load_image(o.under));
  if (!o.over.empty()) stack.push_back(load_image(o.over));
  if (stack.size() < 2) throw CLI::ValidationError("eval", "need at least two exposures (--stack or --under/--over)");
  const Image fused = load_image(o.fused);

  std::vector<Image> gray;
  for (const auto& img : stack) gray.push_back(to_grayscale(img));
  const MefSsimReport report = mef_ssim(gray, to_grayscale(fused), eval_window(o));

  OutputSet outputs;
  if (!o.heatmap.empty()) outputs.add_image(o.heatmap, score_heatmap(report));
  if (!o.csv.empty()) {
    std::string text = "anchor_row,anchor_col,score\n";
    char line[96];
    for (std::size_t r = 0; r < report.grid.rows; ++r) {
      for (std::size_t c = 0; c < report.grid.cols; ++c) {
        std::snprintf(line, sizeof line, "%zu,%zu,%.6f\n", report.grid.anchor_row(r), report.grid.anchor_col(c),
                      report.per_patch_scores[r * report.grid.cols + c]);
        text += line;
      }
    }
    outputs.add_text(o.csv, std::move(text));
  }
  outputs.commit();
  out << fixed6("mef_ssim", report.global_score) << '\n';
  return kOk;
}

int cmd_gamma_viz(const Options& o, std::ostream&) {
  const ExposurePair pair = load_pair(o);
  SsimWindowSpec window{7, 1, 0.01 * 0.01, 0.03 * 0.03};
  if (o.window) window.window_size = *o.window;
  if (o.stride) window.stride = *o.stride;
  OutputSet outputs;
  for (AttributeKind kind : kAllAttributeKinds) {
    auto [under, over] = render_attribute_maps(pair, kind, window);
    const std::string name(attribute_name(kind));
    outputs.add_image(with_suffix(o.out, "_" + name + "_under"), std::move(under));
    outputs.add_image(with_suffix(o.out, "_" + name + "_over"), std::move(over));
  }
  outputs.commit();
  return kOk;
}

int emit_table(const ScoreTable& table, const Options& o, std::ostream& out) {
  const std::string csv = table.to_csv();
  if (!o.csv.empty()) {
    OutputSet outputs;
    outputs.add_text(o.csv, csv);
    outputs.commit();
  }
  out << csv;
  return kOk;
}

int cmd_table1(const Options& o, std::ostream& out) {
  if (o.dirs.empty()) throw CLI::ValidationError("table1", "expects a directory of scenes");
  return emit_table(evaluate_mef_table(load_scenes(o.dirs), MefParams{}), o, out);
}

int cmd_table2(const Options& o, std::ostream& out) {
  if (o.dirs.empty() || o.dirs.size() > 2) {
    throw CLI::ValidationError("table2", "expects a training directory and optionally a test directory");
  }
  const RunConfig rc = resolve_run_config(o);
  const std::vector<Scene> train_set = load_scenes(o.dirs.front());
  const std::vector<Scene> test_set = o.dirs.size() == 2 ? load_scenes(o.dirs.back()) : train_set;
  std::vector<LossConfig> configs;
  for (AttributeKind kind : ablation_gamma_kinds()) {
    LossConfig lc = rc.loss;
    lc.gamma_kind = kind;
    configs.push_back(lc);
  }
  return emit_table(evaluate_gamma_table(train_set, test_set, configs, rc.train), o, out);
}

int cmd_dr(const Options& o, std::ostream& out) {
  out << fixed6("dr", dynamic_range(load_image(o.image))) << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-exposure HDR fusion toolkit", "hdrfuse"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_pair = [&o](CLI::App* sub, bool required) {
    auto* u = sub->add_option("--under", o.under, "Under-exposed image");
    auto* v = sub->add_option("--over", o.over, "Over-exposed image");
    if (required) {
      u->required();
      v->required();
    }
  };
  auto add_training = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_option("--gamma", o.gamma, "variance|gradient|wellexp|var-grad|grad-well|var-well");
    sub->add_option("--window", o.window, "Loss window size");
    sub->add_option("--stride", o.stride, "Loss window stride");
    sub->add_option("--width-mult", o.width_mult, "Channel width multiplier");
    sub->add_option("--epochs", o.epochs, "Training epochs");
  };

  auto* fc = app.add_subcommand("fuse-classical", "Adaptive-weight exposure fusion");
  add_pair(fc, true);
  fc->add_option("--out", o.out, "Fused image")->required();
  fc->add_option("--weights-out", o.weights_out, "Prefix for weight map PNGs");

  auto* fl = app.add_subcommand("fuse-learned", "Fusion with a trained network");
  add_pair(fl, true);
  fl->add_option("--model", o.model, "Checkpoint file")->required();
  fl->add_option("--out", o.out, "Fused image")->required();
  fl->add_option("--weights-out", o.weights_out, "Prefix for weight map PNGs");

  auto* tr = app.add_subcommand("train", "Unsupervised training");
  add_pair(tr, false);
  add_training(tr);
  tr->add_option("--out", o.out, "Checkpoint file")->required();
  tr->add_option("scenes", o.dirs, "Scene directories or roots of scene directories");

  auto* ev = app.add_subcommand("eval", "MEF-SSIM of a fused image");
  add_pair(ev, false);
  ev->add_option("--stack", o.stack, "Exposure images");
  ev->add_option("--fused", o.fused, "Fused image")->required();
  ev->add_option("--window", o.window, "Window size");
  ev->add_option("--stride", o.stride, "Window stride");
  ev->add_option("--heatmap", o.heatmap, "Per-window score heatmap PNG");
  ev->add_option("--csv", o.csv, "Per-window scores as CSV");

  auto* gv = app.add_subcommand("gamma-viz", "Attribute maps of both exposures for every kind");
  add_pair(gv, true);
  gv->add_option("--out", o.out, "Output prefix")->required();
  gv->add_option("--window", o.window, "Window size");
  gv->add_option("--stride", o.stride, "Window stride");

  auto* t1 = app.add_subcommand("table1", "Classical fusion scores over scene directories");
  t1->add_option("scenes", o.dirs, "Scene directories or roots")->required();
  t1->add_option("--csv", o.csv, "CSV output file");

  auto* t2 = app.add_subcommand("table2", "Train per gamma kind and score the learned fusion");
  add_training(t2);
  t2->add_option("scenes", o.dirs, "Training root, then optional test root")->required();
  t2->add_option("--csv", o.csv, "CSV output file");

  auto* dr = app.add_subcommand("dr", "Dynamic range of an image");
  dr->add_option("--image", o.image, "Input image")->required();

  for (auto* sub : {fc, fl, tr, ev, gv, t1, t2, dr}) {
    sub->add_flag("--deterministic", o.deterministic, "Single-threaded execution");
  }

  std::vector<std::string> owned{"hdrfuse"};
  owned.insert(owned.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : owned) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    CLI::App* active = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << active->help();
    return kUsage;
  }

  set_deterministic(o.deterministic);
  try {
    if (*fc) return cmd_fuse_classical(o, out);
    if (*fl) return cmd_fuse_learned(o, out);
    if (*tr) return cmd_train(o, out);
    if (*ev) return cmd_eval(o, out);
    if (*gv) return cmd_gamma_viz(o, out);
    if (*t1) return cmd_table1(o, out);
    if (*t2) return cmd_table2(o, out);
    if (*dr) return cmd_dr(o, out);
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumeric;
  }
  return kUsage;
}

}  // namespace hdr::cli
