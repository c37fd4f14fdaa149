#include "nodeval/cli.hpp"

#include "nodeval/config.hpp"
#include "nodeval/dataio.hpp"
#include "nodeval/decode.hpp"
#include "nodeval/errors.hpp"
#include "nodeval/losses.hpp"
#include "nodeval/metrics.hpp"
#include "nodeval/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace nodeval {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot read file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot write file '" + path.string() + "'");
  }
  out << content;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// Flags override config-file values which override defaults.
struct CommonFlags {
  std::string config_path;
  std::string out_dir = "out";
  double iou_thresh = 0.0;
  double nms_thresh = 0.0;
  double conf_thresh = 0.0;
  std::uint64_t seed = 0;
  int train_count = 0;
  int grid_size = 0;
  std::string anchors;

  CLI::Option* iou_opt = nullptr;
  CLI::Option* nms_opt = nullptr;
  CLI::Option* conf_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* train_opt = nullptr;
  CLI::Option* grid_opt = nullptr;
  CLI::Option* anchors_opt = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat `key = value` config file");
    cmd->add_option("--out-dir", out_dir, "output directory (default: out)");
    iou_opt = cmd->add_option("--iou-thresh", iou_thresh, "TP matching IoU threshold");
    nms_opt = cmd->add_option("--nms-thresh", nms_thresh, "NMS IoU threshold");
    conf_opt = cmd->add_option("--conf-thresh", conf_thresh, "confidence threshold");
    seed_opt = cmd->add_option("--seed", seed, "PRNG seed");
    train_opt = cmd->add_option("--train-count", train_count, "training split size");
    grid_opt = cmd->add_option("--grid-size", grid_size, "detector grid size S");
    anchors_opt = cmd->add_option("--anchors", anchors, "anchor list as w:h,w:h,...");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) {
      config = parse_run_config(read_file(config_path));
    }
    if (iou_opt && iou_opt->count()) {
      config.iou_threshold = iou_thresh;
    }
    if (nms_opt && nms_opt->count()) {
      config.nms_threshold = nms_thresh;
    }
    if (conf_opt && conf_opt->count()) {
      config.conf_threshold = conf_thresh;
    }
    if (seed_opt && seed_opt->count()) {
      config.seed = seed;
    }
    if (train_opt && train_opt->count()) {
      config.train_count = train_count;
    }
    if (grid_opt && grid_opt->count()) {
      config.grid_size = grid_size;
    }
    if (anchors_opt && anchors_opt->count()) {
      config.anchors = parse_anchor_list(anchors);
    }
    config.validate();
    return config;
  }
};

int cmd_split(const std::string& ids_path, const RunConfig& config, const fs::path& out_dir,
              std::ostream& out) {
  std::vector<std::string> ids;
  {
    std::istringstream in(read_file(ids_path));
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
        line.pop_back();
      }
      std::size_t start = 0;
      while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) {
        ++start;
      }
      if (start < line.size()) {
        ids.push_back(line.substr(start));
      }
    }
  }

  const DatasetSplit split =
      split_dataset(ids, static_cast<std::size_t>(config.train_count), config.seed);
  const fs::path manifest_path = out_dir / "split.txt";
  write_file(manifest_path, serialize_split_manifest(split));
  out << "wrote " << manifest_path.string() << " (train=" << split.train_ids.size()
      << " val=" << split.val_ids.size() << " seed=" << split.seed << ")\n";
  return 0;
}

int cmd_decode(const std::string& head_path, const RunConfig& config, const fs::path& out_path,
               std::ostream& out) {
  HeadOutput head;
  {
    std::ifstream in(head_path, std::ios::binary);
    if (!in) {
      throw ValidationError("cannot read file '" + head_path + "'");
    }
    try {
      head = read_head_dump(in, config.anchors);
    } catch (const ParseError& e) {
      throw ValidationError(head_path + ": " + e.what());
    }
  }

  const std::vector<ScoredBox> decoded = decode_grid(head, config.conf_threshold);
  const std::vector<ScoredBox> kept = nms(decoded, config.nms_threshold);

  // The detection file format normalizes every field to [0,1]; boxes decoded
  // just past the image border are clamped into that domain on output.
  std::vector<DetectionEntry> entries;
  entries.reserve(kept.size());
  for (const auto& d : kept) {
    DetectionEntry e;
    e.category_id = d.category_id;
    e.confidence = d.confidence;
    e.box.cx = std::clamp(d.box.cx, 0.0, 1.0);
    e.box.cy = std::clamp(d.box.cy, 0.0, 1.0);
    e.box.w = std::clamp(d.box.w, 0.0, 1.0);
    e.box.h = std::clamp(d.box.h, 0.0, 1.0);
    entries.push_back(e);
  }
  write_file(out_path, serialize_detection_file(entries));
  out << "wrote " << out_path.string() << " (" << entries.size() << " detections, "
      << decoded.size() - kept.size() << " suppressed)\n";
  return 0;
}

struct LoadedDataset {
  std::vector<GroundTruthRecord> gts;
  std::vector<DetectionRecord> dets;
  std::size_t image_count = 0;
};

LoadedDataset load_dataset(const fs::path& labels_dir, const fs::path& dets_dir,
                           std::ostream& err) {
  if (!fs::is_directory(labels_dir)) {
    throw ValidationError("labels directory '" + labels_dir.string() + "' not found");
  }
  if (!fs::is_directory(dets_dir)) {
    throw ValidationError("detections directory '" + dets_dir.string() + "' not found");
  }

  std::vector<fs::path> label_files;
  for (const auto& entry : fs::directory_iterator(labels_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      label_files.push_back(entry.path());
    }
  }
  std::sort(label_files.begin(), label_files.end());
  if (label_files.empty()) {
    throw ValidationError("no .txt label files in '" + labels_dir.string() + "'");
  }

  LoadedDataset data;
  data.image_count = label_files.size();
  for (const auto& label_path : label_files) {
    const std::string image_id = label_path.stem().string();
    std::vector<ParseWarning> warnings;
    try {
      for (const auto& entry : parse_label_file(read_file(label_path), &warnings)) {
        data.gts.push_back({image_id, entry.category_id, entry.box});
      }
      for (const auto& w : warnings) {
        err << "warning: " << label_path.string() << ":" << w.line << ": " << w.message << "\n";
      }

      // A missing detection file means zero detections for that image.
      const fs::path det_path = dets_dir / label_path.filename();
      if (fs::exists(det_path)) {
        warnings.clear();
        for (const auto& entry : parse_detection_file(read_file(det_path), &warnings)) {
          data.dets.push_back({image_id, entry.category_id, entry.confidence, entry.box});
        }
        for (const auto& w : warnings) {
          err << "warning: " << det_path.string() << ":" << w.line << ": " << w.message << "\n";
        }
      }
    } catch (const ParseError& e) {
      throw ValidationError(label_path.stem().string() + ".txt: " + e.what());
    }
  }
  return data;
}

struct ThresholdCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

ThresholdCounts counts_at_threshold(const MatchOutcome& outcome, double threshold) {
  ThresholdCounts c;
  for (const auto& v : outcome.verdicts) {
    if (v.confidence >= threshold) {
      (v.is_tp ? c.tp : c.fp) += 1;
    }
  }
  c.fn = outcome.gt_count - c.tp;
  return c;
}

std::string metric_or_na(std::size_t numerator_a, std::size_t numerator_b,
                         double (*metric)(std::size_t, std::size_t)) {
  try {
    return fmt("%.6f", metric(numerator_a, numerator_b));
  } catch (const UndefinedMetricError&) {
    return "n/a";
  }
}

int cmd_evaluate(const std::string& labels_dir, const std::string& dets_dir,
                 const RunConfig& config, const fs::path& out_dir, std::ostream& out,
                 std::ostream& err) {
  const LoadedDataset data = load_dataset(labels_dir, dets_dir, err);

  const MatchOutcome overall = match_detections(data.dets, data.gts, config.iou_threshold);
  const PRCurve curve = pr_curve(overall);  // throws UndefinedMetricError when no ground truth
  const std::vector<F1Point> f1_points = f1_confidence_curve(overall);

  // Per-category AP over categories that appear in the ground truth.
  std::set<int> categories;
  for (const auto& gt : data.gts) {
    categories.insert(gt.category_id);
  }
  std::map<int, MatchOutcome> per_category;
  std::vector<double> ap_values;
  for (const int category : categories) {
    std::vector<DetectionRecord> dets_c;
    std::vector<GroundTruthRecord> gts_c;
    for (const auto& d : data.dets) {
      if (d.category_id == category) {
        dets_c.push_back(d);
      }
    }
    for (const auto& g : data.gts) {
      if (g.category_id == category) {
        gts_c.push_back(g);
      }
    }
    MatchOutcome outcome = match_detections(dets_c, gts_c, config.iou_threshold);
    ap_values.push_back(average_precision(pr_curve(outcome)));
    per_category.emplace(category, std::move(outcome));
  }
  const double map_value = map_score(ap_values);

  std::string report;
  report += "# nodeval evaluation report\n";
  report += "# iou_threshold=" + fmt("%.9g", config.iou_threshold) +
            " nms_threshold=" + fmt("%.9g", config.nms_threshold) +
            " conf_threshold=" + fmt("%.9g", config.conf_threshold) + "\n";
  report += "# image_size=" + std::to_string(config.image_size) +
            " grid_size=" + std::to_string(config.grid_size) +
            " anchors=" + format_anchor_list(config.anchors) + "\n";
  report += "# provenance: batch_size=" + std::to_string(config.batch_size) +
            " epochs=" + std::to_string(config.epochs) +
            " learning_rate=" + fmt("%.9g", config.learning_rate) + " optimizer=" +
            config.optimizer + "\n";
  report += "images: " + std::to_string(data.image_count) + "\n";
  report += "ground truths: " + std::to_string(data.gts.size()) + "\n";
  report += "detections: " + std::to_string(data.dets.size()) + "\n";

  std::size_t ap_index = 0;
  for (const int category : categories) {
    const auto& outcome = per_category.at(category);
    const ThresholdCounts c = counts_at_threshold(outcome, config.conf_threshold);
    report += "category " + std::to_string(category) + ": gt=" +
              std::to_string(outcome.gt_count) + " tp=" + std::to_string(c.tp) +
              " fp=" + std::to_string(c.fp) + " fn=" + std::to_string(c.fn) +
              " ap=" + fmt("%.6f", ap_values[ap_index++]) + "\n";
  }

  const ThresholdCounts c = counts_at_threshold(overall, config.conf_threshold);
  report += "overall at conf>=" + fmt("%.9g", config.conf_threshold) + ": tp=" +
            std::to_string(c.tp) + " fp=" + std::to_string(c.fp) + " fn=" +
            std::to_string(c.fn) + "\n";
  report += "precision: " + metric_or_na(c.tp, c.fp, precision) + "\n";
  report += "recall: " + metric_or_na(c.tp, c.fn, recall) + "\n";
  {
    std::string f1_text = "n/a";
    if (c.tp + c.fp > 0) {
      f1_text = fmt("%.6f", f1(precision(c.tp, c.fp), recall(c.tp, c.fn)));
    }
    report += "f1: " + f1_text + "\n";
  }

  // Curve summary points: the best-F1 threshold and the precision maximum,
  // reported alongside the fixed-threshold numbers.
  if (!f1_points.empty()) {
    const auto best = std::max_element(f1_points.begin(), f1_points.end(),
                                       [](const F1Point& a, const F1Point& b) {
                                         return a.f1 < b.f1;
                                       });
    report += "best f1: " + fmt("%.6f", best->f1) + " at threshold " +
              fmt("%.9g", best->threshold) + "\n";
  }
  if (!curve.points.empty()) {
    const auto best = std::max_element(curve.points.begin(), curve.points.end(),
                                       [](const PRPoint& a, const PRPoint& b) {
                                         return a.precision < b.precision;
                                       });
    report += "max precision: " + fmt("%.6f", best->precision) + " at threshold " +
              fmt("%.9g", best->threshold) + "\n";
  }
  report += "mAP: " + fmt("%.6f", map_value) + "\n";

  fs::create_directories(out_dir);
  write_file(out_dir / "report.txt", report);
  write_file(out_dir / "pr_curve.csv", pr_curve_csv(curve, config.iou_threshold));
  write_file(out_dir / "f1_curve.csv", f1_curve_csv(f1_points, config.iou_threshold));

  ChartSeries pr_series;
  for (const auto& p : curve.points) {
    pr_series.points.emplace_back(p.recall, p.precision);
  }
  write_file(out_dir / "pr_curve.svg",
             svg_line_chart("Precision-Recall Curve", "recall", "precision", pr_series));

  ChartSeries f1_series;
  for (const auto& p : f1_points) {
    f1_series.points.emplace_back(p.threshold, p.f1);
  }
  write_file(out_dir / "f1_curve.svg",
             svg_line_chart("F1-Confidence Curve", "confidence threshold", "F1", f1_series));

  out << report;
  return 0;
}

int cmd_check_grads(int trials, std::uint64_t seed, std::ostream& out) {
  const GradientCheckReport report = run_gradient_check(trials, seed);
  out << "gradient check: trials=" << report.trials << " seed=" << report.seed
      << " epsilon=" << fmt("%.9g", GradientCheckReport::kEpsilon)
      << " tolerance=" << fmt("%.9g", GradientCheckReport::kTolerance) << "\n";
  out << "box_loss max relative error: " << fmt("%.9g", report.max_box_error) << "\n";
  out << "objectness_loss max relative error: " << fmt("%.9g", report.max_objectness_error)
      << "\n";
  out << "result: " << (report.passed() ? "PASS" : "FAIL") << "\n";
  return report.passed() ? 0 : 4;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"lung-nodule detection evaluation toolkit"};
  app.require_subcommand(1);

  CommonFlags split_flags;
  CommonFlags decode_flags;
  CommonFlags eval_flags;

  std::string ids_path;
  CLI::App* split_cmd = app.add_subcommand("split", "deterministic train/val split of an id list");
  split_cmd->add_option("ids_file", ids_path, "file with one image id per line")->required();
  split_flags.attach(split_cmd);

  std::string head_path;
  std::string decode_out;
  CLI::App* decode_cmd =
      app.add_subcommand("decode", "decode a raw head dump into a detection file (with NMS)");
  decode_cmd->add_option("head_file", head_path, "head dump (`S A K` header plus logit lines)")
      ->required();
  decode_cmd->add_option("--out", decode_out, "detection file path (default: <out-dir>/detections.txt)");
  decode_flags.attach(decode_cmd);

  std::string labels_dir;
  std::string dets_dir;
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "match detections to labels and report the metric suite");
  eval_cmd->add_option("labels_dir", labels_dir, "directory of label .txt files")->required();
  eval_cmd->add_option("detections_dir", dets_dir, "directory of detection .txt files")->required();
  eval_flags.attach(eval_cmd);

  int trials = 100;
  std::uint64_t grad_seed = 0;
  CLI::App* grads_cmd =
      app.add_subcommand("check-grads", "verify analytic loss gradients against finite differences");
  grads_cmd->add_option("--trials", trials, "number of random instances (default 100)");
  grads_cmd->add_option("--seed", grad_seed, "PRNG seed");

  try {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("nodeval");
    for (const auto& a : args) {
      argv.push_back(a.c_str());
    }
    app.parse(static_cast<int>(argv.size()), argv.data());

    if (split_cmd->parsed()) {
      return cmd_split(ids_path, split_flags.resolve(), split_flags.out_dir, out);
    }
    if (decode_cmd->parsed()) {
      const RunConfig config = decode_flags.resolve();
      const fs::path out_path = decode_out.empty()
                                    ? fs::path(decode_flags.out_dir) / "detections.txt"
                                    : fs::path(decode_out);
      return cmd_decode(head_path, config, out_path, out);
    }
    if (eval_cmd->parsed()) {
      return cmd_evaluate(labels_dir, dets_dir, eval_flags.resolve(), eval_flags.out_dir, out,
                          err);
    }
    if (grads_cmd->parsed()) {
      if (trials <= 0) {
        throw ArgumentError("--trials must be positive");
      }
      return cmd_check_grads(trials, grad_seed, out);
    }
    return 0;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UndefinedMetricError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace nodeval
