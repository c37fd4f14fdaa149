#include "nodeval/config.hpp"

#include "nodeval/errors.hpp"

#include <charconv>
#include <cstdio>

namespace nodeval {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double to_real(std::string_view token, std::size_t line_no, const char* key) {
  double value = 0.0;
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(line_no, std::string("bad value for ") + key);
  }
  return value;
}

template <typename Int>
Int to_int(std::string_view token, std::size_t line_no, const char* key) {
  Int value = 0;
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(line_no, std::string("bad value for ") + key);
  }
  return value;
}

} // namespace

void RunConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0) || v > 1.0) {
      throw ArgumentError(std::string(name) + " must lie in [0,1]");
    }
  };
  unit(iou_threshold, "iou_threshold");
  unit(nms_threshold, "nms_threshold");
  unit(conf_threshold, "conf_threshold");
  if (image_size <= 0) {
    throw ArgumentError("image_size must be positive");
  }
  if (grid_size <= 0) {
    throw ArgumentError("grid_size must be positive");
  }
  if (train_count <= 0) {
    throw ArgumentError("train_count must be positive");
  }
  if (anchors.empty()) {
    throw ArgumentError("anchors must not be empty");
  }
  for (const auto& a : anchors) {
    if (!(a.w > 0.0) || !(a.h > 0.0)) {
      throw ArgumentError("anchor sides must be positive");
    }
  }
}

std::vector<Anchor> parse_anchor_list(std::string_view text) {
  std::vector<Anchor> anchors;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view pair =
        trim(text.substr(pos, comma == std::string_view::npos ? text.size() - pos : comma - pos));
    if (!pair.empty()) {
      const std::size_t colon = pair.find(':');
      if (colon == std::string_view::npos) {
        throw ArgumentError("anchor pair must be w:h, got '" + std::string(pair) + "'");
      }
      Anchor a;
      a.w = to_real(trim(pair.substr(0, colon)), 1, "anchor w");
      a.h = to_real(trim(pair.substr(colon + 1)), 1, "anchor h");
      if (!(a.w > 0.0) || !(a.h > 0.0)) {
        throw ArgumentError("anchor sides must be positive");
      }
      anchors.push_back(a);
    }
    if (comma == std::string_view::npos) {
      break;
    }
    pos = comma + 1;
  }
  if (anchors.empty()) {
    throw ArgumentError("anchor list is empty");
  }
  return anchors;
}

std::string format_anchor_list(std::span<const Anchor> anchors) {
  std::string out;
  char buf[64];
  for (const auto& a : anchors) {
    std::snprintf(buf, sizeof(buf), "%s%.9g:%.9g", out.empty() ? "" : ",", a.w, a.h);
    out += buf;
  }
  return out;
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    ++line_no;

    line = trim(line);
    if (!line.empty() && line.front() != '#') {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(line_no, "expected `key = value`");
      }
      const std::string_view key = trim(line.substr(0, eq));
      const std::string_view value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw ParseError(line_no, "expected `key = value`");
      }

      if (key == "iou_threshold") {
        config.iou_threshold = to_real(value, line_no, "iou_threshold");
      } else if (key == "nms_threshold") {
        config.nms_threshold = to_real(value, line_no, "nms_threshold");
      } else if (key == "conf_threshold") {
        config.conf_threshold = to_real(value, line_no, "conf_threshold");
      } else if (key == "image_size") {
        config.image_size = to_int<int>(value, line_no, "image_size");
      } else if (key == "grid_size") {
        config.grid_size = to_int<int>(value, line_no, "grid_size");
      } else if (key == "anchors") {
        config.anchors = parse_anchor_list(value);
      } else if (key == "seed") {
        config.seed = to_int<std::uint64_t>(value, line_no, "seed");
      } else if (key == "train_count") {
        config.train_count = to_int<int>(value, line_no, "train_count");
      } else if (key == "batch_size") {
        config.batch_size = to_int<int>(value, line_no, "batch_size");
      } else if (key == "epochs") {
        config.epochs = to_int<int>(value, line_no, "epochs");
      } else if (key == "learning_rate") {
        config.learning_rate = to_real(value, line_no, "learning_rate");
      } else if (key == "optimizer") {
        config.optimizer = std::string(value);
      } else {
        throw ParseError(line_no, "unknown config key '" + std::string(key) + "'");
      }
    }

    if (nl == std::string_view::npos) {
      break;
    }
    pos = nl + 1;
  }
  config.validate();
  return config;
}

std::string serialize_run_config(const RunConfig& config) {
  char buf[128];
  std::string out;
  auto real_line = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s = %.9g\n", key, v);
    out += buf;
  };
  auto int_line = [&](const char* key, long long v) {
    std::snprintf(buf, sizeof(buf), "%s = %lld\n", key, v);
    out += buf;
  };
  real_line("iou_threshold", config.iou_threshold);
  real_line("nms_threshold", config.nms_threshold);
  real_line("conf_threshold", config.conf_threshold);
  int_line("image_size", config.image_size);
  int_line("grid_size", config.grid_size);
  out += "anchors = " + format_anchor_list(config.anchors) + "\n";
  int_line("seed", static_cast<long long>(config.seed));
  int_line("train_count", config.train_count);
  int_line("batch_size", config.batch_size);
  int_line("epochs", config.epochs);
  real_line("learning_rate", config.learning_rate);
  out += "optimizer = " + config.optimizer + "\n";
  return out;
}

} // namespace nodeval
