#pragma once

#include "nodeval/decode.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nodeval {

/// Run parameters shared by the CLI commands. The training fields
/// (batch_size, epochs, learning_rate, optimizer) are provenance only: they
/// are echoed in report headers and drive nothing.
struct RunConfig {
  double iou_threshold = 0.2;
  double nms_threshold = 0.45;
  double conf_threshold = 0.001;
  int image_size = 416;
  int grid_size = 13;
  std::vector<Anchor> anchors{{0.06, 0.08}, {0.15, 0.20}, {0.35, 0.45}};
  std::uint64_t seed = 0;
  int train_count = 239;

  int batch_size = 16;
  int epochs = 145;
  double learning_rate = 0.01;
  std::string optimizer = "SGD";

  /// Throws ArgumentError when a field leaves its documented domain.
  void validate() const;
};

/// Parses `key = value` lines ('#' comments and blank lines allowed) into a
/// RunConfig starting from the defaults. Unknown keys are a ParseError.
RunConfig parse_run_config(std::string_view text);

/// Anchor list syntax used by config files and --anchors: comma-separated
/// `w:h` pairs, e.g. "0.06:0.08,0.15:0.20".
std::vector<Anchor> parse_anchor_list(std::string_view text);
std::string format_anchor_list(std::span<const Anchor> anchors);

std::string serialize_run_config(const RunConfig& config);

} // namespace nodeval
