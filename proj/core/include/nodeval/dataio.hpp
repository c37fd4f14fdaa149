#pragma once

#include "nodeval/geometry.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nodeval {

/// One annotated truth box tied to an image.
struct GroundTruthRecord {
  std::string image_id;
  int category_id = 0;
  BoxCenter box;
};

/// One scored predicted box tied to an image.
struct DetectionRecord {
  std::string image_id;
  int category_id = 0;
  double confidence = 0.0;
  BoxCenter box;
};

/// Per-line payload of a label file (one image per file, so no image id).
struct LabelEntry {
  int category_id = 0;
  BoxCenter box;

  bool operator==(const LabelEntry&) const = default;
};

/// Per-line payload of a detection file.
struct DetectionEntry {
  int category_id = 0;
  double confidence = 0.0;
  BoxCenter box;

  bool operator==(const DetectionEntry&) const = default;
};

/// Non-fatal oddity found while parsing (e.g. a zero-width annotation).
struct ParseWarning {
  std::size_t line = 0;
  std::string message;
};

/// Parses `category cx cy w h` lines (normalized decimals, whitespace
/// separated, empty lines skipped). Throws ParseError on malformed lines and
/// RangeError when a coordinate leaves [0,1]; degenerate w or h == 0 is
/// accepted and reported through `warnings` when given.
std::vector<LabelEntry> parse_label_file(std::string_view text,
                                         std::vector<ParseWarning>* warnings = nullptr);

/// Parses `category confidence cx cy w h` lines; same rules as
/// parse_label_file plus a [0,1] range check on the confidence.
std::vector<DetectionEntry> parse_detection_file(std::string_view text,
                                                 std::vector<ParseWarning>* warnings = nullptr);

std::string serialize_label_file(std::span<const LabelEntry> entries);
std::string serialize_detection_file(std::span<const DetectionEntry> entries);

/// Deterministic train/validation partition of an id list.
struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::uint64_t seed = 0;
};

/// Shuffles `ids` with a Fisher-Yates pass driven by the splitmix64 generator
/// seeded with `seed`, then takes the first train_count ids as the training
/// split. Same (ids, train_count, seed) always yields identical output.
/// Throws ValidationError on duplicate ids and ArgumentError when train_count
/// exceeds the id count.
DatasetSplit split_dataset(std::span<const std::string> ids, std::size_t train_count,
                           std::uint64_t seed);

/// Manifest text: a header line recording seed and counts, then one
/// `train <id>` or `val <id>` line per image.
std::string serialize_split_manifest(const DatasetSplit& split);

/// splitmix64 step; the documented PRNG behind split_dataset. Public so the
/// split is reproducible from the docs alone.
std::uint64_t splitmix64_next(std::uint64_t& state);

} // namespace nodeval
