#include "nodeval/dataio.hpp"

#include "nodeval/errors.hpp"

#include <charconv>
#include <cstdio>
#include <unordered_set>
#include <utility>

namespace nodeval {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
      ++i;
    }
    if (i > start) {
      fields.push_back(line.substr(start, i - start));
    }
  }
  return fields;
}

int parse_category(std::string_view token, std::size_t line_no) {
  int value = 0;
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(line_no, "bad category id '" + std::string(token) + "'");
  }
  if (value < 0) {
    throw ParseError(line_no, "negative category id");
  }
  return value;
}

double parse_real(std::string_view token, std::size_t line_no, const char* name) {
  double value = 0.0;
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(line_no, std::string("bad ") + name + " '" + std::string(token) + "'");
  }
  return value;
}

double parse_unit_interval(std::string_view token, std::size_t line_no, const char* name) {
  const double value = parse_real(token, line_no, name);
  if (!(value >= 0.0) || value > 1.0) {
    throw RangeError(line_no, std::string(name) + " outside [0,1]");
  }
  return value;
}

BoxCenter parse_box(std::span<const std::string_view> tokens, std::size_t line_no,
                    std::vector<ParseWarning>* warnings) {
  BoxCenter box;
  box.cx = parse_unit_interval(tokens[0], line_no, "cx");
  box.cy = parse_unit_interval(tokens[1], line_no, "cy");
  box.w = parse_unit_interval(tokens[2], line_no, "w");
  box.h = parse_unit_interval(tokens[3], line_no, "h");
  if (warnings && (box.w == 0.0 || box.h == 0.0)) {
    warnings->push_back({line_no, "degenerate box (w or h is 0)"});
  }
  return box;
}

// Walks `text` line by line (LF or CRLF), calling fn(line_no, fields) for
// every non-empty line.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                          : nl - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    ++line_no;
    const auto fields = split_fields(line);
    if (!fields.empty()) {
      fn(line_no, fields);
    }
    if (nl == std::string_view::npos) {
      break;
    }
    pos = nl + 1;
  }
}

void append_real(std::string& out, double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  out += buf;
}

} // namespace

std::vector<LabelEntry> parse_label_file(std::string_view text,
                                         std::vector<ParseWarning>* warnings) {
  std::vector<LabelEntry> entries;
  for_each_line(text, [&](std::size_t line_no, std::span<const std::string_view> fields) {
    if (fields.size() != 5) {
      throw ParseError(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    }
    LabelEntry entry;
    entry.category_id = parse_category(fields[0], line_no);
    entry.box = parse_box(fields.subspan(1), line_no, warnings);
    entries.push_back(entry);
  });
  return entries;
}

std::vector<DetectionEntry> parse_detection_file(std::string_view text,
                                                 std::vector<ParseWarning>* warnings) {
  std::vector<DetectionEntry> entries;
  for_each_line(text, [&](std::size_t line_no, std::span<const std::string_view> fields) {
    if (fields.size() != 6) {
      throw ParseError(line_no, "expected 6 fields, got " + std::to_string(fields.size()));
    }
    DetectionEntry entry;
    entry.category_id = parse_category(fields[0], line_no);
    entry.confidence = parse_unit_interval(fields[1], line_no, "confidence");
    entry.box = parse_box(fields.subspan(2), line_no, warnings);
    entries.push_back(entry);
  });
  return entries;
}

std::string serialize_label_file(std::span<const LabelEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += std::to_string(e.category_id);
    for (double v : {e.box.cx, e.box.cy, e.box.w, e.box.h}) {
      out += ' ';
      append_real(out, v);
    }
    out += '\n';
  }
  return out;
}

std::string serialize_detection_file(std::span<const DetectionEntry> entries) {
  std::string out;
  for (const auto& e : entries) {
    out += std::to_string(e.category_id);
    for (double v : {e.confidence, e.box.cx, e.box.cy, e.box.w, e.box.h}) {
      out += ' ';
      append_real(out, v);
    }
    out += '\n';
  }
  return out;
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DatasetSplit split_dataset(std::span<const std::string> ids, std::size_t train_count,
                           std::uint64_t seed) {
  if (train_count > ids.size()) {
    throw ArgumentError("split_dataset: train_count " + std::to_string(train_count) +
                        " exceeds id count " + std::to_string(ids.size()));
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw ValidationError("split_dataset: duplicate image id '" + id + "'");
    }
  }

  std::vector<std::string> shuffled(ids.begin(), ids.end());
  std::uint64_t state = seed;
  for (std::size_t i = shuffled.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(splitmix64_next(state) % i);
    std::swap(shuffled[i - 1], shuffled[j]);
  }

  DatasetSplit split;
  split.seed = seed;
  split.train_ids.assign(shuffled.begin(), shuffled.begin() + train_count);
  split.val_ids.assign(shuffled.begin() + train_count, shuffled.end());
  return split;
}

std::string serialize_split_manifest(const DatasetSplit& split) {
  std::string out = "# split seed=" + std::to_string(split.seed) +
                    " total=" + std::to_string(split.train_ids.size() + split.val_ids.size()) +
                    " train=" + std::to_string(split.train_ids.size()) +
                    " val=" + std::to_string(split.val_ids.size()) + "\n";
  for (const auto& id : split.train_ids) {
    out += "train " + id + "\n";
  }
  for (const auto& id : split.val_ids) {
    out += "val " + id + "\n";
  }
  return out;
}

} // namespace nodeval
