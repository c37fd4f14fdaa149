#include "nodeval/report.hpp"

#include "nodeval/errors.hpp"

#include <charconv>
#include <cstdio>

namespace nodeval {

namespace {

constexpr const char* kInterpolationMode = "all-points";

void append_csv_header(std::string& out, double iou_threshold) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "# iou_threshold = %.9g\n", iou_threshold);
  out += buf;
  out += "# interpolation = ";
  out += kInterpolationMode;
  out += '\n';
}

double field_to_real(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), last, value);
  if (ec != std::errc{} || ptr != last) {
    throw ParseError(line_no, "bad numeric CSV field '" + std::string(token) + "'");
  }
  return value;
}

struct CsvBody {
  std::size_t gt_count = 0;
  std::vector<std::vector<double>> rows;
};

CsvBody parse_csv(std::string_view text, std::size_t columns) {
  CsvBody body;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    ++line_no;

    if (!line.empty()) {
      if (line.front() == '#') {
        const std::string_view key = "# gt_count = ";
        if (line.substr(0, key.size()) == key) {
          body.gt_count = static_cast<std::size_t>(field_to_real(line.substr(key.size()), line_no));
        }
      } else if (!header_seen) {
        header_seen = true;  // column-name row
      } else {
        std::vector<double> row;
        std::size_t field_pos = 0;
        while (field_pos <= line.size()) {
          const std::size_t comma = line.find(',', field_pos);
          const std::string_view token = line.substr(
              field_pos, comma == std::string_view::npos ? line.size() - field_pos
                                                         : comma - field_pos);
          row.push_back(field_to_real(token, line_no));
          if (comma == std::string_view::npos) {
            break;
          }
          field_pos = comma + 1;
        }
        if (row.size() != columns) {
          throw ParseError(line_no, "expected " + std::to_string(columns) + " CSV columns");
        }
        body.rows.push_back(std::move(row));
      }
    }

    if (nl == std::string_view::npos) {
      break;
    }
    pos = nl + 1;
  }
  return body;
}

void append_row(std::string& out, std::initializer_list<double> values) {
  char buf[32];
  bool first = true;
  for (const double v : values) {
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    if (!first) {
      out += ',';
    }
    out += buf;
    first = false;
  }
  out += '\n';
}

} // namespace

std::string pr_curve_csv(const PRCurve& curve, double iou_threshold) {
  std::string out;
  append_csv_header(out, iou_threshold);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# gt_count = %zu\n", curve.gt_count);
  out += buf;
  out += "threshold,recall,precision\n";
  for (const auto& p : curve.points) {
    append_row(out, {p.threshold, p.recall, p.precision});
  }
  return out;
}

std::string f1_curve_csv(std::span<const F1Point> points, double iou_threshold) {
  std::string out;
  append_csv_header(out, iou_threshold);
  out += "threshold,f1\n";
  for (const auto& p : points) {
    append_row(out, {p.threshold, p.f1});
  }
  return out;
}

PRCurve parse_pr_curve_csv(std::string_view text) {
  const CsvBody body = parse_csv(text, 3);
  PRCurve curve;
  curve.gt_count = body.gt_count;
  for (const auto& row : body.rows) {
    curve.points.push_back({row[0], row[1], row[2]});
  }
  return curve;
}

std::vector<F1Point> parse_f1_curve_csv(std::string_view text) {
  const CsvBody body = parse_csv(text, 2);
  std::vector<F1Point> points;
  for (const auto& row : body.rows) {
    points.push_back({row[0], row[1]});
  }
  return points;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const ChartSeries& series) {
  constexpr int kWidth = 640;
  constexpr int kHeight = 480;
  constexpr double kLeft = 64.0;
  constexpr double kRight = 616.0;
  constexpr double kTop = 48.0;
  constexpr double kBottom = 432.0;

  const auto px = [](double x) { return kLeft + x * (kRight - kLeft); };
  const auto py = [](double y) { return kBottom - y * (kBottom - kTop); };

  char buf[256];
  std::string svg;
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" "
                "width=\"%d\" height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                kWidth, kHeight, kWidth, kHeight);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Gridlines and tick labels at 0.2 steps.
  for (int i = 0; i <= 5; ++i) {
    const double t = i / 5.0;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                  px(t), py(0.0), px(t), py(1.0));
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                  "stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
                  px(0.0), py(t), px(1.0), py(t));
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
                  "fill=\"#444444\">%.1f</text>\n",
                  px(t), kBottom + 18.0, t);
    svg += buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\" "
                  "fill=\"#444444\">%.1f</text>\n",
                  kLeft - 8.0, py(t) + 4.0, t);
    svg += buf;
  }

  // Axes.
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\" stroke-width=\"1.5\"/>\n",
                px(0.0), py(0.0), px(1.0), py(0.0));
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                "stroke=\"black\" stroke-width=\"1.5\"/>\n",
                px(0.0), py(0.0), px(0.0), py(1.0));
  svg += buf;

  // Data polyline.
  if (!series.points.empty()) {
    svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series.points.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "",
                    px(series.points[i].first), py(series.points[i].second));
      svg += buf;
    }
    svg += "\"/>\n";
  }

  // Title and axis labels.
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"16\" text-anchor=\"middle\" "
                "fill=\"black\">%s</text>\n",
                (kLeft + kRight) / 2.0, 24.0, title.c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" "
                "fill=\"black\">%s</text>\n",
                (kLeft + kRight) / 2.0, kBottom + 40.0, x_label.c_str());
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" "
                "fill=\"black\" transform=\"rotate(-90 %.1f %.1f)\">%s</text>\n",
                20.0, (kTop + kBottom) / 2.0, 20.0, (kTop + kBottom) / 2.0, y_label.c_str());
  svg += buf;

  svg += "</svg>\n";
  return svg;
}

} // namespace nodeval
