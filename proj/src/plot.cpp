#include "poemlab/plot.hpp"

#include <algorithm>
#include <cstdio>

#include "poemlab/errors.hpp"

namespace poemlab {

namespace {

constexpr double kSize = 600.0;
constexpr double kMargin = 50.0;
const char* const kClassColors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"};
const char* const kCurveColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double w, double h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         num(w) + "\" height=\"" + num(h) + "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
}

// Row-major mask, row 0 at the top (largest y).
std::vector<char> region_mask(const EnergyModel& model, double threshold, const PlotExtent& e,
                              std::size_t grid) {
  std::vector<char> mask(grid * grid);
  const double dx = (e.x_hi - e.x_lo) / static_cast<double>(grid);
  const double dy = (e.y_hi - e.y_lo) / static_cast<double>(grid);
  double p[2];
  for (std::size_t r = 0; r < grid; ++r) {
    p[1] = e.y_hi - (static_cast<double>(r) + 0.5) * dy;
    for (std::size_t c = 0; c < grid; ++c) {
      p[0] = e.x_lo + (static_cast<double>(c) + 0.5) * dx;
      mask[r * grid + c] = ood_score(model, p) >= threshold;
    }
  }
  return mask;
}

}  // namespace

double region_fraction(const EnergyModel& model, double threshold, const PlotExtent& extent,
                       std::size_t grid) {
  if (model.input_dim() != 2) throw DimensionError("region plots need a 2-D input model");
  const auto mask = region_mask(model, threshold, extent, grid);
  return static_cast<double>(std::count(mask.begin(), mask.end(), 1)) / static_cast<double>(mask.size());
}

std::string boundary_svg(const BoundaryPlot& plot) {
  if (!plot.model) throw ConfigError("model", "boundary plot needs a model");
  if (plot.model->input_dim() != 2)
    throw DimensionError("boundary plot needs d = 2, model has d = " + std::to_string(plot.model->input_dim()));
  if (plot.id_points && plot.id_points->rows() && plot.id_points->cols() != 2)
    throw DimensionError("boundary plot needs 2-D ID points");
  if (plot.mined_points && plot.mined_points->rows() && plot.mined_points->cols() != 2)
    throw DimensionError("boundary plot needs 2-D mined points");
  if (plot.grid < 200) throw ConfigError("grid", "must be at least 200");

  const PlotExtent& e = plot.extent;
  const std::size_t g = plot.grid;
  const double cell = kSize / static_cast<double>(g);
  auto sx = [&](double x) { return kMargin + (x - e.x_lo) / (e.x_hi - e.x_lo) * kSize; };
  auto sy = [&](double y) { return kMargin + (e.y_hi - y) / (e.y_hi - e.y_lo) * kSize; };

  std::string svg = header(kSize + 2 * kMargin, kSize + 2 * kMargin);
  svg += "<text x=\"" + num(kMargin) + "\" y=\"30\" font-family=\"sans-serif\" font-size=\"16\">" +
         escape_xml(plot.title) + "</text>\n";
  svg += "<g id=\"region\" fill=\"#fde0b6\" stroke=\"none\">\n";
  const auto mask = region_mask(*plot.model, plot.threshold, e, g);
  for (std::size_t r = 0; r < g; ++r) {
    std::size_t c = 0;
    while (c < g) {
      if (!mask[r * g + c]) {
        ++c;
        continue;
      }
      const std::size_t start = c;
      while (c < g && mask[r * g + c]) ++c;
      svg += "<rect x=\"" + num(kMargin + static_cast<double>(start) * cell) + "\" y=\"" +
             num(kMargin + static_cast<double>(r) * cell) + "\" width=\"" +
             num(static_cast<double>(c - start) * cell) + "\" height=\"" + num(cell) + "\"/>\n";
    }
  }
  svg += "</g>\n";
  svg += "<rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(kSize) +
         "\" height=\"" + num(kSize) + "\" fill=\"none\" stroke=\"black\"/>\n";

  if (plot.id_points) {
    svg += "<g id=\"id-points\" fill-opacity=\"0.6\">\n";
    for (std::size_t i = 0; i < plot.id_points->rows(); ++i) {
      const auto p = plot.id_points->row(i);
      const int label = plot.id_labels ? (*plot.id_labels)[i] : 0;
      svg += "<circle cx=\"" + num(sx(p[0])) + "\" cy=\"" + num(sy(p[1])) + "\" r=\"2\" fill=\"" +
             kClassColors[static_cast<std::size_t>(std::max(label, 0)) % 5] + "\"/>\n";
    }
    svg += "</g>\n";
  }
  if (plot.mined_points) {
    svg += "<g id=\"mined\" fill=\"#ff7f0e\">\n";
    for (std::size_t i = 0; i < plot.mined_points->rows(); ++i) {
      const auto p = plot.mined_points->row(i);
      svg += "<circle cx=\"" + num(sx(p[0])) + "\" cy=\"" + num(sy(p[1])) + "\" r=\"2.5\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string curves_svg(const std::vector<Curve>& curves, const std::string& title,
                       const std::string& y_label) {
  const double w = 640.0, h = 420.0, left = 60.0, right = 140.0, top = 40.0, bottom = 50.0;
  std::size_t n = 1;
  double y_max = 0.0;
  for (const auto& [label, ys] : curves) {
    n = std::max(n, ys.size());
    for (double y : ys) y_max = std::max(y_max, y);
  }
  if (y_max <= 0.0) y_max = 1.0;
  const double pw = w - left - right, ph = h - top - bottom;
  auto sx = [&](std::size_t i) {
    return n == 1 ? left + pw / 2 : left + static_cast<double>(i) / static_cast<double>(n - 1) * pw;
  };
  auto sy = [&](double y) { return top + (1.0 - y / y_max) * ph; };

  std::string svg = header(w, h);
  svg += "<text x=\"" + num(left) + "\" y=\"25\" font-family=\"sans-serif\" font-size=\"15\">" +
         escape_xml(title) + "</text>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) + "\" y2=\"" +
         num(top + ph) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) + "\" y2=\"" +
         num(top + ph) + "\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(h - 12) +
         "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">epoch (1.." +
         std::to_string(n) + ")</text>\n";
  svg += "<text x=\"12\" y=\"" + num(top + ph / 2) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape_xml(y_label) + "</text>\n";
  svg += "<text x=\"" + num(left - 6) + "\" y=\"" + num(top + 4) +
         "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" + num(y_max) + "</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& [label, ys] = curves[k];
    const char* color = kCurveColors[k % 5];
    std::string pts;
    for (std::size_t i = 0; i < ys.size(); ++i) pts += (i ? " " : "") + num(sx(i)) + "," + num(sy(ys[i]));
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" +
           pts + "\"/>\n";
    const double ly = top + 15.0 + 18.0 * static_cast<double>(k);
    svg += "<text x=\"" + num(left + pw + 12) + "\" y=\"" + num(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" + color + "\">" + escape_xml(label) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace poemlab
