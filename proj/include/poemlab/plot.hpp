#pragma once

// Static SVG emission: decision-region snapshots for 2-D runs and
// FPR95-vs-epoch curves.

#include <string>
#include <utility>
#include <vector>

#include "poemlab/linalg.hpp"
#include "poemlab/model.hpp"

namespace poemlab {

struct PlotExtent {
  double x_lo = -8.0, x_hi = 8.0;
  double y_lo = -8.0, y_hi = 8.0;
};

struct BoundaryPlot {
  const EnergyModel* model = nullptr;
  const Matrix* id_points = nullptr;
  const std::vector<int>* id_labels = nullptr;
  const Matrix* mined_points = nullptr;
  double threshold = 0.0;  // region drawn where -E(x) >= threshold
  PlotExtent extent;
  std::size_t grid = 200;  // cells per axis, at least 200
  std::string title;
};

// Region rasterized on grid x grid cells, emitted as run-length rects per
// row. Throws DimensionError unless the model and points are 2-D.
std::string boundary_svg(const BoundaryPlot& plot);

// Fraction of grid cells inside the region; same raster as boundary_svg.
double region_fraction(const EnergyModel& model, double threshold, const PlotExtent& extent,
                       std::size_t grid);

using Curve = std::pair<std::string, std::vector<double>>;  // label, value per epoch

// One polyline per curve, x = epoch (1-based).
std::string curves_svg(const std::vector<Curve>& curves, const std::string& title,
                       const std::string& y_label = "FPR95");

}  // namespace poemlab
