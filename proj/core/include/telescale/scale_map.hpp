#pragma once

#include <string>
#include <vector>

#include "telescale/plane.hpp"
#include "telescale/scaling.hpp"

namespace telescale {

/// One grid point of the positional-scaling map.
struct ScaleMapCell {
    double x = 0.0;
    double y = 0.0;
    /// Distance to the nearest peg after projection, meters.
    double distance = 0.0;
    double scale_s = 0.0;
    /// End-to-end master-to-slave gain, scale_m * scale_s.
    double total = 0.0;
};

struct ScaleMapGrid {
    double x_min = 0.0;
    double x_max = 0.1;
    double y_min = 0.0;
    double y_max = 0.1;
    double step = 0.001;
    /// Height of the sampled tool-tip targets.
    double z = 0.0;
};

/// scale_s over an x-y grid, row-major in y then x. Throws ConfigError on an
/// empty grid or a non-positive step.
std::vector<ScaleMapCell> positional_scale_map(const PegLayout& layout, const PositionalScaling& scaling,
                                               const ScaleMapGrid& grid = {},
                                               ProjectionMode projection = ProjectionMode::Verbatim,
                                               DistanceMode distance = DistanceMode::ProjectedPegs);

/// Columns x_mm, y_mm, distance_mm, scale_s, total.
std::string scale_map_csv(const std::vector<ScaleMapCell>& cells);

}  // namespace telescale
