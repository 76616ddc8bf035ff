#include "telescale/scale_map.hpp"

#include <cmath>
#include <sstream>

#include "telescale/error.hpp"

namespace telescale {

std::vector<ScaleMapCell> positional_scale_map(const PegLayout& layout, const PositionalScaling& scaling,
                                               const ScaleMapGrid& grid, ProjectionMode projection,
                                               DistanceMode distance) {
    validate(ScalingStrategy{scaling});
    if (!(grid.step > 0.0) || !(grid.x_max >= grid.x_min) || !(grid.y_max >= grid.y_min)) {
        throw ConfigError("scale map needs a positive step and non-empty ranges");
    }
    const ProximityModel model(layout, projection, distance);
    // Integer counts keep the grid points exact multiples of the step.
    const auto nx = static_cast<long>(std::floor((grid.x_max - grid.x_min) / grid.step + 1e-9)) + 1;
    const auto ny = static_cast<long>(std::floor((grid.y_max - grid.y_min) / grid.step + 1e-9)) + 1;
    std::vector<ScaleMapCell> cells;
    cells.reserve(static_cast<std::size_t>(nx * ny));
    for (long j = 0; j < ny; ++j) {
        for (long i = 0; i < nx; ++i) {
            ScaleMapCell c;
            c.x = grid.x_min + static_cast<double>(i) * grid.step;
            c.y = grid.y_min + static_cast<double>(j) * grid.step;
            c.distance = model.distance(Vec3(c.x, c.y, grid.z));
            c.scale_s = positional_scale(c.distance, scaling);
            c.total = scaling.scale_m * c.scale_s;
            cells.push_back(c);
        }
    }
    return cells;
}

std::string scale_map_csv(const std::vector<ScaleMapCell>& cells) {
    std::ostringstream out;
    out.precision(10);
    out << "x_mm,y_mm,distance_mm,scale_s,total\n";
    for (const auto& c : cells) {
        out << c.x * 1e3 << ',' << c.y * 1e3 << ',' << c.distance * 1e3 << ',' << c.scale_s << ',' << c.total
            << '\n';
    }
    return out.str();
}

}  // namespace telescale
