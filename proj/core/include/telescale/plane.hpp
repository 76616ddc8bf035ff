#pragma once

#include <array>

#include "telescale/pose.hpp"

namespace telescale {

/// Top centers of the four pegs, meters.
struct PegLayout {
    std::array<Vec3, 4> centers;

    /// Throws ConfigError on non-finite or coincident centers.
    void validate() const;
};

/// Least-squares plane a*x + b*y + z = c through the peg tops with unit
/// normal e = (a, b, 1) / |(a, b, 1)|.
struct PegPlane {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    Vec3 normal = Vec3::UnitZ();
};

/// Verbatim subtracts proj_e of the raw target; ShiftedOrigin projects the
/// target after removing the (0, 0, c) offset. They differ by proj_e((0,0,c)).
enum class ProjectionMode { Verbatim, ShiftedOrigin };

/// ProjectedPegs maps peg centers through the same transform as the tool tip;
/// RawPegs compares against the untransformed centers.
enum class DistanceMode { ProjectedPegs, RawPegs };

/// Throws DegenerateLayoutError when the normal matrix is singular.
PegPlane fit_plane(const PegLayout& layout);

Vec3 project_tooltip(const Vec3& target, const PegPlane& plane,
                     ProjectionMode mode = ProjectionMode::Verbatim);

double min_peg_distance(const Vec3& projected, const PegLayout& layout, const PegPlane& plane,
                        ProjectionMode projection = ProjectionMode::Verbatim,
                        DistanceMode distance = DistanceMode::ProjectedPegs);

/// Plane fitted once at load, then queried every tick.
class ProximityModel {
public:
    ProximityModel(const PegLayout& layout, ProjectionMode projection, DistanceMode distance);

    double distance(const Vec3& target) const;

    const PegLayout& layout() const { return layout_; }
    const PegPlane& plane() const { return plane_; }

private:
    PegLayout layout_;
    PegPlane plane_;
    ProjectionMode projection_;
    DistanceMode distance_mode_;
    std::array<Vec3, 4> projected_pegs_;
};

}  // namespace telescale
