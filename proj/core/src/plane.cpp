#include "telescale/plane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "telescale/error.hpp"

namespace telescale {

void PegLayout::validate() const {
    for (const auto& c : centers) {
        if (!c.allFinite()) throw ConfigError("peg center is not finite");
    }
    for (std::size_t i = 0; i < centers.size(); ++i) {
        for (std::size_t j = i + 1; j < centers.size(); ++j) {
            if ((centers[i] - centers[j]).norm() == 0.0) {
                throw ConfigError("peg centers must be pairwise distinct");
            }
        }
    }
}

PegPlane fit_plane(const PegLayout& layout) {
    // Normal equations of a*x + b*y + z = c in coordinates centered on the
    // peg centroid: c drops out, leaving a 2x2 system for (a, b) that stays
    // well conditioned far from the origin or in millimeters.
    Vec3 mean = Vec3::Zero();
    for (const auto& p : layout.centers) mean += p;
    mean /= static_cast<double>(layout.centers.size());
    double sxx = 0.0, sxy = 0.0, syy = 0.0, sxz = 0.0, syz = 0.0;
    for (const auto& p : layout.centers) {
        const Vec3 d = p - mean;
        sxx += d.x() * d.x();
        sxy += d.x() * d.y();
        syy += d.y() * d.y();
        sxz += d.x() * d.z();
        syz += d.y() * d.z();
    }
    const double det = sxx * syy - sxy * sxy;
    const double spread = sxx + syy;
    if (!std::isfinite(det) || std::abs(det) <= 1e-12 * spread * spread) {
        throw DegenerateLayoutError("peg layout is degenerate: pegs are collinear in x-y");
    }
    PegPlane plane;
    plane.a = -(syy * sxz - sxy * syz) / det;
    plane.b = -(sxx * syz - sxy * sxz) / det;
    plane.c = mean.z() + plane.a * mean.x() + plane.b * mean.y();
    plane.normal = Vec3(plane.a, plane.b, 1.0).normalized();
    return plane;
}

Vec3 project_tooltip(const Vec3& target, const PegPlane& plane, ProjectionMode mode) {
    const Vec3 offset(0.0, 0.0, plane.c);
    const Vec3& e = plane.normal;
    if (mode == ProjectionMode::Verbatim) {
        return target - offset - target.dot(e) * e;
    }
    const Vec3 shifted = target - offset;
    return shifted - shifted.dot(e) * e;
}

double min_peg_distance(const Vec3& projected, const PegLayout& layout, const PegPlane& plane,
                        ProjectionMode projection, DistanceMode distance) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& center : layout.centers) {
        const Vec3 peg = distance == DistanceMode::ProjectedPegs
                             ? project_tooltip(center, plane, projection)
                             : center;
        best = std::min(best, (projected - peg).norm());
    }
    return best;
}

ProximityModel::ProximityModel(const PegLayout& layout, ProjectionMode projection,
                               DistanceMode distance)
    : layout_(layout),
      plane_(fit_plane(layout)),
      projection_(projection),
      distance_mode_(distance) {
    for (std::size_t i = 0; i < layout_.centers.size(); ++i) {
        projected_pegs_[i] = distance_mode_ == DistanceMode::ProjectedPegs
                                 ? project_tooltip(layout_.centers[i], plane_, projection_)
                                 : layout_.centers[i];
    }
}

double ProximityModel::distance(const Vec3& target) const {
    const Vec3 projected = project_tooltip(target, plane_, projection_);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& peg : projected_pegs_) {
        best = std::min(best, (projected - peg).norm());
    }
    return best;
}

}  // namespace telescale
