#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>

#include "telescale/error.hpp"
#include "telescale/plane.hpp"
#include "telescale/scale_map.hpp"
#include "telescale/scenario.hpp"

using namespace telescale;

namespace {

PegLayout board_layout() {
    return PegLayout{{Vec3(0.030, 0.040, 0.0), Vec3(0.030, 0.060, 0.0), Vec3(0.070, 0.040, 0.0),
                      Vec3(0.070, 0.060, 0.0)}};
}

// Normal equations (A^T A) w = -A^T z with rows [x, y, -1], solved by full
// pivoting LU rather than the centered 2x2 solve used by fit_plane.
Vec3 oracle_fit(const PegLayout& layout) {
    Eigen::Matrix<double, 4, 3> a;
    Eigen::Vector4d z;
    for (int i = 0; i < 4; ++i) {
        a.row(i) << layout.centers[i].x(), layout.centers[i].y(), -1.0;
        z(i) = layout.centers[i].z();
    }
    const Eigen::Matrix3d n = a.transpose() * a;
    return n.fullPivLu().solve(-a.transpose() * z);
}

}  // namespace

TEST_SUITE("plane") {
    TEST_CASE("flat board fits z = 0") {
        const PegPlane p = fit_plane(board_layout());
        CHECK(std::abs(p.a) < 1e-12);
        CHECK(std::abs(p.b) < 1e-12);
        CHECK(std::abs(p.c) < 1e-12);
        CHECK((p.normal - Vec3::UnitZ()).norm() < 1e-12);
    }

    TEST_CASE("points on z = 1 - 0.1x") {
        PegLayout layout = board_layout();
        for (auto& c : layout.centers) c.z() = 1.0 - 0.1 * c.x();
        const PegPlane p = fit_plane(layout);
        CHECK(p.a == doctest::Approx(0.1).epsilon(1e-9));
        CHECK(std::abs(p.b) < 1e-9);
        CHECK(p.c == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(p.normal.norm() == doctest::Approx(1.0));
        for (const auto& c : layout.centers) CHECK(std::abs(p.a * c.x() + p.b * c.y() + c.z() - p.c) < 1e-9);
    }

    TEST_CASE("one lifted peg gives the least-squares plane") {
        PegLayout layout = board_layout();
        layout.centers[2].z() = 0.001;
        const PegPlane p = fit_plane(layout);
        const Vec3 w = oracle_fit(layout);
        CHECK(std::abs(p.a - w(0)) < 1e-9);
        CHECK(std::abs(p.b - w(1)) < 1e-9);
        CHECK(std::abs(p.c - w(2)) < 1e-9);
    }

    TEST_CASE("random layouts match the normal-equation oracle") {
        std::mt19937_64 rng(99);
        std::uniform_real_distribution<double> xy(0.0, 0.1);
        std::uniform_real_distribution<double> lift(-0.01, 0.01);
        std::uniform_real_distribution<double> slope(-0.5, 0.5);
        int checked = 0;
        while (checked < 1000) {
            PegLayout layout;
            for (auto& c : layout.centers) c = Vec3(xy(rng), xy(rng), lift(rng));
            const Vec3 w = oracle_fit(layout);
            Eigen::Matrix3d n = Eigen::Matrix3d::Zero();
            for (const auto& c : layout.centers) {
                const Vec3 row(c.x(), c.y(), -1.0);
                n += row * row.transpose();
            }
            if (std::abs(n.determinant()) < 1e-12) continue;
            const PegPlane p = fit_plane(layout);
            REQUIRE(std::abs(p.a - w(0)) < 1e-9);
            REQUIRE(std::abs(p.b - w(1)) < 1e-9);
            REQUIRE(std::abs(p.c - w(2)) < 1e-9);

            // Coplanar version of the same x-y layout.
            const double a = slope(rng);
            const double b = slope(rng);
            const double c = lift(rng);
            for (auto& q : layout.centers) q.z() = c - a * q.x() - b * q.y();
            const PegPlane flat = fit_plane(layout);
            for (const auto& q : layout.centers) {
                REQUIRE(std::abs(flat.a * q.x() + flat.b * q.y() + q.z() - flat.c) < 1e-9);
            }
            ++checked;
        }
    }

    TEST_CASE("vertical translation changes only c") {
        PegLayout layout = board_layout();
        layout.centers[1].z() = 0.002;
        layout.centers[3].z() = -0.001;
        const PegPlane p = fit_plane(layout);
        for (auto& c : layout.centers) c.z() += 0.05;
        const PegPlane q = fit_plane(layout);
        CHECK(std::abs(p.a - q.a) < 1e-9);
        CHECK(std::abs(p.b - q.b) < 1e-9);
        CHECK(std::abs((q.c - p.c) - 0.05) < 1e-9);
    }

    TEST_CASE("fit does not depend on peg order") {
        PegLayout layout = board_layout();
        layout.centers[0].z() = 0.003;
        const PegPlane p = fit_plane(layout);
        std::array<int, 4> order{0, 1, 2, 3};
        while (std::next_permutation(order.begin(), order.end())) {
            PegLayout shuffled;
            for (int i = 0; i < 4; ++i) shuffled.centers[i] = layout.centers[order[i]];
            const PegPlane q = fit_plane(shuffled);
            CHECK(std::abs(p.a - q.a) < 1e-12);
            CHECK(std::abs(p.b - q.b) < 1e-12);
            CHECK(std::abs(p.c - q.c) < 1e-12);
        }
    }

    TEST_CASE("collinear pegs are degenerate") {
        PegLayout layout{{Vec3(0.01, 0.01, 0.0), Vec3(0.02, 0.02, 0.0), Vec3(0.03, 0.03, 0.0),
                          Vec3(0.04, 0.04, 0.0)}};
        CHECK_THROWS_AS(fit_plane(layout), DegenerateLayoutError);
    }

    TEST_CASE("projection onto the flat board drops z") {
        const PegPlane flat = fit_plane(board_layout());
        const Vec3 s = project_tooltip(Vec3(0.01, 0.02, 0.03), flat);
        CHECK((s - Vec3(0.01, 0.02, 0.0)).norm() < 1e-15);
        CHECK(project_tooltip(Vec3(0.0, 0.0, 0.7), flat).norm() < 1e-15);
        // Idempotent on the in-plane component.
        CHECK((project_tooltip(s, flat) - s).norm() < 1e-15);
    }

    TEST_CASE("projection on a tilted plane matches the formula") {
        PegPlane p;
        p.a = 0.1;
        p.b = 0.0;
        p.c = 1.0;
        p.normal = Vec3(0.1, 0.0, 1.0).normalized();
        // t - (0,0,c) - (t.e) e with t = (0,0,1), e = (0.1,0,1)/sqrt(1.01).
        const Vec3 expected(-0.1 / 1.01, 0.0, -1.0 / 1.01);
        CHECK((project_tooltip(Vec3(0.0, 0.0, 1.0), p) - expected).norm() < 1e-15);

        const Vec3 shifted = project_tooltip(Vec3(0.0, 0.0, 1.0), p, ProjectionMode::ShiftedOrigin);
        CHECK(shifted.norm() < 1e-15);
    }

    TEST_CASE("nearest peg distance") {
        const PegLayout layout = board_layout();
        const PegPlane flat = fit_plane(layout);
        CHECK(min_peg_distance(Vec3(0.05, 0.05, 0.0), layout, flat) ==
              doctest::Approx(std::sqrt(0.02 * 0.02 + 0.01 * 0.01)).epsilon(1e-12));
        CHECK(min_peg_distance(project_tooltip(Vec3(0.07, 0.06, 0.004), flat), layout, flat) < 1e-15);
        CHECK(min_peg_distance(Vec3(1.5, 1.5, 0.0), layout, flat) >= 1.0);

        const ProximityModel model(layout, ProjectionMode::Verbatim, DistanceMode::ProjectedPegs);
        CHECK(model.distance(Vec3(0.05, 0.05, 0.02)) == doctest::Approx(0.0223607).epsilon(1e-6));
    }
}

TEST_SUITE("scale_map") {
    TEST_CASE("positional map over the board") {
        const PegLayout layout = board_layout();
        const auto cells = positional_scale_map(layout, PositionalScaling{});
        REQUIRE(cells.size() == 101u * 101u);
        auto at = [&](double x, double y) {
            return *std::find_if(cells.begin(), cells.end(), [&](const ScaleMapCell& c) {
                return std::abs(c.x - x) < 1e-9 && std::abs(c.y - y) < 1e-9;
            });
        };
        for (const auto& peg : layout.centers) CHECK(at(peg.x(), peg.y()).scale_s == 0.5);
        CHECK(at(0.0, 0.0).scale_s == 1.0);
        CHECK(at(0.1, 0.0).scale_s == 1.0);
        CHECK(at(0.0, 0.1).scale_s == 1.0);
        CHECK(at(0.1, 0.1).scale_s == 1.0);
        for (const auto& c : cells) {
            CHECK(c.total >= 0.1);
            CHECK(c.total <= 0.2);
        }
    }

    TEST_CASE("csv has a header and one line per cell") {
        ScaleMapGrid grid;
        grid.step = 0.01;
        const auto cells = positional_scale_map(board_layout(), PositionalScaling{}, grid);
        const std::string csv = scale_map_csv(cells);
        CHECK(csv.rfind("x_mm,y_mm,distance_mm,scale_s,total\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(cells.size() + 1));
    }

    TEST_CASE("bad grids are rejected") {
        ScaleMapGrid grid;
        grid.step = 0.0;
        CHECK_THROWS_AS(positional_scale_map(board_layout(), PositionalScaling{}, grid), ConfigError);
        grid.step = 0.001;
        grid.x_max = -1.0;
        CHECK_THROWS_AS(positional_scale_map(board_layout(), PositionalScaling{}, grid), ConfigError);
    }

    TEST_CASE("default task uses the board layout") {
        const TaskSetup task = default_task();
        for (int i = 0; i < 4; ++i) CHECK((task.layout.centers[i] - board_layout().centers[i]).norm() < 1e-15);
    }
}
