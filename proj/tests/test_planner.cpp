#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "dvtscan/planner.hpp"

using namespace dvtscan;

namespace {

FrameTransform probe_at(const Vec3& p, const Mat3& r = Mat3::Identity()) { return FrameTransform(r, p); }

BinaryImage disk(int w, int h, double cc, double cr, double radius) {
    BinaryImage m(w, h);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (std::pow(c - cc, 2) + std::pow(r - cr, 2) <= radius * radius) {
                m.set(c, r);
            }
        }
    }
    return m;
}

/// Grid over z = z0 - k (x^2 + y^2) (a dome), with inward normals.
SurfaceCloud paraboloid_cloud(int n, double half, double z0 = 0.1, double k = 2.0) {
    SurfaceCloud c;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const double x = -half + 2.0 * half * i / (n - 1);
            const double y = -half + 2.0 * half * j / (n - 1);
            c.points.emplace_back(x, y, z0 - k * (x * x + y * y));
            c.normals.push_back(-Vec3(2 * k * x, 2 * k * y, 1.0).normalized());
        }
    }
    return c;
}

std::size_t brute_argmin(const SurfaceCloud& c, const Vec3& p) {
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        const double dx = p.x() - c.points[i].x();
        const double dy = p.y() - c.points[i].y();
        const double d = dx * dx + dy * dy;
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

/// Ridge along y: z = 0.1 + 0.03 (1 - (x - 0.5)^2 / 0.06^2), sampled every mm.
SurfaceCloud ridge_cloud(double y0 = -0.1, double y1 = 0.1) {
    SurfaceCloud c;
    for (double y = y0; y <= y1 + 1e-12; y += 1e-3) {
        for (int i = 0; i <= 120; ++i) {
            const double x = 0.44 + i * 1e-3;
            const double w = (x - 0.5) / 0.06;
            const double z = 0.1 + 0.03 * (1 - w * w);
            const double dzdx = -0.03 * 2 * w / 0.06;
            c.points.emplace_back(x, y, z);
            c.normals.push_back(-Vec3(-dzdx, 0.0, 1.0).normalized());
        }
    }
    return c;
}

}  // namespace

TEST(PixelToWorld, CentreColumnMapsToProbeAxis) {
    const UsFrameGeometry g;
    const Vec3 p = pixel_to_world({g.width / 2.0, 0.0}, probe_at(Vec3::Zero()), g);
    EXPECT_NEAR(p.y(), 0.0, 1e-15);
    EXPECT_NEAR(p.z(), 0.0, 1e-15);
}

TEST(PixelToWorld, FirstColumnIsHalfFootprintLeft) {
    const UsFrameGeometry g;
    const Vec3 p = pixel_to_world({0.0, 0.0}, probe_at(Vec3::Zero()), g);
    EXPECT_NEAR(p.y(), -g.footprint / 2.0, 1e-15);
}

TEST(PixelToWorld, RowsMapToDepthAlongProbeAxis) {
    const UsFrameGeometry g;
    const Vec3 p = pixel_to_world({g.width / 2.0, static_cast<double>(g.height)}, probe_at(Vec3::Zero()), g);
    EXPECT_NEAR(p.z(), g.depth, 1e-15);
}

TEST(PixelToWorld, RoundTripThroughArbitraryPose) {
    const UsFrameGeometry g;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const UnitQuaternion q(u(rng), u(rng), u(rng), u(rng));
        const FrameTransform t(q.rotation(), Vec3(u(rng), u(rng), u(rng)));
        const PixelCoord px{(u(rng) + 1.0) * g.width / 2.0, (u(rng) + 1.0) * g.height / 2.0};
        const Vec3 x = pixel_to_world(px, t, g);
        const auto [back, off] = world_to_pixel(x, t, g);
        EXPECT_NEAR(back.col, px.col, 1e-9);
        EXPECT_NEAR(back.row, px.row, 1e-9);
        EXPECT_NEAR(off, 0.0, 1e-12);
        EXPECT_LT((pixel_to_world(back, t, g) - x).norm(), 1e-9);
    }
}

TEST(VesselCentroid, FilledDisk) {
    const auto c = vessel_centroid(disk(640, 480, 100, 80, 12));
    ASSERT_TRUE(c.has_value());
    EXPECT_NEAR(c->col, 100.0, 1e-9);
    EXPECT_NEAR(c->row, 80.0, 1e-9);
}

TEST(VesselCentroid, EmptyMaskHasNoCentroid) { EXPECT_FALSE(vessel_centroid(BinaryImage(64, 48)).has_value()); }

TEST(VesselCentroid, LargestComponentWins) {
    BinaryImage m(200, 100);
    // 25 x 20 = 500 pixels and 10 x 5 = 50 pixels.
    for (int r = 10; r < 30; ++r) {
        for (int c = 120; c < 145; ++c) {
            m.set(c, r);
        }
    }
    for (int r = 60; r < 65; ++r) {
        for (int c = 10; c < 20; ++c) {
            m.set(c, r);
        }
    }
    const auto cen = vessel_centroid(m);
    ASSERT_TRUE(cen.has_value());
    EXPECT_NEAR(cen->col, 132.0, 1e-12);
    EXPECT_NEAR(cen->row, 19.5, 1e-12);
}

TEST(VesselCentroid, DiagonalPixelsAreSeparateComponents) {
    BinaryImage m(10, 10);
    m.set(2, 2);
    m.set(3, 3);
    m.set(4, 4);
    m.set(4, 5);
    const auto cen = vessel_centroid(m);
    ASSERT_TRUE(cen.has_value());
    EXPECT_NEAR(cen->col, 4.0, 1e-12);
    EXPECT_NEAR(cen->row, 4.5, 1e-12);
}

TEST(ChainCentroids, OneDetectionPerFrameIsIdentity) {
    std::vector<FrameDetections> f;
    for (int i = 0; i < 20; ++i) {
        f.push_back({i, {Vec3(0.5, i * 1e-3, 0.1)}});
    }
    const auto cl = chain_centroids(f);
    ASSERT_EQ(cl.size(), 20u);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(cl.source_frame_ids[i], i);
        EXPECT_EQ(cl.points[i], f[i].candidates[0]);
    }
}

TEST(ChainCentroids, PicksNearestCandidate) {
    std::vector<FrameDetections> f{{0, {Vec3(0, 0, 0)}}, {1, {Vec3(0.015, 0, 0), Vec3(0.001, 0, 0)}}};
    const auto cl = chain_centroids(f);
    ASSERT_EQ(cl.size(), 2u);
    EXPECT_NEAR(cl.points[1].x(), 0.001, 1e-15);
}

TEST(ChainCentroids, SurvivesDropouts) {
    std::vector<FrameDetections> f;
    for (int i = 0; i < 10; ++i) {
        FrameDetections d{i, {}};
        if (i < 3 || i > 5) {
            d.candidates.push_back(Vec3(0, i * 3e-3, 0));
        }
        f.push_back(d);
    }
    const auto cl = chain_centroids(f);
    EXPECT_EQ(cl.size(), 7u);
    EXPECT_EQ(cl.source_frame_ids[3], 6);
    EXPECT_LE(cl.size(), f.size());
}

TEST(ChainCentroids, TrackLostReportsFrame) {
    std::vector<FrameDetections> f{{0, {Vec3(0, 0, 0)}}, {1, {Vec3(0, 0.005, 0)}}, {7, {Vec3(0, 0.030, 0)}}};
    try {
        (void)chain_centroids(f);
        FAIL() << "expected TrackLostError";
    } catch (const TrackLostError& e) {
        EXPECT_EQ(e.frame_id, 7);
    }
}

TEST(ChainCentroids, SkipsLeadingEmptyFramesAndHonoursSeed) {
    std::vector<FrameDetections> f{{0, {}}, {1, {}}, {2, {Vec3(0, 0, 0)}}, {3, {Vec3(0, 0.001, 0)}}};
    EXPECT_EQ(chain_centroids(f).source_frame_ids.front(), 2);
    EXPECT_EQ(chain_centroids(f, 3).size(), 1u);
    EXPECT_THROW((void)chain_centroids(f, 0), InvalidArgument);
}

TEST(ProjectToSurface, PointDirectlyBelowSample) {
    const SurfaceCloud c = paraboloid_cloud(21, 0.05);
    VesselCenterline cl;
    cl.points.push_back(c.points[37] - Vec3(0, 0, 0.012));
    const auto pr = project_to_surface(cl, c);
    ASSERT_EQ(pr.indices.size(), 1u);
    EXPECT_EQ(pr.indices[0], 37u);
    EXPECT_EQ(pr.residuals[0], 0.0);
    EXPECT_EQ(pr.waypoints.normals[0], c.normals[37]);
}

TEST(ProjectToSurface, MatchesBruteForceOnDenseParaboloid) {
    const SurfaceCloud c = paraboloid_cloud(101, 0.05);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-0.06, 0.06);
    VesselCenterline cl;
    for (int k = 0; k < 300; ++k) {
        const double x = u(rng);
        const double y = u(rng);
        cl.points.emplace_back(x, y, 0.1 - 2.0 * (x * x + y * y) - 0.008);
    }
    const auto pr = project_to_surface(cl, c);
    for (std::size_t k = 0; k < cl.size(); ++k) {
        EXPECT_EQ(pr.indices[k], brute_argmin(c, cl.points[k])) << k;
    }
}

TEST(ProjectToSurface, InvariantToVerticalShift) {
    const SurfaceCloud c = paraboloid_cloud(41, 0.05);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    std::uniform_real_distribution<double> dz(-1.0, 1.0);
    VesselCenterline a;
    VesselCenterline b;
    for (int k = 0; k < 100; ++k) {
        const Vec3 p(u(rng), u(rng), 0.0);
        a.points.push_back(p);
        b.points.push_back(p + Vec3(0, 0, dz(rng)));
    }
    EXPECT_EQ(project_to_surface(a, c).indices, project_to_surface(b, c).indices);
}

TEST(ProjectToSurface, ProjectorAnnihilatesVerticalAxis) {
    const Vec3 n = Vec3(0.2, -0.1, 1.0).normalized();
    const Mat3 nv = Mat3::Identity() - n * n.transpose();
    EXPECT_LT((nv * n).norm(), 1e-15);
    EXPECT_NEAR(horizontal_distance2(nv, Vec3::Zero(), 3.0 * n), 0.0, 1e-15);
}

TEST(ProjectToSurface, FlagsLargeHorizontalGap) {
    const SurfaceCloud c = paraboloid_cloud(11, 0.01);
    VesselCenterline cl;
    cl.points.emplace_back(0.05, 0.0, 0.0);
    const auto pr = project_to_surface(cl, c);
    EXPECT_TRUE(pr.gap_warning);
    EXPECT_NEAR(pr.residuals[0], 0.04, 1e-12);
}

TEST(ProjectToSurface, TiltedVerticalAxisMatchesBruteForce) {
    const SurfaceCloud c = paraboloid_cloud(51, 0.05);
    const Vec3 n = Vec3(0.1, 0.05, 1.0).normalized();
    const Mat3 nv = Mat3::Identity() - n * n.transpose();
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    VesselCenterline cl;
    for (int k = 0; k < 100; ++k) {
        cl.points.emplace_back(u(rng), u(rng), 0.08);
    }
    const auto pr = project_to_surface(cl, c, n);
    for (std::size_t k = 0; k < cl.size(); ++k) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double d = horizontal_distance2(nv, cl.points[k], c.points[i]);
            if (d < bd) {
                bd = d;
                best = i;
            }
        }
        EXPECT_EQ(pr.indices[k], best);
    }
}

TEST(CoarsePath, RidgeWithoutBiasFollowsCrest) {
    const SurfaceCloud c = ridge_cloud();
    const auto w = coarse_path(c, Vec3(0.5, -0.09, 0), Vec3(0.5, 0.09, 0), 0.0);
    ASSERT_GE(w.size(), 2u);
    for (std::size_t i = 0; i < w.size(); ++i) {
        EXPECT_NEAR(w.points[i].x(), 0.5, 1e-9);
        EXPECT_NEAR(w.points[i].z(), 0.13, 1e-6);
        // Inward normals: the probe axis points down into the crest.
        EXPECT_GT(-w.normals[i].z(), 0.999);
        if (i > 0) {
            EXPECT_LE((w.points[i] - w.points[i - 1]).norm(), 0.005);
        }
    }
}

TEST(CoarsePath, BiasShiftsLaterallyAndTiltsNormals) {
    const SurfaceCloud c = ridge_cloud();
    const Vec3 start(0.5, -0.09, 0);
    const Vec3 end(0.5, 0.09, 0);
    const auto w = coarse_path(c, start, end, 0.010);
    // Lateral direction for travel along +y is z x y = -x.
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double x = w.points[i].x();
        EXPECT_NEAR(x, 0.49, 1e-9);
        const double wn = (x - 0.5) / 0.06;
        EXPECT_NEAR(w.points[i].z(), 0.1 + 0.03 * (1 - wn * wn), 2e-6);
        const Vec3 expect = -Vec3(0.03 * 2 * wn / 0.06, 0.0, 1.0).normalized();
        EXPECT_GT(w.normals[i].dot(expect), 1.0 - 1e-4);
    }
}

TEST(CoarsePath, ReversedEndpointsGiveReversedPath) {
    const SurfaceCloud c = ridge_cloud();
    const Vec3 a(0.5, -0.09, 0);
    const Vec3 b(0.5, 0.09, 0);
    const auto fwd = coarse_path(c, a, b, 0.004);
    const auto rev = coarse_path(c, b, a, 0.004);
    ASSERT_EQ(fwd.size(), rev.size());
    for (std::size_t i = 0; i < fwd.size(); ++i) {
        EXPECT_LT((fwd.points[i] - rev.points[rev.size() - 1 - i]).norm(), 1e-7);
        EXPECT_LT((fwd.normals[i] - rev.normals[rev.size() - 1 - i]).norm(), 1e-5);
    }
}

TEST(CoarsePath, EmptySliceIsSparseCloud) {
    SurfaceCloud c = ridge_cloud();
    SurfaceCloud holed;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (std::abs(c.points[i].y()) > 0.004) {
            holed.points.push_back(c.points[i]);
            holed.normals.push_back(c.normals[i]);
        }
    }
    EXPECT_THROW((void)coarse_path(holed, Vec3(0.5, -0.09, 0), Vec3(0.5, 0.09, 0), 0.0), SparseCloudError);
}

TEST(OptimizePath, VesselUnderInitialPathIsFixedPoint) {
    const SurfaceCloud c = ridge_cloud();
    const auto w = coarse_path(c, Vec3(0.5, -0.09, 0), Vec3(0.5, 0.09, 0), 0.0);
    const FittedPath initial = fit_scan_path(w);
    std::vector<SweepSample> sweep;
    for (int k = 0; k <= 120; ++k) {
        const double s = k / 120.0;
        SweepSample smp;
        smp.frame_id = k;
        smp.s = s;
        smp.pose = initial.pose_at(s);
        smp.centroid = smp.pose.position - Vec3(0, 0, 0.012);
        sweep.push_back(smp);
    }
    const auto out = optimize_path_detailed(initial, sweep, c);
    for (double s = 0.0; s <= 1.0; s += 0.05) {
        const Vec3 p = out.path.position(s);
        EXPECT_NEAR(p.x(), 0.5, 1e-3);
        EXPECT_NEAR(p.z(), 0.13, 1e-3);
    }
    // Centroid binning can trim up to one bin from each end.
    EXPECT_NEAR(out.path.s_N, initial.s_N, 2.0 * OptimizeOptions{}.bin_length);
}

TEST(OptimizePath, TooFewObservations) {
    const SurfaceCloud c = ridge_cloud();
    const auto w = coarse_path(c, Vec3(0.5, -0.09, 0), Vec3(0.5, 0.09, 0), 0.0);
    const FittedPath initial = fit_scan_path(w);
    std::vector<SweepSample> sweep;
    for (int k = 0; k < 30; ++k) {
        SweepSample smp;
        smp.frame_id = k;
        smp.s = k / 29.0;
        smp.pose = initial.pose_at(smp.s);
        if (k < 6) {
            smp.centroid = smp.pose.position;
        }
        sweep.push_back(smp);
    }
    EXPECT_THROW((void)optimize_path(initial, sweep, c), InsufficientObservationsError);
}
