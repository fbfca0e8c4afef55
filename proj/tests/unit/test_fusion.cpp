#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "vlpfleet/fusion.hpp"

using namespace vlp;

namespace {

FusedState state_at(double x, double y, double th, double pos_var, double th_var) {
    FusedState s;
    s.mean = {x, y, th};
    s.cov = Eigen::Vector3d(pos_var, pos_var, th_var).asDiagonal();
    return s;
}

PositionFix fix_at(double x, double y, double sigma) {
    PositionFix f;
    f.x = x;
    f.y = y;
    f.sigma = sigma;
    return f;
}

bool symmetric_psd(const Eigen::Matrix3d& p) {
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, p.cwiseAbs().maxCoeff())) return false;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(p);
    return es.eigenvalues().minCoeff() >= -1e-12;
}

// Independent reference: plain arrays, standard (not Joseph) covariance form.
struct Naive {
    double m[3];
    double p[3][3];

    void predict(double v, double w, double dt, const ProcessNoise& q) {
        const double th = m[2];
        m[0] += v * dt * std::cos(th);
        m[1] += v * dt * std::sin(th);
        m[2] = std::remainder(m[2] + w * dt, 2 * std::numbers::pi);
        double f[3][3] = {{1, 0, -v * dt * std::sin(th)}, {0, 1, v * dt * std::cos(th)}, {0, 0, 1}};
        double fp[3][3] = {};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) fp[i][j] += f[i][k] * p[k][j];
        double out[3][3] = {};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int k = 0; k < 3; ++k) out[i][j] += fp[i][k] * f[j][k];
        const double s = std::min(1.0, std::abs(v) / q.v_ref + std::abs(w) / q.omega_ref);
        out[0][0] += q.sigma_v * q.sigma_v * dt * dt * s + q.floor;
        out[1][1] += q.sigma_v * q.sigma_v * dt * dt * s + q.floor;
        out[2][2] += q.sigma_omega * q.sigma_omega * dt * dt * s + q.floor;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) p[i][j] = out[i][j];
    }

    void update(double zx, double zy, double sigma) {
        const double r = sigma * sigma;
        const double s00 = p[0][0] + r, s01 = p[0][1], s10 = p[1][0], s11 = p[1][1] + r;
        const double det = s00 * s11 - s01 * s10;
        const double i00 = s11 / det, i01 = -s01 / det, i10 = -s10 / det, i11 = s00 / det;
        double k[3][2];
        for (int i = 0; i < 3; ++i) {
            k[i][0] = p[i][0] * i00 + p[i][1] * i10;
            k[i][1] = p[i][0] * i01 + p[i][1] * i11;
        }
        const double y0 = zx - m[0], y1 = zy - m[1];
        for (int i = 0; i < 3; ++i) m[i] += k[i][0] * y0 + k[i][1] * y1;
        double out[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out[i][j] = p[i][j] - (k[i][0] * p[0][j] + k[i][1] * p[1][j]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) p[i][j] = out[i][j];
    }
};

}  // namespace

TEST(Predict, ZeroCommandAddsOnlyFloor) {
    const ProcessNoise q;
    const FusedState s = state_at(1.0, 2.0, 0.5, 1e-3, 1e-4);
    const FusedState out = predict(s, {0.0, 0.0, 0.1}, q);
    EXPECT_EQ(out.mean, s.mean);
    EXPECT_TRUE(out.cov.isApprox(s.cov + Eigen::Matrix3d::Identity() * q.floor, 1e-15));
}

TEST(Predict, StraightLineKinematics) {
    const FusedState s = state_at(0.0, 0.0, 0.0, 1e-4, 1e-4);
    const FusedState out = predict(s, {0.22, 0.0, 1.0});
    EXPECT_NEAR(out.mean(0), 0.22, 1e-15);
    EXPECT_NEAR(out.mean(1), 0.0, 1e-15);
    EXPECT_GT(out.cov(0, 0), s.cov(0, 0));
    EXPECT_DOUBLE_EQ(out.t, 1.0);
}

TEST(Predict, JacobianMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pos(-5.0, 5.0), ang(-3.1, 3.1), vel(-0.3, 0.3), rate(-2.8, 2.8);
    for (int n = 0; n < 100; ++n) {
        const Eigen::Vector3d x(pos(rng), pos(rng), ang(rng));
        const OdometryDelta u{vel(rng), rate(rng), 0.1};
        const Eigen::Matrix3d f = motion_jacobian(x, u);
        const double eps = 1e-6;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d xp = x, xm = x;
            xp(j) += eps;
            xm(j) -= eps;
            Eigen::Vector3d d = (motion_model(xp, u) - motion_model(xm, u)) / (2 * eps);
            d(2) = std::remainder(motion_model(xp, u)(2) - motion_model(xm, u)(2), 2 * std::numbers::pi) / (2 * eps);
            for (int i = 0; i < 3; ++i) EXPECT_NEAR(f(i, j), d(i), 1e-6) << n << " " << i << "," << j;
        }
    }
}

TEST(UpdateVlp, ZeroInnovationShrinksPositionCovariance) {
    const FusedState s = state_at(3.0, 1.0, 0.2, 4e-3, 1e-3);
    const auto r = update_vlp(s, fix_at(3.0, 1.0, 0.01));
    ASSERT_TRUE(r.accepted);
    EXPECT_DOUBLE_EQ(r.state.mean(0), 3.0);
    EXPECT_DOUBLE_EQ(r.state.mean(1), 1.0);
    const double before = s.cov.topLeftCorner<2, 2>().trace();
    const double after = r.state.cov.topLeftCorner<2, 2>().trace();
    EXPECT_LT(after, before);
}

TEST(UpdateVlp, TinySigmaPullsMeanOntoFix) {
    const FusedState s = state_at(3.0, 1.0, 0.2, 4e-3, 1e-3);
    const auto r = update_vlp(s, fix_at(3.05, 0.97, 1e-6));
    ASSERT_TRUE(r.accepted);
    EXPECT_NEAR(r.state.mean(0), 3.05, 1e-8);
    EXPECT_NEAR(r.state.mean(1), 0.97, 1e-8);
}

TEST(UpdateVlp, FarFixIsGated) {
    const FusedState s = state_at(3.0, 1.0, 0.2, 1e-4, 1e-4);
    // 10 sigma of S away.
    const double sd = std::sqrt(1e-4 + 1e-4);
    const auto r = update_vlp(s, fix_at(3.0 + 10 * sd, 1.0, 0.01));
    EXPECT_FALSE(r.accepted);
    EXPECT_EQ(r.state.mean, s.mean);
    EXPECT_EQ(r.state.cov, s.cov);
    EXPECT_NEAR(r.mahalanobis2, 100.0, 1e-9);
}

TEST(UpdateVlp, SingularInnovationThrows) {
    FusedState s = state_at(0.0, 0.0, 0.0, 0.0, 1e-3);
    s.cov.setZero();
    EXPECT_THROW(update_vlp(s, fix_at(0.0, 0.0, 0.0)), SingularInnovation);
}

TEST(UpdateVlp, MatchesNaiveScalarKalman) {
    ProcessNoise q;
    FusedState s = state_at(1.0, 2.0, 0.4, 2e-3, 5e-4);
    s.cov(0, 1) = s.cov(1, 0) = 3e-4;
    s.cov(0, 2) = s.cov(2, 0) = -1e-4;
    Naive ref{{1.0, 2.0, 0.4}, {}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) ref.p[i][j] = s.cov(i, j);

    s = predict(s, {0.2, 0.5, 0.1}, q);
    ref.predict(0.2, 0.5, 0.1, q);
    const auto r = update_vlp(s, fix_at(1.03, 2.02, 0.02));
    ASSERT_TRUE(r.accepted);
    ref.update(1.03, 2.02, 0.02);
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(r.state.mean(i), ref.m[i], 1e-12);
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(r.state.cov(i, j), ref.p[i][j], 1e-12);
    }
}

TEST(Fusion, RandomSequenceKeepsCovarianceSymmetricPsd) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> vel(-0.22, 0.22), rate(-2.84, 2.84), off(-0.2, 0.2), sig(1e-4, 0.1);
    std::bernoulli_distribution do_update(0.4);
    FusedState s = state_at(4.0, 2.4, 0.0, 1e-2, 1e-2);
    for (int n = 0; n < 10000; ++n) {
        if (do_update(rng)) {
            const double prev_trace = s.cov.topLeftCorner<2, 2>().trace();
            const auto r = update_vlp(s, fix_at(s.mean(0) + off(rng), s.mean(1) + off(rng), sig(rng)));
            const double after = r.state.cov.topLeftCorner<2, 2>().trace();
            if (r.accepted) EXPECT_LE(after, prev_trace + 1e-15);
            s = r.state;
        } else {
            s = predict(s, {vel(rng), rate(rng), 0.1});
        }
        ASSERT_TRUE(symmetric_psd(s.cov)) << "step " << n;
        ASSERT_GT(s.mean(2), -std::numbers::pi);
        ASSERT_LE(s.mean(2), std::numbers::pi);
    }
}
