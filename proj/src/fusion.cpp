#include "vlpfleet/fusion.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace vlp {

namespace {

Eigen::Matrix3d symmetrize(const Eigen::Matrix3d& c) { return 0.5 * (c + c.transpose()); }

}  // namespace

FusedState FusedState::from_pose(const Pose2D& pose, double sigma_xy, double sigma_theta, double t) {
    FusedState s;
    s.mean = {pose.x, pose.y, normalize_angle(pose.theta)};
    s.cov = Eigen::Vector3d(sigma_xy * sigma_xy, sigma_xy * sigma_xy, sigma_theta * sigma_theta)
                .asDiagonal();
    s.t = t;
    return s;
}

double motion_scale(double v, double omega, const ProcessNoise& q) {
    return std::min(1.0, std::abs(v) / q.v_ref + std::abs(omega) / q.omega_ref);
}

Eigen::Vector3d motion_model(const Eigen::Vector3d& x, const OdometryDelta& u) {
    return {x(0) + u.v * u.dt * std::cos(x(2)), x(1) + u.v * u.dt * std::sin(x(2)),
            normalize_angle(x(2) + u.omega * u.dt)};
}

Eigen::Matrix3d motion_jacobian(const Eigen::Vector3d& x, const OdometryDelta& u) {
    Eigen::Matrix3d f = Eigen::Matrix3d::Identity();
    f(0, 2) = -u.v * u.dt * std::sin(x(2));
    f(1, 2) = u.v * u.dt * std::cos(x(2));
    return f;
}

FusedState predict(const FusedState& state, const OdometryDelta& u, const ProcessNoise& q) {
    const Eigen::Matrix3d f = motion_jacobian(state.mean, u);
    const double s = motion_scale(u.v, u.omega, q);
    const double pos = q.sigma_v * q.sigma_v * u.dt * u.dt * s;
    const double ang = q.sigma_omega * q.sigma_omega * u.dt * u.dt * s;
    const Eigen::Matrix3d noise =
        Eigen::Vector3d(pos + q.floor, pos + q.floor, ang + q.floor).asDiagonal();

    FusedState out;
    out.mean = motion_model(state.mean, u);
    out.cov = symmetrize(f * state.cov * f.transpose() + noise);
    out.t = state.t + u.dt;
    return out;
}

UpdateResult update_vlp(const FusedState& state, const PositionFix& fix, double gate) {
    Eigen::Matrix<double, 2, 3> h = Eigen::Matrix<double, 2, 3>::Zero();
    h(0, 0) = 1.0;
    h(1, 1) = 1.0;
    const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * fix.sigma * fix.sigma;
    const Eigen::Vector2d innovation(fix.x - state.mean(0), fix.y - state.mean(1));
    const Eigen::Matrix2d s = h * state.cov * h.transpose() + r;

    const Eigen::FullPivLU<Eigen::Matrix2d> lu(s);
    if (!lu.isInvertible() || !s.allFinite()) throw SingularInnovation();
    const Eigen::Matrix2d s_inv = lu.inverse();

    UpdateResult result{state, false, innovation.dot(s_inv * innovation)};
    if (!(result.mahalanobis2 <= gate)) return result;

    const Eigen::Matrix<double, 3, 2> k = state.cov * h.transpose() * s_inv;
    const Eigen::Matrix3d i_kh = Eigen::Matrix3d::Identity() - k * h;
    result.state.mean = state.mean + k * innovation;
    result.state.mean(2) = normalize_angle(result.state.mean(2));
    result.state.cov = symmetrize(i_kh * state.cov * i_kh.transpose() + k * r * k.transpose());
    result.accepted = true;
    return result;
}

}  // namespace vlp
