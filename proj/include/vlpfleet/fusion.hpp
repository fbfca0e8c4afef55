#pragma once

#include <Eigen/Core>

#include <stdexcept>

#include "vlpfleet/geometry.hpp"
#include "vlpfleet/pose_estimator.hpp"

namespace vlp {

/// EKF belief over (x, y, theta).
struct FusedState {
    Eigen::Vector3d mean{Eigen::Vector3d::Zero()};
    Eigen::Matrix3d cov{Eigen::Matrix3d::Identity() * 1e-4};
    double t{0.0};

    Pose2D pose() const { return {mean(0), mean(1), mean(2)}; }
    static FusedState from_pose(const Pose2D& pose, double sigma_xy, double sigma_theta, double t = 0.0);
};

struct OdometryDelta {
    double v{0.0};
    double omega{0.0};
    double dt{0.1};
};

struct ProcessNoise {
    double sigma_v{0.02};
    double sigma_omega{0.03};
    // Speeds at which the motion noise reaches full strength.
    double v_ref{0.22};
    double omega_ref{2.84};
    double floor{1e-10};
};

/// Fraction of full actuation noise for a command: min(1, |v|/v_ref + |w|/w_ref).
double motion_scale(double v, double omega, const ProcessNoise& q);

/// Unicycle motion model.
Eigen::Vector3d motion_model(const Eigen::Vector3d& x, const OdometryDelta& u);
Eigen::Matrix3d motion_jacobian(const Eigen::Vector3d& x, const OdometryDelta& u);

FusedState predict(const FusedState& state, const OdometryDelta& u, const ProcessNoise& q = {});

class SingularInnovation : public std::runtime_error {
public:
    SingularInnovation() : std::runtime_error("innovation covariance is singular") {}
};

/// 99% quantile of chi-square with 2 degrees of freedom.
inline constexpr double kVlpGate = 9.21;

struct UpdateResult {
    FusedState state;
    bool accepted{false};
    double mahalanobis2{0.0};
};

/// Position update from a VLP fix, Mahalanobis-gated, Joseph-form covariance.
/// Throws SingularInnovation (state unchanged) when S cannot be inverted.
UpdateResult update_vlp(const FusedState& state, const PositionFix& fix, double gate = kVlpGate);

}  // namespace vlp
