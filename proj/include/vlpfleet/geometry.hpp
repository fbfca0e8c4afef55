#pragma once

#include <cmath>
#include <numbers>

namespace vlp {

struct Vec2 {
    double x{0.0};
    double y{0.0};

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;

    double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline Vec2 rotate(Vec2 p, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) a += two_pi;
    if (a > std::numbers::pi) a -= two_pi;
    return a;
}

/// Planar pose in the world frame; theta is the heading of the robot x-axis.
struct Pose2D {
    double x{0.0};
    double y{0.0};
    double theta{0.0};

    Vec2 position() const { return {x, y}; }
    friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

/// Maps a point expressed in the pose's local frame into the world frame.
inline Vec2 to_world(const Pose2D& pose, Vec2 local) {
    return rotate(local, pose.theta) + pose.position();
}

/// Inverse of to_world.
inline Vec2 to_local(const Pose2D& pose, Vec2 world) {
    return rotate(world - pose.position(), -pose.theta);
}

}  // namespace vlp
