#pragma once

#include <array>
#include <cmath>

namespace spnf {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this / norm(); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Row-major 4x4 homogeneous transform.
struct Mat4 {
    std::array<double, 16> m{};

    static Mat4 identity() {
        Mat4 r;
        r.m = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
        return r;
    }

    double operator()(int r, int c) const { return m[4 * r + c]; }
    double& operator()(int r, int c) { return m[4 * r + c]; }

    Vec3 transform_point(const Vec3& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
                m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
                m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
    }

    Vec3 transform_dir(const Vec3& d) const {
        return {m[0] * d.x + m[1] * d.y + m[2] * d.z,
                m[4] * d.x + m[5] * d.y + m[6] * d.z,
                m[8] * d.x + m[9] * d.y + m[10] * d.z};
    }
};

/// Camera-to-world pose placing the eye at `eye`, looking at `target`,
/// camera convention: x right, y up, looks down -z.
inline Mat4 look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    Vec3 zc = (eye - target).normalized();
    Vec3 xc = up.cross(zc).normalized();
    Vec3 yc = zc.cross(xc);
    Mat4 p = Mat4::identity();
    p(0, 0) = xc.x; p(0, 1) = yc.x; p(0, 2) = zc.x; p(0, 3) = eye.x;
    p(1, 0) = xc.y; p(1, 1) = yc.y; p(1, 2) = zc.y; p(1, 3) = eye.y;
    p(2, 0) = xc.z; p(2, 1) = yc.z; p(2, 2) = zc.z; p(2, 3) = eye.z;
    return p;
}

}  // namespace spnf
