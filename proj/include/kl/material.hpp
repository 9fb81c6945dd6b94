#pragma once

// Isotropic membrane/bending elasticity in symmetric 3-component storage.
//
// Storage convention (the only place it is defined): a symmetric 2x2 tensor t
// is packed in Mandel form m = (t11, t22, sqrt(2) t12). With that packing the
// full double contraction t:s equals m_t . m_s, a fourth-order tensor with
// minor and major symmetries becomes a symmetric 3x3 matrix C with
// C(I,J) = H_{IJ} * f_I * f_J, f = (1, 1, sqrt(2)), and tensor inversion on
// symmetric tensors is plain 3x3 matrix inversion.

#include <Eigen/Dense>

namespace kl {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kSqrt2 = 1.4142135623730950488;

inline Vec3 to_mandel(const Mat2& t) { return {t(0, 0), t(1, 1), kSqrt2 * 0.5 * (t(0, 1) + t(1, 0))}; }
inline Mat2 from_mandel(const Vec3& m) {
    Mat2 t;
    t << m[0], m[2] / kSqrt2, m[2] / kSqrt2, m[1];
    return t;
}

// H^{abcd} = (E h / (2 (1 + nu))) (a^{ac} a^{bd} + a^{ad} a^{bc} + (2 nu / (1 - nu)) a^{ab} a^{cd})
// for an inverse metric `ainv`; the flat plate uses the identity.
double isotropic_tensor(double E, double nu, double h, const Mat2& ainv, int a, int b, int c, int d);
Mat3 isotropic_mandel(double E, double nu, double h, const Mat2& ainv);
// Recovers a tensor component from a Mandel matrix.
double tensor_component(const Mat3& mandel, int a, int b, int c, int d);

struct PlateMaterial {
    double E = 1.0;
    double nu = 0.0;
    double h = 1.0;
    Mat3 membrane;          // H
    Mat3 bending;           // (h^2 / 12) H
    Mat3 membrane_inverse;  // H-bar
    Mat3 bending_inverse;   // h-bar

    double membrane_tensor(int a, int b, int c, int d) const { return tensor_component(membrane, a, b, c, d); }
    double bending_tensor(int a, int b, int c, int d) const { return tensor_component(bending, a, b, c, d); }
};

void check_material_parameters(double E, double nu, double h, const char* module);
PlateMaterial build_material(double E, double nu, double h);

// Smallest eigenvalue of a symmetric 3x3 matrix.
double min_eigenvalue(const Mat3& m);

}  // namespace kl
