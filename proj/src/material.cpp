#include "kl/material.hpp"

#include "kl/grid.hpp"

#include <cmath>
#include <string>

namespace kl {

namespace {

constexpr int kPairA[3] = {0, 1, 0};
constexpr int kPairB[3] = {0, 1, 1};
constexpr double kFactor[3] = {1.0, 1.0, kSqrt2};

int mandel_index(int a, int b) { return a == b ? a : 2; }

}  // namespace

double isotropic_tensor(double E, double nu, double h, const Mat2& ainv, int a, int b, int c, int d) {
    const double mu = E * h / (2.0 * (1.0 + nu));
    return mu * (ainv(a, c) * ainv(b, d) + ainv(a, d) * ainv(b, c) + (2.0 * nu / (1.0 - nu)) * ainv(a, b) * ainv(c, d));
}

Mat3 isotropic_mandel(double E, double nu, double h, const Mat2& ainv) {
    Mat3 m;
    for (int I = 0; I < 3; ++I)
        for (int J = 0; J < 3; ++J)
            m(I, J) = kFactor[I] * kFactor[J] *
                      isotropic_tensor(E, nu, h, ainv, kPairA[I], kPairB[I], kPairA[J], kPairB[J]);
    return m;
}

double tensor_component(const Mat3& mandel, int a, int b, int c, int d) {
    const int I = mandel_index(a, b), J = mandel_index(c, d);
    return mandel(I, J) / (kFactor[I] * kFactor[J]);
}

double min_eigenvalue(const Mat3& m) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

void check_material_parameters(double E, double nu, double h, const char* module) {
    const std::string mod(module);
    if (!(E > 0.0) || !std::isfinite(E)) throw Error(mod + ".E", "Young's modulus must be positive");
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(mod + ".h", "thickness must be positive");
    if (!(nu > -1.0 && nu < 0.5))
        throw Error(mod + ".nu", "nu out of range (-1, 0.5): " + std::to_string(nu));
}

PlateMaterial build_material(double E, double nu, double h) {
    check_material_parameters(E, nu, h, "plate");
    PlateMaterial m;
    m.E = E;
    m.nu = nu;
    m.h = h;
    m.membrane = isotropic_mandel(E, nu, h, Mat2::Identity());
    m.bending = (h * h / 12.0) * m.membrane;
    if (!(min_eigenvalue(m.membrane) > 0.0)) throw Error("plate.material", "membrane tensor is not positive definite");
    Eigen::FullPivLU<Mat3> lu(m.membrane);
    if (!lu.isInvertible()) throw Error("plate.material", "singular Voigt matrix");
    m.membrane_inverse = lu.inverse();
    m.bending_inverse = m.bending.inverse();
    return m;
}

}  // namespace kl
