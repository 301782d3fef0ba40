#pragma once

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "calderon/nd_map.hpp"

namespace calderon {

/// ND eigenvalue of frequency n on the unit disk with Γ = ∂Ω, background
/// gamma0 and a concentric disk of radius rho and conductivity kappa
/// (kappa = 0 insulating, kappa = inf conducting).
///
/// Outside the inclusion u = (a r^n + b r^-n) cos(n theta); inside
/// u = c r^n cos(n theta) (or constant / no-flux in the extreme cases).
/// Continuity of u and of the flux at r = rho gives b = mu a rho^(2n) with
/// mu = (gamma0 - kappa) / (gamma0 + kappa). The Neumann condition
/// gamma0 du/dr = cos(n theta) at r = 1 gives gamma0 n (a - b) = 1, and the
/// eigenvalue is the boundary trace a + b:
///   lambda_n = (1 + mu rho^(2n)) / (gamma0 n (1 - mu rho^(2n))).
inline double disk_nd_eigenvalue(int n, double rho, double kappa, double gamma0 = 1.0) {
    if (n < 1) throw std::invalid_argument("frequency must be at least 1");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("inclusion radius must lie in [0, 1)");
    if (!(gamma0 > 0.0)) throw std::invalid_argument("gamma0 must be positive");
    if (!(kappa >= 0.0)) throw std::invalid_argument("kappa must be nonnegative");
    const double mu = std::isinf(kappa) ? -1.0 : (gamma0 - kappa) / (gamma0 + kappa);
    const double q = mu * std::pow(rho, 2 * n);
    return (1.0 + q) / (gamma0 * n * (1.0 - q));
}

inline constexpr std::size_t kBruteForceMaxVertices = 2000;

/// ND matrix through an independent path: dense stiffness matrix built from
/// barycentric gradients, a pinned unknown instead of the Γ-mean constraint,
/// dense factorization, and entries from the energy quadratic form
/// <Λ f_j, f_k> = int sigma grad u_j . grad u_k via polarization.
inline NDMatrix brute_force_nd(const Mesh& mesh, const DiscreteField& field, const CurrentBasis& basis) {
    if (mesh.num_vertices() > kBruteForceMaxVertices)
        throw ConfigError("brute_force_nd is limited to " + std::to_string(kBruteForceMaxVertices) + " vertices");
    const DofMap dofs = build_dof_map(mesh, field);
    const int n = dofs.n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        if (field.kind[t] != CellKind::finite) continue;
        const auto c = mesh.corners(t);
        Eigen::Matrix2d J;
        J << c[1].x - c[0].x, c[2].x - c[0].x, c[1].y - c[0].y, c[2].y - c[0].y;
        const Eigen::Matrix2d Jinv = J.inverse();
        Eigen::Matrix<double, 2, 3> grad;
        grad.col(1) = Jinv.row(0).transpose();
        grad.col(2) = Jinv.row(1).transpose();
        grad.col(0) = -grad.col(1) - grad.col(2);
        const Eigen::Matrix3d K = field.integral[t] * (grad.transpose() * grad);
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) A(dofs.dof[tri[i]], dofs.dof[tri[j]]) += K(i, j);
    }

    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, basis.m);
    for (const auto& node : basis.quadrature.nodes)
        for (int k = 0; k < basis.m; ++k) {
            const double f = node.weight * basis(k, node.t);
            B(dofs.dof[node.a], k) += f * node.phi_a;
            B(dofs.dof[node.b], k) += f * (1.0 - node.phi_a);
        }

    int pin = -1;
    for (const auto& e : mesh.boundary_edges)
        if (e.on_gamma && dofs.dof[e.a] >= 0) {
            pin = dofs.dof[e.a];
            break;
        }
    if (pin < 0) throw ConfigError("no unknown on the measurement arc");
    std::vector<int> keep;
    for (int i = 0; i < n; ++i)
        if (i != pin) keep.push_back(i);
    const int r = n - 1;
    Eigen::MatrixXd Ar(r, r);
    Eigen::MatrixXd Br(r, basis.m);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) Ar(i, j) = A(keep[i], keep[j]);
        Br.row(i) = B.row(keep[i]);
    }
    const Eigen::MatrixXd Ur = Ar.ldlt().solve(Br);
    Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, basis.m);
    for (int i = 0; i < r; ++i) U.row(keep[i]) = Ur.row(i);

    auto quad = [&](const Eigen::VectorXd& v) { return v.dot(A * v); };
    NDMatrix nd;
    nd.L.resize(basis.m, basis.m);
    std::vector<double> diag(basis.m);
    for (int k = 0; k < basis.m; ++k) diag[k] = quad(U.col(k));
    for (int j = 0; j < basis.m; ++j) {
        nd.L(j, j) = diag[j];
        for (int k = 0; k < j; ++k)
            nd.L(j, k) = nd.L(k, j) = 0.5 * (quad(U.col(j) + U.col(k)) - diag[j] - diag[k]);
    }
    nd.field_hash = field.field_hash;
    nd.mesh_hash = field.mesh_hash;
    nd.basis_hash = basis.hash;
    return nd;
}

}  // namespace calderon
