#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "calderon/coefficient.hpp"
#include "calderon/fem.hpp"
#include "calderon/mesh.hpp"
#include "calderon/scan.hpp"

namespace calderon {

/// Gauss nodes on the mesh edges of Γ, with the values of the two edge shape
/// functions at each node.
struct GammaQuadrature {
    struct Node {
        int a, b;       ///< mesh vertices of the edge
        double phi_a;   ///< shape function of a at the node (phi_b = 1 - phi_a)
        double t;       ///< position along Γ
        double weight;
    };
    std::vector<Node> nodes;
    int edges = 0;
};

inline GammaQuadrature gamma_quadrature(const Domain& domain, const Mesh& mesh, int points_per_edge = 4) {
    GammaQuadrature q;
    const Rule1D r = gauss_legendre(points_per_edge);
    const double P = domain.perimeter();
    for (const auto& e : mesh.boundary_edges) {
        if (!e.on_gamma) continue;
        const Point pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
        const auto sa = domain.arclength_of(pa, 1e-7), sb = domain.arclength_of(pb, 1e-7);
        if (!sa || !sb) throw Error("boundary edge vertex is not on the domain boundary");
        double ta = domain.gamma_param(*sa), tb = domain.gamma_param(*sb);
        if (domain.gamma_is_full()) {
            if (tb - ta > 0.5 * P) tb -= P;
            if (ta - tb > 0.5 * P) tb += P;
        } else {
            const double cut = 0.5 * (domain.gamma_length + P);
            if (ta > cut) ta -= P;
            if (tb > cut) tb -= P;
        }
        const double len = distance(pa, pb);
        for (std::size_t i = 0; i < r.x.size(); ++i)
            q.nodes.push_back({e.a, e.b, 1.0 - r.x[i], ta + r.x[i] * (tb - ta), r.w[i] * len});
        ++q.edges;
    }
    if (q.nodes.empty()) throw ConfigError("the mesh has no edges on the measurement arc");
    return q;
}

/// Trigonometric currents on the arclength of Γ: f_k = sin or cos of
/// frequency k/2 + 1 (sine first), each shifted to zero discrete Γ-mean.
struct CurrentBasis {
    int m = 0;
    double gamma_length = 0.0;
    GammaQuadrature quadrature;
    std::vector<double> mean;
    Eigen::MatrixXd G;  ///< L2(Γ) Gram matrix
    std::uint64_t hash = 0;
    std::uint64_t mesh_hash = 0;
    std::vector<std::string> warnings;

    static int frequency(int k) { return k / 2 + 1; }

    double raw(int k, double t) const {
        const double arg = 2.0 * std::numbers::pi * frequency(k) * t / gamma_length;
        return k % 2 == 0 ? std::sin(arg) : std::cos(arg);
    }
    double operator()(int k, double t) const { return raw(k, t) - mean[k]; }

    /// <f_k, 1>_Γ under the boundary quadrature.
    double integral(int k) const {
        double s = 0.0;
        for (const auto& n : quadrature.nodes) s += n.weight * (*this)(k, n.t);
        return s;
    }
};

inline CurrentBasis build_basis(const Domain& domain, const Mesh& mesh, int m) {
    if (m < 1) throw ConfigError("basis size m must be at least 1");
    CurrentBasis b;
    b.m = m;
    b.gamma_length = domain.gamma_length;
    b.quadrature = gamma_quadrature(domain, mesh);
    b.mesh_hash = mesh.hash();
    b.mean.assign(m, 0.0);
    for (int k = 0; k < m; ++k) {
        double s = 0.0;
        for (const auto& n : b.quadrature.nodes) s += n.weight * b.raw(k, n.t);
        b.mean[k] = s / domain.gamma_length;
    }
    b.G = Eigen::MatrixXd::Zero(m, m);
    for (const auto& n : b.quadrature.nodes)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k <= j; ++k) b.G(j, k) += n.weight * b(j, n.t) * b(k, n.t);
    b.G = b.G.selfadjointView<Eigen::Lower>();
    const int top = CurrentBasis::frequency(m - 1);
    if (b.quadrature.edges < 8 * top)
        b.warnings.push_back("basis frequency " + std::to_string(top) + " exceeds the boundary resolution: " +
                             std::to_string(b.quadrature.edges) + " edges on the arc, at least " +
                             std::to_string(8 * top) + " required");
    Fnv1a h;
    h.value(m);
    h.value(domain.gamma_start);
    h.value(domain.gamma_length);
    h.value(b.mesh_hash);
    b.hash = h.digest();
    return b;
}

/// Local ND map in a current basis: L_jk = <Λ f_k, f_j>_Γ.
struct NDMatrix {
    Eigen::MatrixXd L;
    double asymmetry = 0.0;  ///< |L - L^T|_F / |L|_F before symmetrization
    std::uint64_t field_hash = 0;
    std::uint64_t mesh_hash = 0;
    std::uint64_t basis_hash = 0;

    int size() const { return static_cast<int>(L.rows()); }
};

/// Load vectors of all basis currents, one column per current.
inline Eigen::MatrixXd basis_loads(const CurrentBasis& basis, const DofMap& dofs) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dofs.n, basis.m);
    for (const auto& n : basis.quadrature.nodes) {
        const int da = dofs.dof[n.a], db = dofs.dof[n.b];
        for (int k = 0; k < basis.m; ++k) {
            const double v = n.weight * basis(k, n.t);
            B(da, k) += v * n.phi_a;
            B(db, k) += v * (1.0 - n.phi_a);
        }
    }
    return B;
}

/// Everything computed for one coefficient: the system, loads, potentials
/// and the resulting ND matrix.
struct ForwardSolution {
    StiffnessSystem system;
    Eigen::MatrixXd loads;
    Eigen::MatrixXd potentials;
    NDMatrix nd;
};

struct ForwardOptions {
    SolverOptions solver;
    unsigned threads = default_thread_count();
    std::function<void(const ForwardSolution&)> inspect;  ///< called after every solve; may run concurrently
};

inline ForwardSolution forward_solve(const Mesh& mesh, const DiscreteField& field, const CurrentBasis& basis,
                                     const ForwardOptions& opt = {}) {
    if (basis.mesh_hash != field.mesh_hash) throw ProvenanceError("basis and coefficient belong to different meshes");
    ForwardSolution out;
    out.system = assemble(mesh, field, build_dof_map(mesh, field), opt.threads);
    out.loads = basis_loads(basis, out.system.dofs);
    const NeumannSolver solver(out.system, opt.solver);
    out.potentials.resize(out.system.size(), basis.m);
    parallel_for(basis.m, opt.threads, [&](std::size_t k) {
        try {
            out.potentials.col(k) = solver.solve(out.loads.col(k));
        } catch (const SolverError& e) {
            throw SolverError(std::string(e.what()) + " (basis current " + std::to_string(k) + ")", e.residual());
        }
    });
    Eigen::MatrixXd L = out.loads.transpose() * out.potentials;
    const double norm = L.norm();
    out.nd.asymmetry = norm > 0.0 ? (L - L.transpose()).norm() / norm : 0.0;
    out.nd.L = 0.5 * (L + L.transpose());
    out.nd.field_hash = field.field_hash;
    out.nd.mesh_hash = field.mesh_hash;
    out.nd.basis_hash = basis.hash;
    if (opt.inspect) opt.inspect(out);
    return out;
}

inline NDMatrix nd_matrix(const Mesh& mesh, const DiscreteField& field, const CurrentBasis& basis,
                          const ForwardOptions& opt = {}) {
    return forward_solve(mesh, field, basis, opt).nd;
}

inline NDMatrix nd_matrix(const Mesh& mesh, const CoefficientField& field, const CurrentBasis& basis,
                          const QuadratureSpec& q = {}, const ForwardOptions& opt = {}) {
    return nd_matrix(mesh, discretize(mesh, field, q, opt.threads), basis, opt);
}

enum class ExtremeKind { insulating, conducting };

/// Throws unless every triangle lies entirely inside or outside each polygon.
inline void check_resolves(const Mesh& mesh, const std::vector<Polygon>& test) {
    for (const auto& poly : test)
        for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
            const bool in = contains(poly, mesh.centroid(t), 0.0);
            for (auto p : mesh.corners(t)) {
                const auto loc = locate(poly, p, 1e-9);
                if ((in && loc == Containment::outside) || (!in && loc == Containment::inside))
                    throw ConfigError("mesh does not conform to the test polygon");
            }
        }
}

/// Λ0(C) or Λ∞(C): gamma0 outside C and 0 or inf inside. `background` is the
/// discretized gamma0 on this mesh. No polygons means C = ∅.
inline NDMatrix nd_extreme(const Mesh& mesh, const std::vector<Polygon>& test, ExtremeKind kind,
                           const DiscreteField& background, const CurrentBasis& basis, const ForwardOptions& opt = {}) {
    if (test.empty()) return nd_matrix(mesh, background, basis, opt);
    check_resolves(mesh, test);
    const auto cell = kind == ExtremeKind::insulating ? CellKind::zero : CellKind::infinite;
    return nd_matrix(mesh, with_extreme(mesh, background, test, cell), basis, opt);
}

inline NDMatrix nd_extreme(const Mesh& mesh, const TestInclusion& test, ExtremeKind kind, const WeightSpec& gamma0,
                           const CurrentBasis& basis, const ForwardOptions& opt = {}) {
    return nd_extreme(mesh, test.polygons, kind, discretize_background(mesh, gamma0, {}, opt.threads), basis, opt);
}

/// Symmetric additive perturbation with |E|_F = rel * |L|_F.
inline NDMatrix add_noise(const NDMatrix& nd, double rel, std::uint64_t seed) {
    NDMatrix out = nd;
    if (rel <= 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const int m = nd.size();
    Eigen::MatrixXd E(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) E(i, j) = E(j, i) = normal(rng);
    out.L += (rel * nd.L.norm() / E.norm()) * E;
    return out;
}

/// Text format: `m`, m rows of m entries, then
/// `provenance <field> <mesh> <basis>` and `asymmetry <value>`.
inline void write_nd(std::ostream& os, const NDMatrix& nd) {
    std::ostringstream buf;
    buf.precision(17);
    buf << nd.size() << '\n';
    for (int i = 0; i < nd.size(); ++i) {
        for (int j = 0; j < nd.size(); ++j) buf << (j ? " " : "") << nd.L(i, j);
        buf << '\n';
    }
    buf << "provenance " << nd.field_hash << ' ' << nd.mesh_hash << ' ' << nd.basis_hash << '\n';
    buf << "asymmetry " << nd.asymmetry << '\n';
    os << buf.str();
}

inline NDMatrix read_nd(std::istream& is) {
    NDMatrix nd;
    int m = 0;
    if (!(is >> m) || m < 1) throw Error("ND file: bad size");
    nd.L.resize(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (!(is >> nd.L(i, j))) throw Error("ND file: truncated matrix");
    std::string key;
    if (!(is >> key >> nd.field_hash >> nd.mesh_hash >> nd.basis_hash) || key != "provenance")
        throw Error("ND file: missing provenance line");
    if (!(is >> key >> nd.asymmetry) || key != "asymmetry") throw Error("ND file: missing asymmetry line");
    return nd;
}

}  // namespace calderon
