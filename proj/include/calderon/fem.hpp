#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "calderon/coefficient.hpp"
#include "calderon/mesh.hpp"

namespace calderon {

enum class DofStatus : std::uint8_t { free, removed, merged };

/// Vertex-to-unknown map. Vertices interior to insulating parts are
/// removed; the closure of each conducting component shares one unknown.
struct DofMap {
    std::vector<int> dof;  ///< per vertex, -1 when removed
    std::vector<DofStatus> status;
    std::vector<int> conductor_dof;  ///< unknown of the k-th conducting component
    int n = 0;

    int conductors() const { return static_cast<int>(conductor_dof.size()); }
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace detail

inline DofMap build_dof_map(const Mesh& mesh, const DiscreteField& field) {
    const std::size_t nv = mesh.num_vertices(), nt = mesh.num_triangles();
    if (field.kind.size() != nt) throw ConfigError("coefficient field does not match the mesh");
    std::vector<int> finite(nv, 0), zero(nv, 0), inf(nv, 0);
    for (std::size_t t = 0; t < nt; ++t)
        for (int v : mesh.triangles[t]) {
            if (field.kind[t] == CellKind::finite) ++finite[v];
            if (field.kind[t] == CellKind::zero) ++zero[v];
            if (field.kind[t] == CellKind::infinite) ++inf[v];
        }

    detail::UnionFind uf(nv);
    for (std::size_t t = 0; t < nt; ++t)
        if (field.kind[t] == CellKind::infinite) {
            const auto& tri = mesh.triangles[t];
            uf.unite(tri[0], tri[1]);
            uf.unite(tri[1], tri[2]);
        }
    const auto on_boundary = mesh.boundary_vertex_mask();
    for (std::size_t v = 0; v < nv; ++v) {
        if (!inf[v]) continue;
        if (on_boundary[v]) throw ConfigError("a conducting region touches the domain boundary");
        if (zero[v] && !field.conductor_meets_insulator) throw ConfigError("a conducting region touches an insulating region");
    }

    DofMap m;
    m.dof.assign(nv, -1);
    m.status.assign(nv, DofStatus::removed);
    std::vector<int> root_dof(nv, -1);
    for (std::size_t v = 0; v < nv; ++v) {
        if (inf[v]) {
            const int r = uf.find(static_cast<int>(v));
            if (root_dof[r] < 0) {
                root_dof[r] = m.n++;
                m.conductor_dof.push_back(root_dof[r]);
            }
            m.dof[v] = root_dof[r];
            m.status[v] = DofStatus::merged;
        } else if (finite[v]) {
            m.dof[v] = m.n++;
            m.status[v] = DofStatus::free;
        }
    }
    if (m.n == 0) throw ConfigError("no free unknowns remain");

    detail::UnionFind graph(m.n);
    for (std::size_t t = 0; t < nt; ++t) {
        if (field.kind[t] != CellKind::finite) continue;
        const auto& tri = mesh.triangles[t];
        graph.unite(m.dof[tri[0]], m.dof[tri[1]]);
        graph.unite(m.dof[tri[1]], m.dof[tri[2]]);
    }
    for (int i = 1; i < m.n; ++i)
        if (graph.find(i) != graph.find(0))
            throw ConfigError("the free unknowns are not connected (an insulating region encloses part of the domain)");
    bool gamma = false;
    for (const auto& e : mesh.boundary_edges)
        if (e.on_gamma && m.dof[e.a] >= 0 && m.dof[e.b] >= 0) gamma = true;
    if (!gamma) throw ConfigError("no free unknown lies on the measurement arc");
    return m;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness matrix on the unknowns of a DofMap together with the boundary
/// functional c_i = int_Gamma phi_i ds used for grounding.
struct StiffnessSystem {
    SparseMatrix A;
    Eigen::VectorXd gamma_mass;
    DofMap dofs;
    std::uint64_t mesh_hash = 0;
    std::uint64_t field_hash = 0;

    int size() const { return dofs.n; }
};

namespace detail {

/// Gradient inner products of the P1 shape functions on a triangle, divided
/// by the triangle area: K_ij = (e_i . e_j) / (4 |T|^2) with e_i the edge
/// opposite vertex i.
inline std::array<std::array<double, 3>, 3> p1_gradient_products(const std::array<Point, 3>& c) {
    const double area = 0.5 * orient(c[0], c[1], c[2]);
    std::array<Point, 3> e;
    for (int i = 0; i < 3; ++i) e[i] = c[(i + 2) % 3] - c[(i + 1) % 3];
    std::array<std::array<double, 3>, 3> k{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) k[i][j] = dot(e[i], e[j]) / (4.0 * area * area);
    return k;
}

}  // namespace detail

/// Element matrix for sigma integrating to `integral` over the triangle.
inline std::array<std::array<double, 3>, 3> element_matrix(const std::array<Point, 3>& c, double integral) {
    auto k = detail::p1_gradient_products(c);
    for (auto& row : k)
        for (double& x : row) x *= integral;
    return k;
}

inline StiffnessSystem assemble(const Mesh& mesh, const DiscreteField& field, const DofMap& dofs,
                                unsigned threads = default_thread_count()) {
    const std::size_t nt = mesh.num_triangles();
    std::vector<std::array<double, 9>> local(nt);
    parallel_for(nt, threads, [&](std::size_t t) {
        if (field.kind[t] != CellKind::finite) return;
        const auto k = element_matrix(mesh.corners(t), field.integral[t]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) local[t][3 * i + j] = k[i][j];
    });
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * nt);
    for (std::size_t t = 0; t < nt; ++t) {
        if (field.kind[t] != CellKind::finite) continue;
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double v = local[t][3 * i + j];
                if (!std::isfinite(v)) throw Error("nonfinite element integral in triangle " + std::to_string(t));
                trip.emplace_back(dofs.dof[tri[i]], dofs.dof[tri[j]], v);
            }
    }
    StiffnessSystem s;
    s.dofs = dofs;
    s.A.resize(dofs.n, dofs.n);
    s.A.setFromTriplets(trip.begin(), trip.end());
    s.gamma_mass = Eigen::VectorXd::Zero(dofs.n);
    for (const auto& e : mesh.boundary_edges) {
        if (!e.on_gamma) continue;
        const double len = distance(mesh.vertices[e.a], mesh.vertices[e.b]);
        s.gamma_mass[dofs.dof[e.a]] += 0.5 * len;
        s.gamma_mass[dofs.dof[e.b]] += 0.5 * len;
    }
    s.mesh_hash = mesh.hash();
    s.field_hash = field.field_hash;
    return s;
}

struct SolverOptions {
    double rtol = 1e-10;
    bool allow_iterative = true;
};

/// Factorization of the grounded operator A + alpha c c^T. For a mean-free
/// load b (1^T b = 0) its solution u satisfies A u = b and c^T u = 0, i.e.
/// it is the Lagrange-multiplier solution with a zero multiplier.
class NeumannSolver {
public:
    NeumannSolver(const StiffnessSystem& sys, SolverOptions opt = {}) : sys_(&sys), opt_(opt) {
        const auto& c = sys.gamma_mass;
        const double mean_diag = sys.A.diagonal().cwiseAbs().mean();
        const double c2 = c.squaredNorm();
        if (!(c2 > 0.0)) throw ConfigError("measurement arc carries no unknowns");
        alpha_ = (mean_diag > 0.0 ? mean_diag : 1.0) / c2;
        std::vector<Eigen::Triplet<double>> trip;
        for (int k = 0; k < sys.A.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(sys.A, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
        std::vector<int> support;
        for (int i = 0; i < c.size(); ++i)
            if (c[i] != 0.0) support.push_back(i);
        for (int i : support)
            for (int j : support) trip.emplace_back(i, j, alpha_ * c[i] * c[j]);
        M_.resize(sys.size(), sys.size());
        M_.setFromTriplets(trip.begin(), trip.end());
        ldlt_.compute(M_);
        direct_ok_ = ldlt_.info() == Eigen::Success;
    }

    /// Gamma-mean-free solution of A u = b. Throws SolverError when the
    /// residual exceeds rtol * |b| after the iterative fallback.
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        const double bnorm = b.norm();
        if (bnorm == 0.0) return Eigen::VectorXd::Zero(b.size());
        if (std::abs(b.sum()) > 1e-12 * b.cwiseAbs().sum())
            throw ConfigError("Neumann load is not mean-free on the measurement arc");
        Eigen::VectorXd u;
        double res = std::numeric_limits<double>::infinity();
        if (direct_ok_) {
            u = ldlt_.solve(b);
            res = (M_ * u - b).norm() / bnorm;
            if (res > opt_.rtol) {  // one step of iterative refinement
                u += ldlt_.solve(b - M_ * u);
                res = (M_ * u - b).norm() / bnorm;
            }
        }
        if (!(res <= opt_.rtol) && opt_.allow_iterative) {
            Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(M_);
            cg.setTolerance(opt_.rtol * 0.1);
            cg.setMaxIterations(20 * static_cast<int>(b.size()));
            if (direct_ok_)
                u = cg.solveWithGuess(b, u);
            else
                u = cg.solve(b);
            res = (M_ * u - b).norm() / bnorm;
        }
        if (!(res <= opt_.rtol)) throw SolverError("Neumann solve did not converge", res);
        return u;
    }

    const StiffnessSystem& system() const { return *sys_; }

private:
    const StiffnessSystem* sys_;
    SolverOptions opt_;
    double alpha_ = 1.0;
    SparseMatrix M_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    bool direct_ok_ = false;
};

/// Discrete load b_i = <f, phi_i>_Gamma with the mean-free check.
struct NeumannLoad {
    Eigen::VectorXd b;
};

inline Eigen::VectorXd solve_neumann(const NeumannSolver& solver, const NeumannLoad& load) {
    return solver.solve(load.b);
}

/// int sigma |grad u|^2 dx.
inline double dirichlet_energy(const StiffnessSystem& sys, const Eigen::VectorXd& u) {
    if (u.size() != sys.size()) throw std::invalid_argument("potential size does not match the system");
    return u.dot(sys.A * u);
}

/// J_sigma(u) = int sigma |grad u|^2 dx - 2 <f, u|_Gamma>.
inline double energy(const StiffnessSystem& sys, const Eigen::VectorXd& u, const NeumannLoad& load) {
    if (u.size() != sys.size() || load.b.size() != sys.size())
        throw std::invalid_argument("energy: dimension mismatch");
    return dirichlet_energy(sys, u) - 2.0 * load.b.dot(u);
}

/// Per-vertex values of a potential; NaN on removed vertices.
inline std::vector<double> expand_to_vertices(const DofMap& dofs, const Eigen::VectorXd& u) {
    std::vector<double> out(dofs.dof.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t v = 0; v < dofs.dof.size(); ++v)
        if (dofs.dof[v] >= 0) out[v] = u[dofs.dof[v]];
    return out;
}

}  // namespace calderon
