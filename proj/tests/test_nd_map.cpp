#include <gtest/gtest.h>

#include <sstream>

#include "phantoms.hpp"

using namespace calderon;
using calderon::testing::make_field;

namespace {

struct Disk {
    Domain domain = calderon::testing::unit_disk();
    Mesh mesh;
    CurrentBasis basis;
    Disk(double h, int m, const RegionSet& regions = {}) {
        mesh = triangulate(domain, regions, h);
        basis = build_basis(domain, mesh, m);
    }
};

/// Generalized eigenvalues (L, G), descending.
Eigen::VectorXd nd_eigenvalues(const NDMatrix& nd, const CurrentBasis& b) {
    Eigen::VectorXd e = pencil_eigenvalues(nd.L, b.G);
    return e.reverse();
}

}  // namespace

TEST(Basis, FullCircleTwoFunctions) {
    const Disk s(0.1, 2);
    // sin then cos of frequency 1, already mean-free.
    EXPECT_NEAR(s.basis.mean[0], 0.0, 1e-12);
    EXPECT_NEAR(s.basis.mean[1], 0.0, 1e-12);
    const double P = s.domain.perimeter();
    EXPECT_NEAR(s.basis(0, P / 4), 1.0, 1e-12);
    EXPECT_NEAR(s.basis(1, 0.0), 1.0, 1e-12);
}

TEST(Basis, GramIsPiOnTheDiagonal) {
    const Disk s(0.1, 8);
    const double P = s.domain.perimeter();
    // On the polygon the Gram matrix is (P / 2) I.
    EXPECT_NEAR((s.basis.G - 0.5 * P * Eigen::MatrixXd::Identity(8, 8)).norm(), 0.0, 1e-10);
    EXPECT_NEAR(0.5 * P, std::numbers::pi, 1e-3);
}

TEST(Basis, HalfCircleMeanProjected) {
    const Domain d = calderon::testing::unit_disk(std::numbers::pi);
    const Mesh m = triangulate(d, {}, 0.1);
    const auto b = build_basis(d, m, 3);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(b.integral(k), 0.0, 1e-12);
    // sin of one period over the arc is already mean-free; cos is too.
    EXPECT_NEAR(b.mean[0], 0.0, 1e-12);
    EXPECT_NEAR(b.mean[1], 0.0, 1e-12);
    EXPECT_TRUE(Eigen::LLT<Eigen::MatrixXd>(b.G).info() == Eigen::Success);
}

TEST(Basis, WarnsWhenFrequencyOutrunsBoundary) {
    const Domain d = build_domain(DomainShape::disk, {0.0, 2.0 * std::numbers::pi}, 32);
    const Mesh m = triangulate(d, {}, 0.3);
    EXPECT_FALSE(build_basis(d, m, 16).warnings.empty());
    EXPECT_TRUE(build_basis(d, m, 2).warnings.empty());
}

TEST(NdMatrix, HomogeneousDiskOracle) {
    const Disk s(0.05, 8);
    const auto nd = nd_matrix(s.mesh, constant_field(1.0), s.basis);
    EXPECT_LT(nd.asymmetry, 1e-7);
    // <Λ cos, cos> = π * 1 for frequency 1.
    EXPECT_NEAR(nd.L(1, 1), std::numbers::pi, 0.02 * std::numbers::pi);
    for (int k = 0; k < 8; ++k) {
        const int n = CurrentBasis::frequency(k);
        EXPECT_NEAR(nd.L(k, k) / s.basis.G(k, k), 1.0 / n, 0.02 / n) << "k=" << k;
    }
}

TEST(NdMatrix, ScalesInverselyWithConstantCoefficient) {
    const Disk s(0.1, 6);
    const auto l1 = nd_matrix(s.mesh, constant_field(1.0), s.basis);
    const auto l3 = nd_matrix(s.mesh, constant_field(3.0), s.basis);
    EXPECT_NEAR((l3.L - l1.L / 3.0).norm(), 0.0, 1e-10 * l1.L.norm());
}

TEST(NdMatrix, QuadraticFormEqualsEnergy) {
    const Disk s(0.1, 6);
    const auto f = constant_field(1.0);
    const auto fw = forward_solve(s.mesh, discretize(s.mesh, f), s.basis);
    Eigen::VectorXd c(6);
    c << 0.3, -1.0, 0.2, 0.7, -0.4, 0.1;
    const Eigen::VectorXd u = fw.potentials * c;
    const double e = dirichlet_energy(fw.system, u);
    EXPECT_NEAR(c.dot(fw.nd.L * c), e, 1e-8 * e);
}

TEST(NdExtreme, EmptySetGivesBackground) {
    const Disk s(0.1, 4);
    const auto bg = discretize_background(s.mesh, WeightSpec::constant(1.0));
    const auto L = nd_matrix(s.mesh, bg, s.basis);
    for (auto kind : {ExtremeKind::insulating, ExtremeKind::conducting})
        EXPECT_EQ((nd_extreme(s.mesh, std::vector<Polygon>{}, kind, bg, s.basis).L - L.L).norm(), 0.0);
}

TEST(NdExtreme, ConcentricDiskOracle) {
    auto f = make_field({{"c", RegionLabel::DFplus, make_disk({0, 0}, 0.5, 96), WeightSpec::constant(2.0)}});
    const Disk s(0.04, 8, f.regions);
    const auto bg = discretize_background(s.mesh, WeightSpec::constant(1.0));
    const std::vector<Polygon> C{f.regions.regions[0].polygon};
    const auto e0 = nd_eigenvalues(nd_extreme(s.mesh, C, ExtremeKind::insulating, bg, s.basis), s.basis);
    const auto ei = nd_eigenvalues(nd_extreme(s.mesh, C, ExtremeKind::conducting, bg, s.basis), s.basis);
    EXPECT_NEAR(e0[0], 5.0 / 3.0, 0.03 * 5.0 / 3.0);
    EXPECT_NEAR(ei[0], 3.0 / 5.0, 0.03 * 3.0 / 5.0);
    // Finite inclusion with kappa = 2 sits between the extremes.
    const auto ef = nd_eigenvalues(nd_matrix(s.mesh, f, s.basis), s.basis);
    EXPECT_NEAR(ef[0], disk_nd_eigenvalue(1, 0.5, 2.0), 0.02);
    EXPECT_LT(ef[0], e0[0]);
    EXPECT_GT(ef[0], ei[0]);
}

TEST(NdExtreme, RejectsUnresolvedTestSet) {
    const Disk s(0.1, 4);
    const auto bg = discretize_background(s.mesh, WeightSpec::constant(1.0));
    EXPECT_THROW(nd_extreme(s.mesh, {make_disk({0.01, 0.02}, 0.33, 7)}, ExtremeKind::insulating, bg, s.basis),
                 ConfigError);
}

TEST(NdMatrix, ProvenanceMismatchThrows) {
    const Disk a(0.2, 4), b(0.15, 4);
    EXPECT_THROW(nd_matrix(a.mesh, discretize(a.mesh, constant_field(1.0)), b.basis), ProvenanceError);
}

TEST(NdFormat, RoundTripAndNoise) {
    const Disk s(0.2, 4);
    const auto nd = nd_matrix(s.mesh, constant_field(1.0), s.basis);
    std::stringstream io;
    write_nd(io, nd);
    const auto back = read_nd(io);
    EXPECT_EQ(back.L, nd.L);
    EXPECT_EQ(back.basis_hash, nd.basis_hash);
    const auto noisy = add_noise(nd, 1e-3, 5);
    EXPECT_NEAR((noisy.L - nd.L).norm(), 1e-3 * nd.L.norm(), 1e-12);
    EXPECT_EQ((noisy.L - noisy.L.transpose()).norm(), 0.0);
    EXPECT_EQ(add_noise(nd, 1e-3, 5).L, noisy.L);
}

TEST(NdMatrix, CoefficientMonotonicity) {
    const auto d = calderon::testing::unit_disk();
    const auto lo = make_field({{"a", RegionLabel::DFminus, make_disk({0.2, 0}, 0.25), WeightSpec::constant(0.5)}});
    auto hi = lo;
    hi.region_weights[0] = WeightSpec::constant(0.9);
    const Mesh m = triangulate(d, lo.regions, 0.1);
    const auto b = build_basis(d, m, 8);
    const auto L1 = nd_matrix(m, lo, b), L2 = nd_matrix(m, hi, b);
    EXPECT_GE(pencil_eigenvalues(L1.L - L2.L, b.G)(0), -1e-10 * g_norm(L1.L, b.G));
}
