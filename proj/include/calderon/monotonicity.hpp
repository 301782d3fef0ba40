#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "calderon/nd_map.hpp"
#include "calderon/scan.hpp"

namespace calderon {

/// Generalized eigenvalues of the pencil (S, G), ascending.
inline Eigen::VectorXd pencil_eigenvalues(const Eigen::MatrixXd& S, const Eigen::MatrixXd& G) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (S + S.transpose()), G,
                                                                 Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw Error("generalized eigenvalue problem failed (is G positive definite?)");
    return es.eigenvalues();
}

/// Operator norm of L in the G-inner product.
inline double g_norm(const Eigen::MatrixXd& L, const Eigen::MatrixXd& G) {
    return pencil_eigenvalues(L, G).cwiseAbs().maxCoeff();
}

inline void check_provenance(const NDMatrix& a, const NDMatrix& b) {
    if (a.mesh_hash != b.mesh_hash || a.basis_hash != b.basis_hash)
        throw ProvenanceError("ND matrices come from different meshes or current bases");
    if (a.size() != b.size()) throw ProvenanceError("ND matrices have different sizes");
}

struct PsdResult {
    double lambda_min = 0.0;
    bool pass = false;
};

/// Loewner test L_a >= L_b: smallest generalized eigenvalue of
/// (L_a - L_b, G) against -tau * reference, where reference defaults to
/// |L_b|_G.
inline PsdResult psd_test(const NDMatrix& a, const NDMatrix& b, const Eigen::MatrixXd& G, double tau,
                          std::optional<double> reference = std::nullopt) {
    check_provenance(a, b);
    const double ref = reference ? *reference : g_norm(b.L, G);
    PsdResult r;
    r.lambda_min = pencil_eigenvalues(a.L - b.L, G)(0);
    r.pass = r.lambda_min >= -tau * ref;
    return r;
}

enum class Side { both, lower_only, upper_only };

inline std::string_view to_string(Side s) {
    switch (s) {
        case Side::both: return "both";
        case Side::lower_only: return "lower_only";
        case Side::upper_only: return "upper_only";
    }
    return "?";
}

inline Side parse_side(std::string_view s) {
    if (s == "both") return Side::both;
    if (s == "lower_only") return Side::lower_only;
    if (s == "upper_only") return Side::upper_only;
    throw ConfigError("unknown side '" + std::string(s) + "' (expected both, lower_only or upper_only)");
}

/// Outcome of Λ0(C) >= Λ(γ) >= Λ∞(C) for one test set. Sides that were not
/// evaluated carry NaN and count as passing.
struct MonotonicityVerdict {
    std::string test_id;
    double lambda_min_insulating = std::numeric_limits<double>::quiet_NaN();
    double lambda_min_conducting = std::numeric_limits<double>::quiet_NaN();
    bool pass_insulating = true;
    bool pass_conducting = true;
    bool pass_both() const { return pass_insulating && pass_conducting; }
};

/// Shared data for repeated theorem tests against one measurement.
struct TheoremContext {
    const Mesh& mesh;
    const CurrentBasis& basis;
    const NDMatrix& L_gamma;
    DiscreteField background;  ///< gamma0 on the mesh
    double reference = 0.0;    ///< |L(gamma)|_G
    double tau = 1e-4;
    ForwardOptions forward;

    TheoremContext(const Mesh& m, const CurrentBasis& b, const NDMatrix& L, const WeightSpec& gamma0, double t,
                   ForwardOptions opt = {})
        : mesh(m), basis(b), L_gamma(L), background(discretize_background(m, gamma0, {}, opt.threads)),
          reference(g_norm(L.L, b.G)), tau(t), forward(opt) {
        if (L.basis_hash != b.hash) throw ProvenanceError("measurement was taken in a different current basis");
    }
};

/// Runs the sides requested by `side`. With `stop_early`, the conducting
/// side is skipped once the insulating side has failed.
inline MonotonicityVerdict theorem_test(const TheoremContext& ctx, const TestInclusion& C, Side side,
                                        bool stop_early = false) {
    MonotonicityVerdict v;
    v.test_id = C.id;
    if (side != Side::upper_only) {
        const NDMatrix L0 = nd_extreme(ctx.mesh, C.polygons, ExtremeKind::insulating, ctx.background, ctx.basis,
                                       ctx.forward);
        const auto r = psd_test(L0, ctx.L_gamma, ctx.basis.G, ctx.tau, ctx.reference);
        v.lambda_min_insulating = r.lambda_min;
        v.pass_insulating = r.pass;
        if (stop_early && !r.pass) return v;
    }
    if (side != Side::lower_only) {
        const NDMatrix Linf = nd_extreme(ctx.mesh, C.polygons, ExtremeKind::conducting, ctx.background, ctx.basis,
                                         ctx.forward);
        const auto r = psd_test(ctx.L_gamma, Linf, ctx.basis.G, ctx.tau, ctx.reference);
        v.lambda_min_conducting = r.lambda_min;
        v.pass_conducting = r.pass;
    }
    return v;
}

inline MonotonicityVerdict theorem_test(const NDMatrix& L_gamma, const TestInclusion& C, const Mesh& mesh,
                                        const WeightSpec& gamma0, const CurrentBasis& basis, double tau, Side side,
                                        const ForwardOptions& opt = {}) {
    return theorem_test(TheoremContext(mesh, basis, L_gamma, gamma0, tau, opt), C, side);
}

struct ChainLink {
    std::string name;
    PsdResult result;
};

/// Links of Λ0(C) >= Λ(γ_L) >= Λ(γ) >= Λ(γ_U) >= Λ∞(C), each tested against
/// -tau * |Λ(γ)|_G.
struct ChainReport {
    std::array<ChainLink, 4> links;
    double reference = 0.0;
    bool all_pass() const {
        for (const auto& l : links)
            if (!l.result.pass) return false;
        return true;
    }
};

inline ChainReport bracketing_chain(const NDMatrix& L_gamma, const NDMatrix& L_gammaL, const NDMatrix& L_gammaU,
                                    const NDMatrix& L0C, const NDMatrix& LinfC, const Eigen::MatrixXd& G,
                                    double tau) {
    for (const NDMatrix* m : {&L_gammaL, &L_gammaU, &L0C, &LinfC}) check_provenance(L_gamma, *m);
    ChainReport r;
    r.reference = g_norm(L_gamma.L, G);
    r.links[0] = {"L0(C) >= L(gamma_L)", psd_test(L0C, L_gammaL, G, tau, r.reference)};
    r.links[1] = {"L(gamma_L) >= L(gamma)", psd_test(L_gammaL, L_gamma, G, tau, r.reference)};
    r.links[2] = {"L(gamma) >= L(gamma_U)", psd_test(L_gamma, L_gammaU, G, tau, r.reference)};
    r.links[3] = {"L(gamma_U) >= Linf(C)", psd_test(L_gammaU, LinfC, G, tau, r.reference)};
    return r;
}

/// Verdict log line: `test_id lambda_min_ins lambda_min_cond pass_ins pass_cond`.
inline void write_verdict(std::ostream& os, const MonotonicityVerdict& v) {
    auto num = [](double x) {
        if (std::isnan(x)) return std::string("nan");
        std::ostringstream s;
        s.precision(10);
        s << x;
        return s.str();
    };
    os << v.test_id << ' ' << num(v.lambda_min_insulating) << ' ' << num(v.lambda_min_conducting) << ' '
       << (v.pass_insulating ? 1 : 0) << ' ' << (v.pass_conducting ? 1 : 0) << '\n';
}

inline void write_chain(std::ostream& os, const ChainReport& r, double tau) {
    std::ostringstream buf;
    buf.precision(10);
    buf << "reference_norm " << r.reference << "\ntau " << tau << '\n';
    for (const auto& l : r.links)
        buf << '"' << l.name << "\" " << l.result.lambda_min << ' ' << (l.result.pass ? "pass" : "fail") << '\n';
    buf << "all_pass " << (r.all_pass() ? 1 : 0) << '\n';
    os << buf.str();
}

}  // namespace calderon
