#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "calderon/monotonicity.hpp"
#include "calderon/scan.hpp"

namespace calderon {

enum class CellState : std::uint8_t { outside, inside };

enum class ScanMode { peel, channel };

inline ScanMode parse_scan_mode(std::string_view s) {
    if (s == "peel") return ScanMode::peel;
    if (s == "channel") return ScanMode::channel;
    throw ConfigError("unknown scan mode '" + std::string(s) + "' (expected peel or channel)");
}

struct ReconstructionOptions {
    int grid_n = 8;
    double tau = 1e-4;
    Side side = Side::both;
    unsigned threads = default_thread_count();
    bool fill = true;
    ScanMode mode = ScanMode::peel;
    std::function<void(const ForwardSolution&)> inspect;  ///< passed to every forward solve
};

struct ReconstructionResult {
    ScanGrid grid;
    std::vector<CellState> cells;        ///< after the fill step
    std::vector<char> indeterminate;     ///< no admissible test set excluded the cell
    std::vector<char> filled;            ///< switched to inside by the fill step
    std::vector<MonotonicityVerdict> witness;  ///< passing verdict, or the last one tried
    std::vector<MonotonicityVerdict> log;      ///< every test run, in cell order
    double jaccard = std::numeric_limits<double>::quiet_NaN();

    CellState at(int r, int c) const { return cells[grid.index(r, c)]; }
    int count_inside() const {
        int n = 0;
        for (auto s : cells) n += s == CellState::inside;
        return n;
    }
};

/// Marks every outside cell that is not 4-connected to the grid border
/// through outside cells as inside. Returns the switched cells.
inline std::vector<char> fill_enclosed(const ScanGrid& g, std::vector<CellState>& cells) {
    std::vector<char> reach(g.size(), 0);
    std::vector<int> stack;
    for (int r = 0; r < g.n; ++r)
        for (int c = 0; c < g.n; ++c)
            if ((r == 0 || c == 0 || r == g.n - 1 || c == g.n - 1) && cells[g.index(r, c)] == CellState::outside) {
                reach[g.index(r, c)] = 1;
                stack.push_back(g.index(r, c));
            }
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int r = i / g.n, c = i % g.n;
        const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
        for (auto [rr, cc] : nb) {
            if (rr < 0 || cc < 0 || rr >= g.n || cc >= g.n) continue;
            const int j = g.index(rr, cc);
            if (!reach[j] && cells[j] == CellState::outside) {
                reach[j] = 1;
                stack.push_back(j);
            }
        }
    }
    std::vector<char> switched(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (cells[i] == CellState::outside && !reach[i]) {
            cells[i] = CellState::inside;
            switched[i] = 1;
        }
    return switched;
}

namespace detail {

inline void channel_scan(const TheoremContext& ctx, const ReconstructionOptions& opt, ReconstructionResult& res,
                         std::vector<CellState>& cells, std::vector<char>& tested,
                         std::vector<std::vector<MonotonicityVerdict>>& logs) {
    const auto& g = res.grid;
    parallel_for(g.size(), opt.threads, [&](std::size_t i) {
        const int r = static_cast<int>(i) / g.n, c = static_cast<int>(i) % g.n;
        for (auto d : kScanDirections) {
            const auto C = cell_complement(g, r, c, d);
            if (!C) continue;
            tested[i] = 1;
            const auto v = theorem_test(ctx, *C, opt.side, true);
            logs[i].push_back(v);
            res.witness[i] = v;
            if (v.pass_both()) {
                cells[i] = CellState::outside;
                break;
            }
        }
    });
}

inline void peel_scan(const TheoremContext& ctx, const ReconstructionOptions& opt, ReconstructionResult& res,
                      std::vector<CellState>& cells, std::vector<char>& tested,
                      std::vector<std::vector<MonotonicityVerdict>>& logs) {
    const auto& g = res.grid;
    std::vector<char> mask(g.size(), 1);
    const auto full = full_grid(g);
    const auto v0 = theorem_test(ctx, full, opt.side, true);
    logs[0].push_back(v0);
    if (!v0.pass_both()) return;

    auto without = [&](const std::vector<char>& m, const std::vector<int>& cut) {
        auto out = m;
        for (int i : cut) out[i] = 0;
        return out;
    };
    auto id_of = [&](int round, const std::vector<int>& cut) {
        std::string id = "peel" + std::to_string(round);
        for (int i : cut) id += "_" + std::to_string(i / g.n) + "." + std::to_string(i % g.n);
        return id;
    };
    for (int round = 0;; ++round) {
        std::vector<int> candidates;
        for (int r = 0; r < g.n; ++r)
            for (int c = 0; c < g.n; ++c) {
                const int i = g.index(r, c);
                if (!mask[i]) continue;
                const bool exposed = r == 0 || c == 0 || r == g.n - 1 || c == g.n - 1 || !mask[g.index(r - 1, c)] ||
                                     !mask[g.index(r + 1, c)] || !mask[g.index(r, c - 1)] ||
                                     !mask[g.index(r, c + 1)];
                if (exposed) candidates.push_back(i);
            }
        std::vector<std::optional<MonotonicityVerdict>> verdicts(candidates.size());
        parallel_for(candidates.size(), opt.threads, [&](std::size_t k) {
            const int i = candidates[k];
            const auto C = mask_inclusion(g, without(mask, {i}), id_of(round, {i}));
            if (!C) return;
            tested[i] = 1;
            verdicts[k] = theorem_test(ctx, *C, opt.side, true);
        });
        std::vector<int> passing;
        std::optional<MonotonicityVerdict> single;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (!verdicts[k]) continue;
            logs[candidates[k]].push_back(*verdicts[k]);
            res.witness[candidates[k]] = *verdicts[k];
            if (verdicts[k]->pass_both()) {
                passing.push_back(candidates[k]);
                single = verdicts[k];
            }
        }
        if (passing.empty()) break;
        // the layer of all passing probes is removed only if it passes as a whole
        MonotonicityVerdict v;
        if (passing.size() == 1) {
            v = *single;
        } else {
            const auto C = mask_inclusion(g, without(mask, passing), id_of(round, passing));
            if (!C) break;
            v = theorem_test(ctx, *C, opt.side, true);
            logs[passing.front()].push_back(v);
        }
        for (int i : passing) res.witness[i] = v;
        if (!v.pass_both()) break;
        mask = without(mask, passing);
    }
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!mask[i]) cells[i] = CellState::outside;
}

}  // namespace detail

/// Cell scan: cell p is outside iff a scanned admissible test set C (a union
/// of grid cells) that excludes p passes the theorem test on the requested
/// side(s).
///
/// `peel` scans a nested family. Starting from the full grid, each round
/// probes every exposed cell of C alone, then removes all passing cells
/// together if that layer passes as a whole; the scan stops at the first
/// failing layer. Probes only select the layer and mark nothing outside.
/// `channel` tests, per cell, the grid minus the cell and a straight channel
/// to the grid edge. The mesh must resolve the grid.
inline ReconstructionResult reconstruct(const NDMatrix& L_gamma, const Domain& domain, const Mesh& mesh,
                                        const WeightSpec& gamma0, const CurrentBasis& basis,
                                        const ReconstructionOptions& opt = {}) {
    ReconstructionResult res;
    res.grid = scan_grid(domain, opt.grid_n);
    const auto& g = res.grid;
    ForwardOptions fwd;
    fwd.threads = 1;
    fwd.inspect = opt.inspect;
    const TheoremContext ctx(mesh, basis, L_gamma, gamma0, opt.tau, fwd);

    std::vector<CellState> cells(g.size(), CellState::inside);
    std::vector<char> tested(g.size(), 0);
    std::vector<std::vector<MonotonicityVerdict>> logs(g.size());
    res.witness.resize(g.size());
    switch (opt.mode) {
        case ScanMode::peel: detail::peel_scan(ctx, opt, res, cells, tested, logs); break;
        case ScanMode::channel: detail::channel_scan(ctx, opt, res, cells, tested, logs); break;
    }
    res.indeterminate.assign(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) res.indeterminate[i] = cells[i] == CellState::inside && !tested[i];
    for (auto& l : logs) res.log.insert(res.log.end(), l.begin(), l.end());
    res.filled.assign(g.size(), 0);
    if (opt.fill) res.filled = fill_enclosed(g, cells);
    res.cells = std::move(cells);
    return res;
}

/// Area Jaccard index between the inside cells and the outer shape of the
/// given polygons (holes ignored), sampled on a regular lattice over the
/// domain's bounding box.
inline double jaccard(const ReconstructionResult& res, const Domain& domain, const std::vector<Polygon>& truth,
                      int samples = 600) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (auto p : domain.boundary) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    std::vector<Polygon> outer;
    for (const auto& t : truth) outer.push_back(Polygon{t.outer, {}});
    long inter = 0, uni = 0;
    for (int i = 0; i < samples; ++i)
        for (int j = 0; j < samples; ++j) {
            const Point p{x0 + (i + 0.5) * (x1 - x0) / samples, y0 + (j + 0.5) * (y1 - y0) / samples};
            if (!domain.contains(p)) continue;
            bool in_truth = false;
            for (const auto& o : outer)
                if (contains(o, p, 0.0)) {
                    in_truth = true;
                    break;
                }
            bool in_rec = false;
            if (auto rc = res.grid.cell_of(p)) in_rec = res.at(rc->first, rc->second) == CellState::inside;
            inter += in_truth && in_rec;
            uni += in_truth || in_rec;
        }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Grid as CSV, one row per grid row (top row first), 1 = inside.
inline void write_csv(std::ostream& os, const ReconstructionResult& res) {
    for (int r = 0; r < res.grid.n; ++r) {
        for (int c = 0; c < res.grid.n; ++c) os << (c ? "," : "") << (res.at(r, c) == CellState::inside ? 1 : 0);
        os << '\n';
    }
}

/// Binary PPM (P6), one pixel per cell: inside black, outside white.
inline void write_ppm(std::ostream& os, const ReconstructionResult& res) {
    os << "P6\n" << res.grid.n << ' ' << res.grid.n << "\n255\n";
    for (int r = 0; r < res.grid.n; ++r)
        for (int c = 0; c < res.grid.n; ++c) {
            const char v = res.at(r, c) == CellState::inside ? 0 : static_cast<char>(255);
            const char px[3] = {v, v, v};
            os.write(px, 3);
        }
}

inline void rasterize(const ReconstructionResult& res, const std::string& csv_path, const std::string& ppm_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw Error("cannot write " + csv_path);
    write_csv(csv, res);
    std::ofstream ppm(ppm_path, std::ios::binary);
    if (!ppm) throw Error("cannot write " + ppm_path);
    write_ppm(ppm, res);
    if (!csv || !ppm) throw Error("write failed for raster output");
}

}  // namespace calderon
