#include <gtest/gtest.h>

#include "phantoms.hpp"

using namespace calderon;

TEST(ScanGrid, CellCounts) {
    const auto disk = calderon::testing::unit_disk();
    EXPECT_EQ(scan_grid(disk, 8).size(), 64u);
    const auto sq = build_domain(DomainShape::square, {0.0, 4.0});
    EXPECT_EQ(scan_grid(sq, 2).size(), 4u);
    EXPECT_THROW(scan_grid(sq, 1), ConfigError);
}

TEST(ScanGrid, CellLookup) {
    const auto g = scan_grid(calderon::testing::unit_disk(), 8);
    for (int r = 0; r < g.n; ++r)
        for (int c = 0; c < g.n; ++c) {
            const auto rc = g.cell_of(g.cell_center(r, c));
            ASSERT_TRUE(rc);
            EXPECT_EQ(rc->first, r);
            EXPECT_EQ(rc->second, c);
        }
    EXPECT_FALSE(g.cell_of({0.9, 0.0}));
    EXPECT_GT(g.cell_center(0, 0).y, g.cell_center(7, 0).y);
}

TEST(TraceCells, RejectsHolesAndPinches) {
    const auto g = scan_grid(build_domain(DomainShape::square, {0.0, 4.0}), 3);
    std::vector<char> ring(9, 1);
    ring[4] = 0;
    EXPECT_FALSE(trace_cells(g, ring));
    std::vector<char> diag{1, 0, 0, 0, 1, 0, 0, 0, 0};
    EXPECT_FALSE(trace_cells(g, diag));
    std::vector<char> two{1, 0, 1, 0, 0, 0, 0, 0, 0};
    const auto polys = trace_cells(g, two);
    ASSERT_TRUE(polys);
    EXPECT_EQ(polys->size(), 2u);
}

TEST(PixelFamily, SquareTwoByTwo) {
    const auto sq = build_domain(DomainShape::square, {0.0, 4.0});
    const auto fam = pixel_family(sq, 2);
    ASSERT_FALSE(fam.empty());
    EXPECT_EQ(fam.front().id, "grid");
    for (const auto& t : fam) {
        const auto polys = trace_cells(scan_grid(sq, 2), t.cells);
        if (!t.empty()) ASSERT_TRUE(polys);
        for (const auto& p : t.polygons) EXPECT_TRUE(polygon_is_simple(p));
    }
}

TEST(PixelFamily, MembersAreAdmissible) {
    const auto disk = calderon::testing::unit_disk();
    const auto g = scan_grid(disk, 8);
    const auto fam = pixel_family(g);
    EXPECT_GT(fam.size(), 64u);
    for (const auto& t : fam) {
        double a = 0.0;
        for (const auto& p : t.polygons) {
            EXPECT_TRUE(polygon_is_simple(p));
            a += area(p);
            for (auto v : p.outer) EXPECT_TRUE(disk.contains(v));
        }
        const long cells = std::count(t.cells.begin(), t.cells.end(), 1);
        EXPECT_NEAR(a, cells * g.cell * g.cell, 1e-12);
    }
}

TEST(PixelFamily, ChannelReachesGridEdge) {
    const auto g = scan_grid(calderon::testing::unit_disk(), 8);
    const auto m = channel_mask(g, 3, 4, ScanDirection::right);
    EXPECT_EQ(std::count(m.begin(), m.end(), 1), 4);
    EXPECT_TRUE(m[g.index(3, 7)]);
    EXPECT_FALSE(m[g.index(3, 3)]);
}
