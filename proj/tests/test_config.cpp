#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "calderon/calderon.hpp"

using namespace calderon;
using nlohmann::json;

namespace {

/// Message of the ConfigError thrown by parse_config, or "" if none.
std::string config_error(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

json minimal() { return json::parse(R"({"geometry": {"shape": "disk", "h": 0.1}})"); }

}  // namespace

TEST(ParseConfig, Defaults) {
    const Config c = parse_config(minimal());
    EXPECT_EQ(c.domain.shape, DomainShape::disk);
    EXPECT_TRUE(c.domain.gamma_is_full());
    EXPECT_DOUBLE_EQ(c.h, 0.1);
    EXPECT_EQ(c.m, 16);
    EXPECT_DOUBLE_EQ(c.tau, 1e-4);
    EXPECT_EQ(c.side, Side::both);
    EXPECT_EQ(c.scan, ScanMode::peel);
    EXPECT_EQ(c.grid_n, 8);
    EXPECT_TRUE(c.fill);
    EXPECT_FALSE(c.chain_set);
    EXPECT_TRUE(c.field.regions.regions.empty());
    EXPECT_TRUE(c.field.background.is_constant());
    EXPECT_EQ(c.calibrate_h, std::vector<double>{0.1});
    EXPECT_EQ(c.calibrate_m, std::vector<int>{16});
}

TEST(ParseConfig, ErrorsCarryThePath) {
    auto j = minimal();
    EXPECT_TRUE(starts_with(config_error(json::object()), "config: missing key 'geometry'"));

    j["geometry"]["shape"] = "triangle";
    EXPECT_TRUE(starts_with(config_error(j), "geometry.shape:"));

    j = minimal();
    j["geometry"]["h"] = "fine";
    EXPECT_TRUE(starts_with(config_error(j), "geometry.h: expected a number"));

    j = minimal();
    j["measurement"]["m"] = 0;
    EXPECT_TRUE(starts_with(config_error(j), "measurement.m:"));

    j = minimal();
    j["test"]["side"] = "sideways";
    EXPECT_TRUE(starts_with(config_error(j), "test:"));

    j = minimal();
    j["geometry"]["regions"] = json::parse(R"([{"name": "a", "label": "DFplus",
        "shape": {"disk": {"center": [0, 0], "radius": 0.2}}}])");
    EXPECT_TRUE(starts_with(config_error(j), "coefficient.regions: no weight given for region 'a'"));

    j["coefficient"]["regions"]["a"] = json::parse(R"({"kind": "radial_power", "center": [0, 0], "exponent": 3})");
    EXPECT_TRUE(starts_with(config_error(j), "coefficient.regions.a:"));

    j["coefficient"]["regions"] = json::parse(R"({"a": 2.0, "b": 1.0})");
    EXPECT_TRUE(starts_with(config_error(j), "coefficient.regions.b: no region with this name"));

    j = minimal();
    j["geometry"]["regions"] = json::parse(R"([{"name": "a", "label": "D0", "shape": {"hexagon": {}}}])");
    EXPECT_TRUE(starts_with(config_error(j), "geometry.regions[0].shape:"));

    j = minimal();
    j["geometry"]["regions"] = json::parse(R"([{"name": "a", "label": "D0",
        "shape": {"disk": {"center": [0, "x"], "radius": 0.2}}}])");
    EXPECT_TRUE(starts_with(config_error(j), "geometry.regions[0].shape.disk.center[1]: expected a number"));

    j = minimal();
    j["solver"]["grounding"] = "pin";
    EXPECT_TRUE(starts_with(config_error(j), "solver.grounding:"));

    j = minimal();
    j["calibrate"]["h"] = json::array();
    EXPECT_TRUE(starts_with(config_error(j), "calibrate.h:"));
}

TEST(ParseConfig, ShapesAndWeights) {
    const auto j = json::parse(R"({
      "geometry": {"shape": "square", "gamma": {"start": 0.5, "end": 2.5}, "h": 0.05,
        "regions": [
          {"name": "r", "label": "DFplus", "shape": {"rect": {"lo": [0.1, 0.1], "hi": [0.3, 0.4]}}},
          {"name": "p", "label": "Dsing", "shape": {"polygon": {"outer": [[0.6, 0.6], [0.8, 0.6], [0.7, 0.8]]}}},
          {"name": "h", "label": "D0", "shape": {"disk": {"center": [0.5, 0.2], "radius": 0.05, "segments": 12}}}
        ]},
      "coefficient": {"background": {"kind": "constant", "value": 2.0}, "regions": {
        "r": 3.0,
        "p": {"kind": "product", "scale": 0.5, "clip": [0.01, 2.0], "factors": [
          {"kind": "radial_power", "center": [0.7, 0.7], "exponent": -0.5},
          {"kind": "surface_power", "polyline": [[0.6, 0.6], [0.8, 0.6]], "exponent": 0.3}]}}},
      "test": {"chain_set": [{"rect": {"lo": [0.05, 0.05], "hi": [0.95, 0.95]}}], "fill": false, "scan": "channel"}
    })");
    const Config c = parse_config(j);
    EXPECT_EQ(c.domain.shape, DomainShape::square);
    EXPECT_NEAR(c.domain.gamma_length, 2.0, 1e-12);
    ASSERT_EQ(c.field.regions.regions.size(), 3u);
    EXPECT_NEAR(area(c.field.regions.regions[0].polygon), 0.06, 1e-12);
    EXPECT_EQ(c.field.regions.regions[1].label, RegionLabel::Dsing);
    EXPECT_EQ(c.field.regions.regions[2].polygon.outer.size(), 12u);
    EXPECT_DOUBLE_EQ(c.field.background.scale, 2.0);
    const auto& w = c.field.region_weights[1];
    ASSERT_TRUE(w.clip);
    EXPECT_DOUBLE_EQ((*w.clip)[1], 2.0);
    EXPECT_EQ(w.singular_set().points.size(), 1u);
    EXPECT_EQ(w.singular_set().segments.size(), 1u);
    EXPECT_FALSE(c.fill);
    EXPECT_EQ(c.scan, ScanMode::channel);
    ASSERT_TRUE(c.chain_set);
    EXPECT_EQ(c.chain_set->size(), 1u);
}

TEST(Prepare, ValidationFailureListsClauses) {
    const auto j = json::parse(R"({
      "geometry": {"shape": "disk", "h": 0.1, "regions": [
        {"name": "a", "label": "D0", "shape": {"disk": {"center": [0, 0], "radius": 0.3}}},
        {"name": "b", "label": "Dinf", "shape": {"disk": {"center": [0.2, 0], "radius": 0.3}}}]}
    })");
    try {
        prepare(parse_config(j));
        FAIL() << "expected a validation failure";
    } catch (const ValidationFailure& e) {
        EXPECT_FALSE(e.violations().empty());
    }
}

TEST(Prepare, SignViolationIsReported) {
    const auto j = json::parse(R"({
      "geometry": {"shape": "disk", "h": 0.1, "regions": [
        {"name": "a", "label": "DFminus", "shape": {"disk": {"center": [0, 0], "radius": 0.3}}}]},
      "coefficient": {"regions": {"a": 4.0}}
    })");
    EXPECT_THROW(prepare(parse_config(j)), ValidationFailure);
}

TEST(Prepare, MeshResolvesGridAndChainSet) {
    auto j = minimal();
    j["test"]["chain_set"] = json::parse(R"([{"disk": {"center": [0, 0], "radius": 0.5, "segments": 24}}])");
    const calderon::Setup s = prepare(parse_config(j));
    EXPECT_EQ(s.basis.m, 16);
    EXPECT_EQ(s.chain_set().size(), 1u);
    EXPECT_NO_THROW(check_resolves(s.mesh, s.chain_set()));
    EXPECT_NO_THROW(check_resolves(s.mesh, {s.grid.box()}));
    const calderon::Setup t = prepare(parse_config(minimal()), 0.2, 4);
    EXPECT_EQ(t.basis.m, 4);
    EXPECT_LT(t.mesh.num_vertices(), s.mesh.num_vertices());
}

TEST(LoadConfig, ShippedConfigsParse) {
    int n = 0;
    for (const auto& e : std::filesystem::directory_iterator(CALDERON_CONFIGS)) {
        if (e.path().extension() != ".json") continue;
        ++n;
        EXPECT_NO_THROW(load_config(e.path().string())) << e.path();
    }
    EXPECT_GE(n, 5);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(LoadConfig, CommentsAllowedAndSyntaxErrorsReported) {
    const auto dir = std::filesystem::temp_directory_path() / "calderon_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "ok.json") << "// note\n{\"geometry\": {\"h\": 0.2}}\n";
        std::ofstream(dir / "bad.json") << "{\"geometry\": \n";
    }
    EXPECT_DOUBLE_EQ(load_config((dir / "ok.json").string()).h, 0.2);
    try {
        load_config((dir / "bad.json").string());
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
