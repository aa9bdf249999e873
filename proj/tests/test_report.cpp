#include <gtest/gtest.h>

#include <regex>

#include "support.hpp"

using namespace moire;
using namespace moire::testing;

namespace {

Classification regular_sample() {
  Classification c;
  c.verdict = Verdict::Regular;
  c.level = 0.125;
  c.quadruple = Quadruple{{1, -1, 0, 2}};
  c.direction = normalized({1, 3});
  c.strip_width = 2.5;
  c.residual = 0.3;
  c.widths = {{100, 2.4}, {200, 2.45}, {400, 2.5}};
  return c;
}

ZoneDetection one_zone() {
  ZoneDetection det;
  det.range_lo = 0.0;
  det.range_hi = 1.0;
  det.refine_tol = 1e-3;
  StabilityZone z;
  z.alpha_lo = 0.25;
  z.alpha_hi = 0.75;
  z.quadruple = Quadruple{{1, 0, -1, 0}};
  z.mean_width = 3.5;
  z.outer_lo = 0.2;
  z.outer_hi = 0.8;
  z.samples = {2, 3, 4};
  z.refine_steps = 6;
  det.zones.push_back(z);
  det.complement = {{0.0, 0.25}, {0.75, 1.0}};
  return det;
}

TEST(Format, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(1.0 / 3), "0.33333333333333331");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Format, DoublesRoundTripExactly) {
  Rng rng(61);
  for (int k = 0; k < 1000; ++k) {
    const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.integer(-20, 20));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Format, JsonWriterIsStable) {
  json j{{"b", 0.1}, {"a", json::array({1, 2.5, nullptr})}, {"s", "x\"y"}, {"e", json::object()}};
  EXPECT_EQ(to_json_text(j), "{\n  \"b\": 0.10000000000000001,\n  \"a\": [\n    1,\n    2.5,\n    null\n  ],\n"
                             "  \"s\": \"x\\\"y\",\n  \"e\": {}\n}\n");
  EXPECT_EQ(to_json_text(j, 0), "{\"b\":0.10000000000000001,\"a\":[1,2.5,null],\"s\":\"x\\\"y\",\"e\":{}}\n");
  EXPECT_EQ(json::parse(to_json_text(j)), j);
}

TEST(ClassificationJson, CarriesTheDocumentedFields) {
  const json params{{"cell_size", 0.25}};
  const json j = classification_json(regular_sample(), params);
  for (const char* key : {"level", "status", "quadruple", "direction", "strip_width", "widths_by_length",
                          "residual", "diameter", "reason", "parameters"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["status"], "Regular");
  EXPECT_EQ(j["quadruple"], json::array({1, -1, 0, 2}));
  EXPECT_EQ(j["widths_by_length"].size(), 3u);
  EXPECT_TRUE(j["diameter"].is_null());
  EXPECT_EQ(j["parameters"], params);
}

TEST(ClassificationJson, RoundTrip) {
  const Classification c = regular_sample();
  const Classification back = classification_from_json(json::parse(to_json_text(classification_json(c))));
  EXPECT_EQ(back.verdict, c.verdict);
  EXPECT_EQ(back.quadruple, c.quadruple);
  EXPECT_EQ(back.level, c.level);
  EXPECT_EQ(back.direction.x, c.direction.x);
  EXPECT_EQ(back.direction.y, c.direction.y);
  EXPECT_EQ(back.strip_width, c.strip_width);
  EXPECT_EQ(back.residual, c.residual);
  ASSERT_EQ(back.widths.size(), 3u);
  EXPECT_EQ(back.widths[1].width, 2.45);
}

TEST(ClassificationJson, ClosedAndUndeterminedShapes) {
  Classification closed;
  closed.verdict = Verdict::Closed;
  closed.diameter = 4.5;
  const json jc = classification_json(closed);
  EXPECT_EQ(jc["diameter"], 4.5);
  EXPECT_TRUE(jc["quadruple"].is_null());
  EXPECT_TRUE(jc["direction"].is_null());
  Classification und;
  und.reason = "no level crossings in the window";
  EXPECT_EQ(classification_json(und)["reason"], und.reason);
  EXPECT_THROW(verdict_from_string("Sometimes"), Error);
  EXPECT_THROW(quadruple_from_json(json::array({1, 2})), Error);
}

TEST(ZonesCsv, EmptyDetectionIsHeaderOnly) {
  ZoneDetection det;
  EXPECT_EQ(zones_csv(det), std::string(kZoneCsvHeader) + "\n");
}

TEST(ZonesCsv, OneRowPerZone) {
  EXPECT_EQ(zones_csv(one_zone()), std::string(kZoneCsvHeader) + "\n0.25,0.75,1,0,-1,0,3.5,3\n");
}

TEST(ZonesJson, RoundTrip) {
  const ZoneDetection det = one_zone();
  const json j = json::parse(to_json_text(zones_json(det)));
  EXPECT_NEAR(j["complement_measure"].get<double>(), 0.5, 1e-15);
  EXPECT_NE(j["note"].get<std::string>().find("thin zones"), std::string::npos);
  const ZoneDetection back = zones_from_json(j);
  ASSERT_EQ(back.zones.size(), 1u);
  EXPECT_EQ(back.zones[0].quadruple, det.zones[0].quadruple);
  EXPECT_EQ(back.zones[0].alpha_lo, 0.25);
  EXPECT_EQ(back.zones[0].alpha_hi, 0.75);
  EXPECT_EQ(back.zones[0].samples, det.zones[0].samples);
  EXPECT_EQ(back.zones[0].refine_steps, 6);
  EXPECT_EQ(zones_csv(back), zones_csv(det));
  EXPECT_EQ(back.complement.size(), 2u);
}

TEST(ZonesSvg, ArcsMatchTheMeasures) {
  const ZoneDetection det = one_zone();
  const std::string svg = zones_svg(det);
  const std::regex attr("class=\"(zone|complement)\" data-alpha-lo=\"([^\"]+)\" data-alpha-hi=\"([^\"]+)\"");
  double zone = 0.0, complement = 0.0;
  int zones = 0;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), attr); it != std::sregex_iterator(); ++it) {
    const double span = std::stod((*it)[3]) - std::stod((*it)[2]);
    if ((*it)[1] == "zone") {
      zone += span;
      ++zones;
    } else {
      complement += span;
    }
  }
  EXPECT_EQ(zones, 1);
  EXPECT_NEAR(zone, det.zone_measure(), 1e-15);
  EXPECT_NEAR(complement, det.complement_measure(), 1e-15);
  EXPECT_NE(svg.find("data-quadruple=\"(1,0,-1,0)\""), std::string::npos);
  EXPECT_NE(svg.find(quadruple_color(det.zones[0].quadruple)), std::string::npos);
}

TEST(ZonesSvg, ColorsAreDeterministicPerQuadruple) {
  EXPECT_EQ(quadruple_color({{1, 0, 0, 0}}), quadruple_color({{1, 0, 0, 0}}));
  EXPECT_NE(quadruple_color({{1, 0, 0, 0}}), quadruple_color({{0, 1, 0, 0}}));
}

TEST(SweepJson, PointsRoundTrip) {
  SweepResult r;
  r.config.alpha_start = 0.1;
  r.config.alpha_end = 0.9;
  r.config.alpha_count = 2;
  for (int k = 0; k < 2; ++k) {
    SweepPoint p;
    p.index = static_cast<std::size_t>(k);
    p.alpha = r.config.alpha_at(p.index);
    ShiftSample s;
    s.shift = {0.5, 1.5};
    s.classification = k == 0 ? regular_sample() : Classification{};
    p.shifts.push_back(s);
    aggregate_point(p);
    r.points.push_back(p);
  }
  const std::string text = to_json_text(sweep_json(r));
  const SweepResult back = sweep_result_from_json(json::parse(text));
  ASSERT_EQ(back.points.size(), 2u);
  EXPECT_EQ(back.points[0].verdict, Verdict::Regular);
  EXPECT_EQ(back.points[0].quadruple, r.points[0].quadruple);
  EXPECT_EQ(back.points[1].verdict, Verdict::Undetermined);
  EXPECT_EQ(back.points[0].shifts.size(), 1u);
  EXPECT_EQ(back.config.alpha_end, 0.9);
  EXPECT_EQ(to_json_text(sweep_json(back)).size() > 0, true);
}

TEST(SweepJson, RegularPointNeedsAQuadruple) {
  const json j{{"points", json::array({json{{"alpha", 0.1}, {"verdict", "Regular"}}})}};
  EXPECT_THROW(sweep_result_from_json(j), Error);
}

TEST(Manifest, RecordsProvenance) {
  RunManifest m;
  m.command = "classify";
  m.config_path = "configs/anisotropic.conf";
  m.config_hash = config_fingerprint(anisotropic_potential(0.7));
  m.started_at = "2026-01-01T00:00:00Z";
  m.outputs = {"classification.json"};
  const json j = manifest_json(m);
  EXPECT_EQ(j["tool"], "moire");
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["config_hash"].get<std::string>().size(), 16u);
  EXPECT_EQ(j["outputs"][0], "classification.json");
  EXPECT_EQ(config_fingerprint(anisotropic_potential(0.7)), m.config_hash);
  EXPECT_NE(config_fingerprint(anisotropic_potential(0.8)), m.config_hash);
}

TEST(Hash, KnownFnvVector) {
  EXPECT_EQ(hex64(fnv1a64("")), "cbf29ce484222325");
  EXPECT_EQ(hex64(fnv1a64("a")), "af63dc4c8601ec8c");
}

}  // namespace
