#include "anchortest/error.hpp"
#include "anchortest/manifest.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace anchortest;
using nlohmann::json;

namespace {

json basic_doc() {
    return json::parse(R"({
      "datasets": [
        {"path": "a.csv", "role": "anchor"},
        {"path": "b.bin", "role": "nonanchor_1", "temperature": 0.7},
        {"path": "c.bin", "role": "nonanchor_2", "temperature": 0.7, "format": "csv"}
      ],
      "grid": {"k_values": [2, 3], "alpha": 0.01, "permutations": 99, "seed": 42}
    })");
}

}  // namespace

TEST(Manifest, ParsesFieldsAndResolvesPaths) {
    const auto m = parse_manifest(basic_doc(), "/data");
    ASSERT_EQ(m.entries.size(), 3U);
    EXPECT_EQ(m.entries[0].path, std::filesystem::path("/data/a.csv"));
    EXPECT_EQ(m.entries[0].format, MatrixFormat::csv);
    EXPECT_FALSE(m.entries[0].temperature);
    EXPECT_EQ(m.entries[1].format, MatrixFormat::binary);
    EXPECT_DOUBLE_EQ(*m.entries[1].temperature, 0.7);
    EXPECT_EQ(m.entries[2].format, MatrixFormat::csv);
    EXPECT_EQ(m.entries[2].name, "nonanchor_2");
    EXPECT_EQ(m.grid.k_values, (std::vector<std::size_t>{2, 3}));
    EXPECT_DOUBLE_EQ(m.grid.alpha, 0.01);
    EXPECT_EQ(m.grid.permutations, 99U);
    EXPECT_EQ(m.grid.seed, 42U);
}

TEST(Manifest, GridDefaults) {
    auto doc = basic_doc();
    doc.erase("grid");
    const auto m = parse_manifest(doc);
    EXPECT_EQ(m.grid.k_values, (std::vector<std::size_t>{2, 3, 4, 5}));
    EXPECT_DOUBLE_EQ(m.grid.alpha, 0.05);
    EXPECT_EQ(m.grid.permutations, 999U);
}

TEST(Manifest, EmptyOrMalformedRejected) {
    EXPECT_THROW(parse_manifest(json::parse(R"({"datasets": []})")), ManifestError);
    EXPECT_THROW(parse_manifest(json::parse(R"([1, 2])")), ManifestError);
    EXPECT_THROW(parse_manifest(json::parse(R"({"datasets": [{"role": "anchor"}]})")), ManifestError);
    auto doc = basic_doc();
    doc["datasets"][1]["temperature"] = "hot";
    EXPECT_THROW(parse_manifest(doc), ManifestError);
}

TEST(Manifest, ValidateChecksGridAndPaths) {
    testsupport::TempDir dir;
    for (const char* f : {"a.csv", "b.bin", "c.bin"}) std::ofstream(dir / f) << "x";
    auto m = parse_manifest(basic_doc(), dir.path());
    EXPECT_NO_THROW(validate_manifest(m));
    m.grid.k_values = {1, 2};
    EXPECT_THROW(validate_manifest(m), ManifestError);
    m.grid.k_values = {2};
    m.grid.alpha = 1.5;
    EXPECT_THROW(validate_manifest(m), ManifestError);
    m.grid.alpha = 0.05;
    m.entries[0].path = dir / "nope.csv";
    EXPECT_THROW(validate_manifest(m), ManifestError);
}

TEST(Manifest, DefaultExpansionSharesUntemperedAnchor) {
    const auto m = parse_manifest(json::parse(R"({
      "datasets": [
        {"path": "o.bin", "role": "anchor", "name": "O"},
        {"path": "g1.bin", "role": "nonanchor_1", "name": "G", "temperature": 0.1},
        {"path": "s1.bin", "role": "nonanchor_2", "name": "S", "temperature": 0.1},
        {"path": "g2.bin", "role": "nonanchor_1", "name": "G", "temperature": 1.5},
        {"path": "s2.bin", "role": "nonanchor_2", "name": "S", "temperature": 1.5}
      ]
    })"));
    const auto triples = expand_triples(m);
    ASSERT_EQ(triples.size(), 2U);
    EXPECT_DOUBLE_EQ(*triples[0].rho, 0.1);
    EXPECT_DOUBLE_EQ(*triples[1].rho, 1.5);
    EXPECT_EQ(triples[1].anchor.path, std::filesystem::path("o.bin"));
    EXPECT_EQ(triples[1].first.path, std::filesystem::path("g2.bin"));
    EXPECT_EQ(triples[0].tag, "H0(O,{G,S})");
}

TEST(Manifest, EveryNonanchorPairBecomesATriple) {
    const auto m = parse_manifest(json::parse(R"({
      "datasets": [
        {"path": "a", "role": "anchor"}, {"path": "x", "role": "nonanchor_3"},
        {"path": "y", "role": "nonanchor_1"}, {"path": "z", "role": "nonanchor_2"}
      ]
    })"));
    const auto triples = expand_triples(m);
    ASSERT_EQ(triples.size(), 3U);
    EXPECT_EQ(triples[0].first.role, "nonanchor_1");
    EXPECT_EQ(triples[0].second.role, "nonanchor_2");
    EXPECT_EQ(triples[2].first.role, "nonanchor_2");
    EXPECT_EQ(triples[2].second.role, "nonanchor_3");
}

TEST(Manifest, RoleCoverageEnforced) {
    EXPECT_THROW(expand_triples(parse_manifest(json::parse(
                     R"({"datasets": [{"path": "a", "role": "anchor"}, {"path": "b", "role": "nonanchor_1"}]})"))),
                 ManifestError);
    EXPECT_THROW(expand_triples(parse_manifest(json::parse(
                     R"({"datasets": [{"path": "a", "role": "anchor"}, {"path": "a2", "role": "anchor"},
                                      {"path": "b", "role": "nonanchor_1"}, {"path": "c", "role": "nonanchor_2"}]})"))),
                 ManifestError);
    EXPECT_THROW(expand_triples(parse_manifest(json::parse(
                     R"({"datasets": [{"path": "a", "role": "anchor"}, {"path": "b", "role": "other"},
                                      {"path": "c", "role": "nonanchor_2"}]})"))),
                 ManifestError);
}

TEST(Manifest, CorporaExpandIndependently) {
    const auto m = parse_manifest(json::parse(R"({
      "datasets": [
        {"path": "a", "role": "anchor", "corpus": "cnn"}, {"path": "b", "role": "nonanchor_1", "corpus": "cnn"},
        {"path": "c", "role": "nonanchor_2", "corpus": "cnn"},
        {"path": "d", "role": "anchor", "corpus": "quora"}, {"path": "e", "role": "nonanchor_1", "corpus": "quora"},
        {"path": "f", "role": "nonanchor_2", "corpus": "quora"}
      ]
    })"));
    const auto triples = expand_triples(m);
    ASSERT_EQ(triples.size(), 2U);
    EXPECT_EQ(triples[0].corpus, "cnn");
    EXPECT_EQ(triples[1].corpus, "quora");
    EXPECT_EQ(triples[1].anchor.path, std::filesystem::path("d"));
}

TEST(Manifest, ExplicitHypotheses) {
    const auto m = parse_manifest(json::parse(R"json({
      "datasets": [
        {"path": "o", "role": "anchor", "name": "O"},
        {"path": "g", "role": "nonanchor_G", "name": "G", "temperature": 0.4},
        {"path": "gp", "role": "nonanchor_Gprime", "name": "Gprime", "temperature": 0.4},
        {"path": "s", "role": "nonanchor_S", "name": "S", "temperature": 0.4}
      ],
      "hypotheses": [
        {"tag": "H0(O,{G,S})", "anchor": "O", "nonanchors": ["G", "S"], "ball_pvalue": 0.002},
        {"anchor": "O", "nonanchors": ["G", "Gprime"]},
        {"anchor": "O", "nonanchors": ["G", "Missing"]}
      ]
    })json"));
    const auto triples = expand_triples(m);
    ASSERT_EQ(triples.size(), 2U);
    EXPECT_EQ(triples[0].tag, "H0(O,{G,S})");
    EXPECT_DOUBLE_EQ(*triples[0].ball_pvalue, 0.002);
    EXPECT_EQ(triples[1].tag, "H0(O,{G,Gprime})");
    EXPECT_FALSE(triples[1].ball_pvalue);
}

TEST(Manifest, JsonRoundTrip) {
    const auto m = parse_manifest(basic_doc());
    const auto back = parse_manifest(to_json(m));
    ASSERT_EQ(back.entries.size(), m.entries.size());
    for (std::size_t i = 0; i < m.entries.size(); ++i) {
        EXPECT_EQ(back.entries[i].path, m.entries[i].path);
        EXPECT_EQ(back.entries[i].role, m.entries[i].role);
        EXPECT_EQ(back.entries[i].temperature, m.entries[i].temperature);
        EXPECT_EQ(back.entries[i].format, m.entries[i].format);
    }
    EXPECT_EQ(back.grid.k_values, m.grid.k_values);
    EXPECT_EQ(back.grid.seed, m.grid.seed);
}

TEST(Manifest, LoadReportsBadJson) {
    testsupport::TempDir dir;
    std::ofstream(dir / "m.json") << "{ not json";
    EXPECT_THROW(load_manifest(dir / "m.json"), ManifestError);
    EXPECT_THROW(load_manifest(dir / "absent.json"), IoError);
}
