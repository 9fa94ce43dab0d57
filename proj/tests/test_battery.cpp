#include "anchortest/battery.hpp"
#include "anchortest/error.hpp"
#include "anchortest/synth.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace anchortest;
using testsupport::gaussian_matrix;

namespace {

BatteryInput from_triple(const SyntheticTriple& t, std::string tag, std::optional<double> rho = std::nullopt) {
    return {"synthetic", rho, std::move(tag), t.data.at("anchor"), t.data.at("nonanchor_1"), t.data.at("nonanchor_2"),
            std::nullopt};
}

BatteryInput alt_input(std::uint64_t seed) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.structure = Structure::independent;
    return from_triple(generate_alt_triple(cfg), "alt");
}

BatteryOptions small_options(std::size_t r = 199) {
    BatteryOptions o;
    o.permutations = r;
    o.seed = 3;
    o.threads = 1;
    return o;
}

std::string csv_of(const BatteryResult& result) {
    std::ostringstream out;
    write_battery_csv(out, result);
    return out.str();
}

/// Anchor 0..n-1 on a line; D1 splits it in half, D2 at `threshold`.
BatteryInput threshold_input(std::size_t threshold, double rho) {
    const long n = 40;
    Matrix anchor(n, 1);
    Matrix first(n, 2);
    Matrix second(n, 2);
    const Matrix noise = gaussian_matrix(n, 4, 17, 0.01);
    for (long i = 0; i < n; ++i) {
        anchor(i, 0) = static_cast<double>(i);
        const double a = i < n / 2 ? 0.0 : 10.0;
        const double b = static_cast<std::size_t>(i) < threshold ? 0.0 : 10.0;
        first.row(i) << a + noise(i, 0), a + noise(i, 1);
        second.row(i) << b + noise(i, 2), b + noise(i, 3);
    }
    return {"line", rho, "shift", EmbeddingMatrix(anchor, "A"), EmbeddingMatrix(first, "D1"),
            EmbeddingMatrix(second, "D2"), std::nullopt};
}

}  // namespace

TEST(PValueFormat, FloorAndStar) {
    EXPECT_EQ(format_pvalue(0.001, 0.05, 999), "< 1e-3*");
    EXPECT_EQ(format_pvalue(0.305, 0.05, 999), "0.305");
    EXPECT_EQ(format_pvalue(0.0123, 0.05, 999), "0.012*");
    EXPECT_EQ(format_pvalue(0.05, 0.05, 999), "0.050");
    EXPECT_EQ(format_pvalue(1.0 / 200.0, 0.05, 199), "< 0.005*");
    EXPECT_EQ(format_pvalue(1e-7, 0.05, 0), "< 1e-3*");
    EXPECT_EQ(format_pvalue(0.0042, 0.05, 0), "0.004*");
}

TEST(Csv, FieldQuoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("H0(O,{G,S})"), "\"H0(O,{G,S})\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Battery, HeaderIsStable) {
    BatteryOptions o;
    o.k_values = {2, 4};
    EXPECT_EQ(battery_header(o), (std::vector<std::string>{"corpus", "rho", "hypothesis", "anchor", "d1", "d2", "anch_K2",
                                                           "anch_K4", "hotelling", "nploc", "energy", "ball"}));
}

TEST(Battery, AltTripleMarksEveryAnchoredCell) {
    BatteryOptions o = small_options(999);
    o.hotelling = o.nploc = o.energy = false;
    const auto result = run_battery({alt_input(1)}, o);
    ASSERT_EQ(result.rows.size(), 1U);
    ASSERT_EQ(result.rows[0].anchored.size(), 4U);
    for (std::size_t j = 0; j < 4; ++j) {
        const auto& cell = result.rows[0].anchored[j];
        ASSERT_TRUE(cell.ok()) << cell.message;
        EXPECT_TRUE(cell.rejected()) << "K=" << o.k_values[j] << " p=" << cell.report->p_value;
        EXPECT_EQ(*cell.report->k, o.k_values[j]);
    }
    EXPECT_FALSE(result.rows[0].hotelling.enabled);
    EXPECT_EQ(render_cell(result.rows[0].hotelling, 0.05), "");
}

TEST(Battery, RerunIsByteIdenticalAndThreadIndependent) {
    const std::vector<BatteryInput> inputs{alt_input(4), alt_input(5)};
    BatteryOptions one = small_options();
    const auto a = csv_of(run_battery(inputs, one));
    const auto b = csv_of(run_battery(inputs, one));
    EXPECT_EQ(a, b);
    BatteryOptions many = one;
    many.threads = 4;
    const auto c = run_battery(inputs, many);
    EXPECT_EQ(a, csv_of(c));
    const auto d = run_battery(inputs, one);
    for (std::size_t r = 0; r < d.rows.size(); ++r) {
        for (std::size_t j = 0; j < d.rows[r].anchored.size(); ++j) {
            EXPECT_EQ(d.rows[r].anchored[j].report->p_value, c.rows[r].anchored[j].report->p_value);
        }
        EXPECT_EQ(d.rows[r].energy.report->p_value, c.rows[r].energy.report->p_value);
    }
}

TEST(Battery, CellErrorsDoNotAbort) {
    const EmbeddingMatrix anchor(gaussian_matrix(30, 3, 1), "A");
    const EmbeddingMatrix same(gaussian_matrix(30, 3, 2), "D");
    BatteryInput input{"c", std::nullopt, "identical", anchor, same, same, 0.02};
    const auto result = run_battery({input, alt_input(2)}, small_options());
    ASSERT_EQ(result.rows.size(), 2U);
    for (const auto& cell : result.rows[0].anchored) {
        EXPECT_FALSE(cell.ok());
        EXPECT_EQ(cell.error, "vacuous");
        EXPECT_EQ(render_cell(cell, 0.05), "n/a(vacuous)");
    }
    EXPECT_TRUE(result.rows[1].anchored[0].ok());
    const auto csv = csv_of(result);
    EXPECT_NE(csv.find("n/a(vacuous)"), std::string::npos);
    EXPECT_NE(csv.find("0.020*"), std::string::npos);
    std::ostringstream console;
    write_battery_console(console, result);
    EXPECT_NE(console.str().find("identical"), std::string::npos);
    const auto j = to_json(result);
    EXPECT_EQ(j.at("rows").size(), 2U);
}

TEST(Battery, EmptyInputIsManifestError) {
    EXPECT_THROW(run_battery({}, small_options()), ManifestError);
    EXPECT_THROW(run_distances({}, small_options()), ManifestError);
}

TEST(Battery, BaselineNames) {
    BatteryOptions o;
    set_baselines(o, "energy");
    EXPECT_FALSE(o.hotelling);
    EXPECT_FALSE(o.nploc);
    EXPECT_TRUE(o.energy);
    set_baselines(o, "none");
    EXPECT_FALSE(o.energy);
    set_baselines(o, "hotelling,nploc");
    EXPECT_TRUE(o.hotelling && o.nploc && !o.energy);
    EXPECT_THROW(set_baselines(o, "ball"), ParameterError);
}

TEST(Battery, LoadsManifestTriples) {
    testsupport::TempDir dir;
    ScenarioConfig cfg;
    cfg.n = 40;
    const auto t = generate_null_triple(cfg);
    save_matrix(t.data.at("anchor"), dir / "o.bin", MatrixFormat::binary);
    save_matrix(t.data.at("nonanchor_1"), dir / "g.csv", MatrixFormat::csv);
    save_matrix(t.data.at("nonanchor_2"), dir / "s.bin", MatrixFormat::binary);
    std::ofstream(dir / "m.json") << R"({"datasets": [
        {"path": "o.bin", "role": "anchor", "name": "O"},
        {"path": "g.csv", "role": "nonanchor_1", "name": "G", "temperature": 0.4},
        {"path": "s.bin", "role": "nonanchor_2", "name": "S", "temperature": 0.4}]})";
    const auto inputs = load_battery_inputs(load_manifest(dir / "m.json"));
    ASSERT_EQ(inputs.size(), 1U);
    EXPECT_EQ(inputs[0].anchor.label(), "O");
    EXPECT_EQ(inputs[0].second.label(), "S");
    EXPECT_DOUBLE_EQ(*inputs[0].rho, 0.4);
    EXPECT_TRUE((inputs[0].anchor.values().array() == t.data.at("anchor").values().array()).all());
}

TEST(Distances, IdenticalSetsGiveZero) {
    const EmbeddingMatrix anchor(gaussian_matrix(30, 2, 1), "A");
    const EmbeddingMatrix d(gaussian_matrix(30, 2, 2), "D");
    BatteryOptions o = small_options();
    o.k_values = {2, 3};
    const auto rows = run_distances({{"c", 0.5, "same", anchor, d, d, std::nullopt}}, o);
    ASSERT_EQ(rows.size(), 2U);
    for (const auto& r : rows) {
        EXPECT_EQ(r.wasserstein, 0.0);
        EXPECT_NEAR(r.kl, 0.0, 1e-12);
        EXPECT_EQ(r.gap, 0.0);
        EXPECT_EQ(r.rho, 0.5);
    }
}

TEST(Distances, W1IncreasesAcrossConstructedFamily) {
    BatteryOptions o = small_options();
    o.k_values = {2};
    std::vector<BatteryInput> family;
    const std::vector<std::size_t> thresholds{20, 16, 12, 8, 4};
    for (std::size_t i = 0; i < thresholds.size(); ++i) family.push_back(threshold_input(thresholds[i], 0.1 * i));
    const auto rows = run_distances(family, o);
    ASSERT_EQ(rows.size(), thresholds.size());
    EXPECT_NEAR(rows[0].wasserstein, 0.0, 1e-12);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].wasserstein, rows[i - 1].wasserstein) << i;
}

TEST(Distances, MissingRhoIsManifestError) {
    auto input = alt_input(1);
    EXPECT_THROW(run_distances({input}, small_options()), ManifestError);
}

TEST(Distances, CsvLayout) {
    std::ostringstream out;
    write_distances_csv(out, {{2, 0.7, 0.25, false, 1.5, -0.5, "H0(O,{G,S})", "cnn"}});
    EXPECT_EQ(out.str(), "K,rho,kl,wasserstein,gap,hypothesis,corpus\n2,0.7,0.25,1.5,-0.5,\"H0(O,{G,S})\",cnn\n");
}
