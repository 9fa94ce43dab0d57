#pragma once

#include "anchortest/cluster.hpp"
#include "anchortest/corpus.hpp"
#include "anchortest/manifest.hpp"
#include "anchortest/preprocess.hpp"
#include "anchortest/stattests.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace anchortest {

struct BatteryOptions {
    std::vector<std::size_t> k_values{2, 3, 4, 5};
    double alpha = 0.05;
    std::size_t permutations = 999;
    std::uint64_t seed = 0;
    bool hotelling = true;
    bool nploc = true;
    bool energy = true;
    /// Matrices wider than this are reduced by PCA first. 0 disables reduction.
    std::size_t pca_dim = 10;
    /// Reduction for the anchored test. Baselines always use one joint model for D1 and D2.
    PcaMode pca_mode = PcaMode::per_dataset;
    /// Concurrent cells (0 = hardware concurrency). Results do not depend on it.
    unsigned threads = 0;
    KMeansConfig kmeans;
};

BatteryOptions options_from_grid(const ExperimentGrid& grid);

/// Parses a comma-separated subset of {hotelling, nploc, energy}; "none" or "" disables all.
void set_baselines(BatteryOptions& options, const std::string& list);

/// One anchor/D1/D2 triple with its table metadata.
struct BatteryInput {
    std::string corpus = "default";
    std::optional<double> rho;
    std::string tag;
    EmbeddingMatrix anchor;
    EmbeddingMatrix first;
    EmbeddingMatrix second;
    std::optional<double> ball_pvalue;
};

/// Outcome of one test. `error` holds the error kind when the test could not run.
struct BatteryCell {
    bool enabled = true;
    std::optional<TestReport> report;
    std::string error;
    std::string message;

    bool ok() const noexcept { return report.has_value(); }
    bool rejected() const noexcept { return report && report->reject; }
};

struct BatteryRow {
    std::string corpus;
    std::optional<double> rho;
    std::string tag;
    std::string anchor;
    std::string first;
    std::string second;
    /// One cell per K, in options.k_values order.
    std::vector<BatteryCell> anchored;
    BatteryCell hotelling;
    BatteryCell nploc;
    BatteryCell energy;
    std::optional<double> ball_pvalue;
};

struct BatteryResult {
    BatteryOptions options;
    std::vector<BatteryRow> rows;
};

/// Row r, K index j uses seed derive(options.seed, {r, j}); baseline b uses
/// derive(options.seed, {r, 1000 + b}).
BatteryResult run_battery(const std::vector<BatteryInput>& inputs, const BatteryOptions& options);

/// Loads every dataset referenced by the manifest's triples.
std::vector<BatteryInput> load_battery_inputs(const DatasetManifest& manifest);

/// Table rendering of a p-value: "< 1e-3" style below the resolution floor (1 / (R + 1)
/// for permutation tests, 1e-3 for parametric ones), "%.3f" otherwise, "*" when p < alpha.
std::string format_pvalue(double p, double alpha, std::size_t replicates);

std::string render_cell(const BatteryCell& cell, double alpha);

std::vector<std::string> battery_header(const BatteryOptions& options);
void write_battery_csv(std::ostream& out, const BatteryResult& result);
nlohmann::json to_json(const BatteryResult& result);
void write_battery_console(std::ostream& out, const BatteryResult& result);

struct DistanceRow {
    std::size_t k = 0;
    double rho = 0.0;
    double kl = 0.0;
    bool kl_degenerate = false;
    double wasserstein = 0.0;
    /// mean(d^(1)) - mean(d^(2)).
    double gap = 0.0;
    std::string tag;
    std::string corpus;
};

/// KL and W1 between the two mapped distance sets of every triple, per K. Every input
/// needs a temperature; a missing one raises ManifestError.
std::vector<DistanceRow> run_distances(const std::vector<BatteryInput>& inputs, const BatteryOptions& options);

void write_distances_csv(std::ostream& out, const std::vector<DistanceRow>& rows);
nlohmann::json to_json(const std::vector<DistanceRow>& rows);

/// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_field(const std::string& value);

}  // namespace anchortest
