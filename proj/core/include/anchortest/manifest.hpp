#pragma once

#include "anchortest/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace anchortest {

struct ManifestEntry {
    std::filesystem::path path;
    /// "anchor" or "nonanchor_<k>" drive the default hypothesis expansion.
    std::string role;
    /// Generation temperature; absent for human-written data.
    std::optional<double> temperature;
    MatrixFormat format = MatrixFormat::binary;
    /// Independent collection this dataset belongs to (one table block per corpus).
    std::string corpus = "default";
    /// Name used by explicit hypotheses; defaults to the role.
    std::string name;
};

struct ExperimentGrid {
    std::vector<std::size_t> k_values{2, 3, 4, 5};
    double alpha = 0.05;
    std::size_t permutations = 999;
    std::uint64_t seed = 0;
};

/// Explicit H0(anchor, {first, second}) design, datasets referenced by name.
struct HypothesisSpec {
    std::string tag;
    std::string anchor;
    std::string first;
    std::string second;
    /// Result of an externally computed ball-divergence test, if any.
    std::optional<double> ball_pvalue;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    ExperimentGrid grid;
    std::vector<HypothesisSpec> hypotheses;
};

/// One concrete test triple after expanding a manifest over corpora and temperatures.
struct TestTriple {
    std::string corpus;
    std::optional<double> rho;
    std::string tag;
    ManifestEntry anchor;
    ManifestEntry first;
    ManifestEntry second;
    std::optional<double> ball_pvalue;
};

/// Relative dataset paths are resolved against `base_dir`.
DatasetManifest parse_manifest(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const DatasetManifest& manifest);

/// Checks grid values and that every dataset path exists.
void validate_manifest(const DatasetManifest& manifest);

/// Expands a manifest into test triples, ordered by corpus (first appearance),
/// then temperature, then hypothesis order.
///
/// Without explicit hypotheses, each (corpus, temperature) group needs exactly one
/// "anchor" entry and at least two non-anchors; every pair of non-anchors (sorted by
/// role) becomes a triple. Entries without a temperature are shared by all
/// temperature groups of their corpus.
std::vector<TestTriple> expand_triples(const DatasetManifest& manifest);

std::string default_hypothesis_tag(const std::string& anchor, const std::string& first, const std::string& second);

}  // namespace anchortest
