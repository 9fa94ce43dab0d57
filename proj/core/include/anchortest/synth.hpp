#pragma once

#include "anchortest/corpus.hpp"
#include "anchortest/stattests.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace anchortest {

enum class Structure { shared, independent };

/// Gaussian-mixture scenario. Each dataset gets its own randomly rotated and offset
/// community means, `separation * noise_sd` apart, with isotropic noise of `noise_sd`.
struct ScenarioConfig {
    std::size_t n = 300;
    std::size_t dim = 2;
    std::size_t k_true = 2;
    double separation = 8.0;
    double noise_sd = 1.0;
    Structure structure = Structure::shared;
    std::uint64_t seed = 0;
};

void validate(const ScenarioConfig& cfg);
nlohmann::json to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

/// Roles "anchor", "nonanchor_1", "nonanchor_2" plus the latent labels that generated them.
struct SyntheticTriple {
    PairedCollection data;
    std::vector<std::size_t> anchor_labels;
    std::vector<std::size_t> first_labels;
    std::vector<std::size_t> second_labels;
};

/// Anchor, D1 and D2 all follow one latent labeling.
SyntheticTriple generate_null_triple(const ScenarioConfig& cfg);
/// Anchor and D1 follow z; D2 follows an independent redraw z' that is not a relabeling of z.
SyntheticTriple generate_alt_triple(const ScenarioConfig& cfg);
/// Builds a triple from explicit labelings. With structure = independent, equal first and
/// second partitions raise GuardError.
SyntheticTriple generate_from_labels(const ScenarioConfig& cfg, std::vector<std::size_t> anchor_labels,
                                     std::vector<std::size_t> first_labels, std::vector<std::size_t> second_labels);

/// Latent labels in [0, k), each community with at least two members.
std::vector<std::size_t> draw_labels(std::size_t n, std::size_t k, std::uint64_t seed);

/// Rand index between two independent uniform labelings over k communities, n -> infinity.
double expected_rand_index_independent(std::size_t k);

/// Paraphrase-chain analog: original O, two parallel paraphrases G and G' sharing one
/// labeling, and a second-generation paraphrase S. Each paraphrase step reassigns every
/// label with probability drift(rho) = clamp(base_drift + drift_per_temperature * rho, 0, 1).
struct ChainConfig {
    ScenarioConfig base;
    std::vector<double> temperatures{0.1, 0.4, 0.7, 1.0, 1.5};
    double base_drift = 0.1;
    double drift_per_temperature = 0.1;

    double drift(double rho) const;
};

struct ChainLevel {
    double rho = 0.0;
    EmbeddingMatrix g;
    EmbeddingMatrix g_prime;
    EmbeddingMatrix s;
    std::vector<std::size_t> g_labels;
    std::vector<std::size_t> s_labels;
};

struct ChainCorpus {
    EmbeddingMatrix original;
    std::vector<std::size_t> original_labels;
    std::vector<ChainLevel> levels;
};

ChainCorpus generate_chain(const ChainConfig& cfg);

enum class ScenarioKind { null, alt };
std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);

struct MonteCarloConfig {
    std::size_t replicates = 200;
    /// The permutation seed inside `test` is ignored; replicate seeds derive from the scenario seed.
    AnchoredConfig test;
    unsigned threads = 0;
};

struct MonteCarloReport {
    ScenarioKind scenario = ScenarioKind::null;
    std::size_t replicates = 0;
    std::size_t rejections = 0;
    /// Replicates whose non-anchor structures coincided exactly (counted as non-rejections).
    std::size_t vacuous = 0;
    double alpha = 0.05;
    double rate = 0.0;
    /// Wilson score interval at 95%.
    double ci_low = 0.0;
    double ci_high = 1.0;
    bool ci_degenerate = false;
    double mean_runtime_ms = 0.0;
    /// Per-replicate p-values, 1.0 for vacuous replicates.
    std::vector<double> p_values;
};

/// Runs the anchored test on `replicates` independently seeded triples. Replicate m uses
/// scenario seed derive(cfg.seed, m), so the report does not depend on thread count.
MonteCarloReport monte_carlo(ScenarioKind scenario, const ScenarioConfig& cfg, const MonteCarloConfig& config);

/// Runtime is left out so the document is reproducible byte for byte.
nlohmann::json to_json(const MonteCarloReport& report);

}  // namespace anchortest
