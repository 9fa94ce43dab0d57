#pragma once

#include "anchortest/anchor.hpp"
#include "anchortest/cluster.hpp"
#include "anchortest/corpus.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anchortest {

enum class TestMethod { anchored_johnson, hotelling_paired, nploc_mean, energy };

std::string_view to_string(TestMethod method);

struct TestReport {
    TestMethod method = TestMethod::anchored_johnson;
    double statistic = 0.0;
    double p_value = 1.0;
    /// Permutation replicates; 0 for the parametric Hotelling test.
    std::size_t replicates = 0;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    bool reject = false;
    std::optional<std::size_t> k;
    std::vector<std::string> labels;
    /// Extra numeric diagnostics (degrees of freedom, the literal Step-4 proportion, ...).
    std::map<std::string, double> metadata;
};

nlohmann::json to_json(const TestReport& report);

struct PermutationConfig {
    std::size_t replicates = 999;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    /// Worker threads for replicates (0 = hardware concurrency). Results do not depend on it.
    unsigned threads = 1;
};

/// Johnson's skewness-corrected paired t-statistic of the differences d:
///
///   T = m / s + mu3 * ((m / v)^2 / 3 + 1 / (6 v n)) / s,   s = sqrt(v / n)
///
/// with m the mean, v the (n-1)-denominator variance and mu3 = sum (d_i - m)^3 / (n-1).
/// Throws ArityError for n < 2 and DegeneracyError when all d_i are equal.
double johnson_t(std::span<const double> d);

/// Sign-flip permutation test of E[d_i] = 0 using johnson_t.
///
/// Replicate r flips signs with the RNG stream (seed, r). The p-value is the add-one
/// estimate (1 + #{|T_r| >= |T_obs|}) / (R + 1). The literal proportion
/// #{|T_obs| > |T_r|} / R is kept in metadata as "paper_step4_proportion".
/// All-zero differences raise VacuousTestError.
TestReport sign_flip_pvalue(const DiffVector& d, const PermutationConfig& config);

struct AnchoredConfig {
    std::size_t k = 2;
    KMeansConfig kmeans;
    PermutationConfig permutation;
};

/// Both non-anchor partitions and their mapped distance sets.
struct AnchoredMapping {
    Partition first_partition;
    Partition second_partition;
    MappedDistanceSet first;
    MappedDistanceSet second;
};

/// Clusters both non-anchors with one stream derived from `seed` and maps the partitions onto the anchor.
AnchoredMapping anchored_mapping(const EmbeddingMatrix& anchor, const EmbeddingMatrix& first,
                                 const EmbeddingMatrix& second, std::size_t k, const KMeansConfig& kmeans,
                                 std::uint64_t seed);

/// The anchored community-structure test: k-means on both non-anchors, mapped distances
/// on the anchor, paired differences, sign-flip Johnson test. Raises VacuousTestError when
/// both non-anchors induce the same mapped distances (identical structures).
TestReport anchored_test(const EmbeddingMatrix& anchor, const EmbeddingMatrix& first, const EmbeddingMatrix& second,
                         const AnchoredConfig& config);

/// Paired Hotelling T^2 on row differences with the F(p, n-p) reference distribution.
TestReport hotelling_paired(const Matrix& x, const Matrix& y, double alpha = 0.05);

/// n * dbar' S^-1 dbar on row differences, null by sign-flipping whole difference rows.
TestReport nploc_mean_test(const Matrix& x, const Matrix& y, const PermutationConfig& config);

/// (nx ny / (nx + ny)) * (2 E|x-y| - E|x-x'| - E|y-y'|), within-sample means over all
/// ordered pairs including i = j.
double energy_statistic(const Matrix& x, const Matrix& y);

/// Two-sample energy test; null by relabeling the pooled sample.
TestReport energy_test(const Matrix& x, const Matrix& y, const PermutationConfig& config);

}  // namespace anchortest
