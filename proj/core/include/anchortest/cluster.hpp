#pragma once

#include "anchortest/corpus.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace anchortest {

/// Assignment of n indices to k clusters. Partitions returned by the clustering
/// routines never contain an empty cluster.
struct Partition {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;
    double wcss = 0.0;

    std::size_t n() const noexcept { return assignment.size(); }
    std::vector<std::size_t> cluster_sizes() const;
};

struct KMeansConfig {
    std::size_t restarts = 10;
    std::size_t max_iter = 300;
    /// Stop when the relative WCSS change between iterations falls to this value.
    double tol = 1e-8;
    /// After Lloyd converges, move single points between clusters while that lowers WCSS
    /// (Hartigan transfers). Escapes Lloyd fixed points such as an isolated outlier cluster.
    bool hartigan = true;
    /// Throw if a Lloyd iteration ever increases WCSS (debug audit).
    bool check_monotone = false;
    /// Restarts run concurrently on this many threads (0 = hardware concurrency).
    unsigned threads = 1;
};

/// Best-of-restarts Lloyd clustering with k-means++ seeding, optionally refined by Hartigan transfers. Restart r draws from the
/// RNG stream (seed, r); the winner is the lowest WCSS, ties going to the lowest
/// restart index. Distance ties assign the lowest cluster id.
Partition kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansConfig& config = {});
inline Partition kmeans(const EmbeddingMatrix& m, std::size_t k, std::uint64_t seed, const KMeansConfig& config = {}) {
    return kmeans(m.values(), k, seed, config);
}

/// Sum over clusters of squared distances to the cluster mean.
double wcss(const Matrix& points, const Partition& part);

/// Globally WCSS-optimal partition into k non-empty blocks by exhaustive enumeration
/// of set partitions. Guarded to n <= 12.
Partition brute_force_partition(const Matrix& points, std::size_t k);

inline constexpr std::size_t kBruteForceMaxRows = 12;

/// Fraction of index pairs on which two labelings agree (same/different cluster).
double rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// True when a and b describe the same set partition, up to relabeling.
bool same_partition(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Throws ParameterError on ids outside [0, k) or size mismatch with n.
void check_partition(const Partition& part, std::size_t n, bool require_nonempty);

nlohmann::json to_json(const Partition& part);
Partition partition_from_json(const nlohmann::json& j);

}  // namespace anchortest
