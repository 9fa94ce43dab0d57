#pragma once

#include "anchortest/cluster.hpp"
#include "anchortest/corpus.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace anchortest {

/// Distances from each anchor row to the anchor-space center of the cluster that
/// a non-anchor partition puts it in.
struct MappedDistanceSet {
    std::vector<double> distances;
    std::string source;
    std::string anchor;
    std::size_t k = 0;
};

/// Elementwise first - second of two mapped distance sets over the same anchor.
struct DiffVector {
    std::vector<double> diffs;

    std::size_t size() const noexcept { return diffs.size(); }
};

/// Center k is the mean of the anchor rows whose indices fall in cluster k.
Matrix mapped_centers(const Matrix& anchor, const Partition& part);
inline Matrix mapped_centers(const EmbeddingMatrix& anchor, const Partition& part) {
    return mapped_centers(anchor.values(), part);
}

/// l2 distance from anchor row i to the mapped center of i's cluster.
MappedDistanceSet mapped_distances(const EmbeddingMatrix& anchor, const Partition& part, std::string source = {});

/// Throws PairingError when the sets refer to different anchors or lengths.
DiffVector paired_differences(const MappedDistanceSet& first, const MappedDistanceSet& second);

/// One distance per line.
void write_distances_csv(std::ostream& out, const MappedDistanceSet& set);
void save_distances_csv(const MappedDistanceSet& set, const std::filesystem::path& path);

}  // namespace anchortest
