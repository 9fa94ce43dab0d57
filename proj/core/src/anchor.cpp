#include "anchortest/anchor.hpp"

#include "anchortest/error.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>

namespace anchortest {

Matrix mapped_centers(const Matrix& anchor, const Partition& part) {
    const auto n = static_cast<std::size_t>(anchor.rows());
    if (part.n() != n) {
        throw PairingError("partition has " + std::to_string(part.n()) + " indices, anchor has " + std::to_string(n) +
                           " rows");
    }
    check_partition(part, n, true);
    Matrix centers = Matrix::Zero(static_cast<Eigen::Index>(part.k), anchor.cols());
    std::vector<std::size_t> sizes(part.k, 0);
    // Ascending index order per cluster: equal set partitions give bitwise-equal centers.
    for (std::size_t i = 0; i < n; ++i) {
        centers.row(static_cast<Eigen::Index>(part.assignment[i])) += anchor.row(static_cast<Eigen::Index>(i));
        ++sizes[part.assignment[i]];
    }
    for (std::size_t c = 0; c < part.k; ++c) {
        centers.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
    }
    return centers;
}

MappedDistanceSet mapped_distances(const EmbeddingMatrix& anchor, const Partition& part, std::string source) {
    const Matrix centers = mapped_centers(anchor.values(), part);
    MappedDistanceSet out;
    out.distances.resize(anchor.rows());
    for (std::size_t i = 0; i < anchor.rows(); ++i) {
        out.distances[i] = (anchor.values().row(static_cast<Eigen::Index>(i)) -
                            centers.row(static_cast<Eigen::Index>(part.assignment[i])))
                               .norm();
    }
    out.source = std::move(source);
    out.anchor = anchor.label();
    out.k = part.k;
    return out;
}

DiffVector paired_differences(const MappedDistanceSet& first, const MappedDistanceSet& second) {
    if (first.anchor != second.anchor) {
        throw PairingError("distance sets live in different anchor spaces ('" + first.anchor + "' vs '" +
                           second.anchor + "')");
    }
    if (first.distances.size() != second.distances.size()) {
        throw PairingError("distance sets differ in length: " + std::to_string(first.distances.size()) + " vs " +
                           std::to_string(second.distances.size()));
    }
    DiffVector d;
    d.diffs.resize(first.distances.size());
    for (std::size_t i = 0; i < d.diffs.size(); ++i) d.diffs[i] = first.distances[i] - second.distances[i];
    return d;
}

void write_distances_csv(std::ostream& out, const MappedDistanceSet& set) {
    std::array<char, 64> buf{};
    for (double d : set.distances) {
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), d);
        out.write(buf.data(), res.ptr - buf.data());
        out.put('\n');
    }
}

void save_distances_csv(const MappedDistanceSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    write_distances_csv(out, set);
}

}  // namespace anchortest
