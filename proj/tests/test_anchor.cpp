#include "anchortest/anchor.hpp"
#include "anchortest/error.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace anchortest;
using testsupport::column;
using testsupport::gaussian_matrix;

namespace {

const EmbeddingMatrix kLineAnchor(column({0.0, 2.0, 10.0}), "A");
const Partition kSplit{2, {0, 0, 1}, 0.0};

Partition random_partition(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Partition part{k, std::vector<std::size_t>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) part.assignment[i] = i < k ? i : gen() % k;
    std::shuffle(part.assignment.begin(), part.assignment.end(), gen);
    return part;
}

}  // namespace

TEST(MappedCenters, HandArithmetic) {
    const Matrix c = mapped_centers(kLineAnchor, kSplit);
    ASSERT_EQ(c.rows(), 2);
    EXPECT_EQ(c(0, 0), 1.0);
    EXPECT_EQ(c(1, 0), 10.0);
}

TEST(MappedCenters, SingletonsAndSingleCluster) {
    const Matrix a = gaussian_matrix(5, 3, 1);
    const Matrix singletons = mapped_centers(a, {5, {0, 1, 2, 3, 4}, 0.0});
    EXPECT_TRUE((singletons.array() == a.array()).all());
    const Matrix all = mapped_centers(a, {1, {0, 0, 0, 0, 0}, 0.0});
    EXPECT_LE((all.row(0) - a.colwise().mean()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MappedCenters, SizeMismatch) {
    EXPECT_THROW(mapped_centers(kLineAnchor, {2, {0, 1}, 0.0}), PairingError);
    EXPECT_THROW(mapped_centers(kLineAnchor, {3, {0, 0, 1}, 0.0}), ParameterError);
}

TEST(MappedDistances, HandArithmetic) {
    const auto d = mapped_distances(kLineAnchor, kSplit, "D1");
    EXPECT_EQ(d.distances, (std::vector<double>{1.0, 1.0, 0.0}));
    EXPECT_EQ(d.anchor, "A");
    EXPECT_EQ(d.source, "D1");
    EXPECT_EQ(d.k, 2U);
}

TEST(MappedDistances, IdenticalAnchorRowsGiveZero) {
    const EmbeddingMatrix a(Matrix::Constant(6, 2, 0.25));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        for (double v : mapped_distances(a, random_partition(6, 3, seed)).distances) EXPECT_EQ(v, 0.0);
    }
}

TEST(PairedDifferences, Arithmetic) {
    MappedDistanceSet a{{1, 1, 0}, "D1", "A", 2};
    MappedDistanceSet b{{0, 1, 1}, "D2", "A", 2};
    EXPECT_EQ(paired_differences(a, b).diffs, (std::vector<double>{1, 0, -1}));
    EXPECT_EQ(paired_differences(a, a).diffs, (std::vector<double>{0, 0, 0}));
    b.anchor = "B";
    EXPECT_THROW(paired_differences(a, b), PairingError);
    b.anchor = "A";
    b.distances.pop_back();
    EXPECT_THROW(paired_differences(a, b), PairingError);
}

TEST(AnchorProperty, RelabelingLeavesDistancesBitwiseEqual) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const EmbeddingMatrix a(gaussian_matrix(30, 4, seed));
        const auto part = random_partition(30, 4, seed + 7);
        Partition relabeled = part;
        const std::vector<std::size_t> map{3, 1, 0, 2};
        for (auto& c : relabeled.assignment) c = map[c];
        EXPECT_EQ(mapped_distances(a, part).distances, mapped_distances(a, relabeled).distances);
    }
}

TEST(AnchorProperty, SamePartitionGivesIdenticalSetsAndZeroDiffs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const EmbeddingMatrix a(gaussian_matrix(25, 3, seed));
        const auto part = random_partition(25, 3, seed);
        Partition swapped = part;
        for (auto& c : swapped.assignment) c = (c + 1) % 3;
        const auto d = paired_differences(mapped_distances(a, part), mapped_distances(a, swapped));
        for (double v : d.diffs) EXPECT_EQ(v, 0.0);
    }
}

TEST(AnchorProperty, TranslationEquivariance) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix a = gaussian_matrix(20, 3, seed);
        const Eigen::RowVectorXd shift = gaussian_matrix(1, 3, seed + 99, 100.0).row(0);
        const Matrix moved = a.rowwise() + shift;
        const auto part = random_partition(20, 3, seed);
        const auto d0 = mapped_distances(EmbeddingMatrix(a), part).distances;
        const auto d1 = mapped_distances(EmbeddingMatrix(moved), part).distances;
        for (std::size_t i = 0; i < d0.size(); ++i) EXPECT_NEAR(d0[i], d1[i], 1e-9);
    }
}

TEST(AnchorProperty, DistancesFiniteAndNonNegative) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto d = mapped_distances(EmbeddingMatrix(gaussian_matrix(40, 5, seed)), random_partition(40, 5, seed));
        ASSERT_EQ(d.distances.size(), 40U);
        for (double v : d.distances) {
            EXPECT_TRUE(std::isfinite(v));
            EXPECT_GE(v, 0.0);
        }
    }
}

TEST(MappedDistances, CsvOneValuePerLine) {
    std::ostringstream out;
    write_distances_csv(out, mapped_distances(kLineAnchor, kSplit));
    EXPECT_EQ(out.str(), "1\n1\n0\n");
}
