#include "anchortest/error.hpp"
#include "anchortest/preprocess.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace anchortest;
using testsupport::gaussian_matrix;

namespace {

Matrix line_points() {
    Matrix m(4, 2);
    m << 1, 2, 2, 4, 3, 6, 6, 12;
    return m;
}

double reconstruction_error(const Matrix& data, std::size_t dim) {
    const auto model = fit_pca(data, dim);
    return (reconstruct(model, project(model, data)) - data).squaredNorm();
}

}  // namespace

TEST(Pca, CollinearPointsGiveOneComponent) {
    const auto model = fit_pca(line_points(), 2);
    EXPECT_NEAR(model.components(0, 0), 1.0 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(model.components(0, 1), 2.0 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(model.explained_variance(1), 0.0, 1e-12);
    EXPECT_GT(model.explained_variance(0), 0.0);
}

TEST(Pca, LineProjectionIsSignedDistanceFromMean) {
    const Matrix data = line_points();
    const EmbeddingMatrix m(data);
    const auto model = fit_pca(m, 2);
    const auto reduced = apply_pca(model, m);
    const Eigen::RowVector2d mean(3.0, 6.0);
    for (long i = 0; i < data.rows(); ++i) {
        const Eigen::RowVector2d centered = data.row(i) - mean;
        const double sign = centered(0) >= 0 ? 1.0 : -1.0;
        EXPECT_NEAR(reduced.values()(i, 0), sign * centered.norm(), 1e-12);
        EXPECT_NEAR(reduced.values()(i, 1), 0.0, 1e-12);
    }
}

TEST(Pca, DimensionRange) {
    const Matrix data = gaussian_matrix(3, 4, 1);
    EXPECT_THROW(fit_pca(data, 3), DimensionError);
    EXPECT_THROW(fit_pca(data, 0), DimensionError);
    EXPECT_NO_THROW(fit_pca(data, 2));
    EXPECT_THROW(fit_pca(gaussian_matrix(10, 3, 1), 4), DimensionError);
}

TEST(Pca, FullRankReconstructionIsExact) {
    const Matrix data = gaussian_matrix(10, 4, 7);
    EXPECT_LE(reconstruction_error(data, 4), 1e-9);
}

TEST(Pca, MeanRowMapsToOrigin) {
    const Matrix data = gaussian_matrix(12, 5, 3);
    const auto model = fit_pca(data, 3);
    const Matrix mean_row = model.mean.transpose();
    EXPECT_LE(project(model, mean_row).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, IdentityModelLeavesInputUnchanged) {
    PcaModel model;
    model.mean = Vector::Zero(3);
    model.components = Matrix::Identity(3, 3);
    model.explained_variance = Vector::Ones(3);
    const EmbeddingMatrix m(gaussian_matrix(5, 3, 9));
    EXPECT_TRUE((apply_pca(model, m).values().array() == m.values().array()).all());
}

TEST(Pca, ColumnMismatch) {
    const auto model = fit_pca(gaussian_matrix(8, 4, 1), 2);
    EXPECT_THROW(apply_pca(model, EmbeddingMatrix(gaussian_matrix(8, 5, 1))), DimensionError);
}

TEST(PcaProperty, ComponentsOrthonormalAndVarianceSorted) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const Matrix data = gaussian_matrix(20, 6, seed) * gaussian_matrix(6, 6, seed + 1000);
        const auto model = fit_pca(data, 5);
        const Matrix gram = model.components * model.components.transpose();
        EXPECT_LE((gram - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-8);
        for (long i = 1; i < model.explained_variance.size(); ++i) {
            EXPECT_LE(model.explained_variance(i), model.explained_variance(i - 1));
            EXPECT_GE(model.explained_variance(i), 0.0);
        }
        for (long r = 0; r < model.components.rows(); ++r) {
            Eigen::Index at = 0;
            model.components.row(r).cwiseAbs().maxCoeff(&at);
            EXPECT_GT(model.components(r, at), 0.0);
        }
    }
}

TEST(PcaProperty, ReconstructionErrorNonIncreasingInDim) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix data = gaussian_matrix(15, 7, seed);
        double previous = INFINITY;
        for (std::size_t dim = 1; dim <= 7; ++dim) {
            const double err = reconstruction_error(data, dim);
            EXPECT_LE(err, previous + 1e-9) << "seed " << seed << " dim " << dim;
            previous = err;
        }
    }
}

TEST(PcaProperty, FullRankProjectionPreservesDistances) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        // Rank-3 data embedded in 6 dimensions.
        const Matrix data = gaussian_matrix(12, 3, seed) * gaussian_matrix(3, 6, seed + 50);
        const auto model = fit_pca(data, 3);
        const Matrix reduced = project(model, data);
        double worst = 0.0;
        for (long i = 0; i < data.rows(); ++i) {
            for (long j = i + 1; j < data.rows(); ++j) {
                worst = std::max(worst, std::abs((data.row(i) - data.row(j)).norm() - (reduced.row(i) - reduced.row(j)).norm()));
            }
        }
        EXPECT_LE(worst, 1e-8);
    }
}

TEST(PcaProperty, RefitIsReproducible) {
    const Matrix data = gaussian_matrix(30, 8, 11);
    const auto a = fit_pca(data, 4);
    const auto b = fit_pca(data, 4);
    EXPECT_LE((a.components - b.components).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((a.explained_variance - b.explained_variance).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, ReduceCollectionPerDataset) {
    const auto c = validate_pairing({{"anchor", EmbeddingMatrix(gaussian_matrix(20, 6, 1))},
                                     {"nonanchor_1", EmbeddingMatrix(gaussian_matrix(20, 7, 2))},
                                     {"nonanchor_2", EmbeddingMatrix(gaussian_matrix(20, 5, 3))}});
    const auto r = reduce_collection(c, 3, PcaMode::per_dataset);
    ASSERT_EQ(r.models.size(), 3U);
    for (const auto& [role, m] : r.data.members()) {
        EXPECT_EQ(m.rows(), 20U);
        EXPECT_EQ(m.cols(), 3U);
    }
    EXPECT_NE(r.models[0].ambient_dim(), r.models[1].ambient_dim());
}

TEST(Pca, JointOnIdenticalCopiesGivesIdenticalMembers) {
    const EmbeddingMatrix m(gaussian_matrix(20, 6, 4));
    const auto c = validate_pairing({{"a", m}, {"b", m}, {"c", m}});
    const auto r = reduce_collection(c, 2, PcaMode::joint);
    ASSERT_EQ(r.models.size(), 1U);
    EXPECT_TRUE((r.data.at("a").values().array() == r.data.at("b").values().array()).all());
    EXPECT_TRUE((r.data.at("a").values().array() == r.data.at("c").values().array()).all());
}

TEST(Pca, JointDiffersFromPerDatasetOnDistinctData) {
    const auto c = validate_pairing({{"a", EmbeddingMatrix(gaussian_matrix(25, 6, 5))},
                                     {"b", EmbeddingMatrix(gaussian_matrix(25, 6, 6, 3.0))}});
    const auto joint = reduce_collection(c, 2, PcaMode::joint);
    const auto separate = reduce_collection(c, 2, PcaMode::per_dataset);
    EXPECT_GT((joint.data.at("a").values() - separate.data.at("a").values()).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Pca, JointNeedsEqualWidth) {
    const auto c = validate_pairing({{"a", EmbeddingMatrix(gaussian_matrix(10, 4, 1))},
                                     {"b", EmbeddingMatrix(gaussian_matrix(10, 5, 2))}});
    EXPECT_THROW(reduce_collection(c, 2, PcaMode::joint), DimensionError);
}

TEST(Pca, ModeNames) {
    EXPECT_EQ(parse_pca_mode("joint"), PcaMode::joint);
    EXPECT_EQ(parse_pca_mode("per_dataset"), PcaMode::per_dataset);
    EXPECT_THROW(parse_pca_mode("both"), ParameterError);
}

TEST(Pca, JsonRoundTrip) {
    const auto model = fit_pca(gaussian_matrix(12, 5, 8), 3);
    const auto back = pca_from_json(to_json(model));
    EXPECT_LE((back.components - model.components).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((back.mean - model.mean).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LE((back.explained_variance - model.explained_variance).cwiseAbs().maxCoeff(), 1e-15);
}
