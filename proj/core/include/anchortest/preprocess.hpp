#pragma once

#include "anchortest/corpus.hpp"

#include <json.hpp>

#include <cstddef>
#include <string_view>
#include <vector>

namespace anchortest {

/// Linear projection onto the leading principal axes of a dataset.
///
/// `components` is dim x ambient with orthonormal rows; `explained_variance` holds the
/// matching covariance eigenvalues ((n-1) denominator), non-increasing. Each component's
/// largest-magnitude coordinate is positive, which makes fits reproducible.
struct PcaModel {
    Vector mean;
    Matrix components;
    Vector explained_variance;

    std::size_t ambient_dim() const noexcept { return static_cast<std::size_t>(components.cols()); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(components.rows()); }
};

/// Requires 1 <= dim <= min(n - 1, ambient).
PcaModel fit_pca(const Matrix& data, std::size_t dim);
PcaModel fit_pca(const EmbeddingMatrix& m, std::size_t dim);

/// Centered projections, n x dim. Label is kept; the unit-norm flag is dropped.
EmbeddingMatrix apply_pca(const PcaModel& model, const EmbeddingMatrix& m);
Matrix project(const PcaModel& model, const Matrix& data);
/// Maps reduced coordinates back to the ambient space.
Matrix reconstruct(const PcaModel& model, const Matrix& reduced);

enum class PcaMode { per_dataset, joint };
PcaMode parse_pca_mode(std::string_view name);
std::string_view to_string(PcaMode mode);

struct ReducedCollection {
    PairedCollection data;
    /// per_dataset: one model per member, in member order. joint: a single model.
    std::vector<PcaModel> models;
};

ReducedCollection reduce_collection(const PairedCollection& c, std::size_t dim, PcaMode mode);

nlohmann::json to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);

}  // namespace anchortest
