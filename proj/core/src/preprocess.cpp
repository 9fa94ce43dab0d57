#include "anchortest/preprocess.hpp"

#include "anchortest/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace anchortest {

using nlohmann::json;

namespace {

void fix_sign(Eigen::Ref<Eigen::RowVectorXd> component) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < component.size(); ++j) {
        const double a = std::abs(component(j));
        if (a > best) {
            best = a;
            arg = j;
        }
    }
    if (component(arg) < 0) component = -component;
}

}  // namespace

PcaModel fit_pca(const Matrix& data, std::size_t dim) {
    const auto n = static_cast<std::size_t>(data.rows());
    const auto ambient = static_cast<std::size_t>(data.cols());
    if (n < 2) throw ArityError("PCA needs at least 2 rows");
    const std::size_t max_dim = std::min(n - 1, ambient);
    if (dim < 1 || dim > max_dim) {
        throw DimensionError("PCA dimension " + std::to_string(dim) + " outside [1, " + std::to_string(max_dim) +
                             "] for " + std::to_string(n) + " x " + std::to_string(ambient) + " data");
    }

    PcaModel model;
    model.mean = data.colwise().mean().transpose();
    const Matrix centered = data.rowwise() - model.mean.transpose();
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DegeneracyError("covariance eigendecomposition failed");

    // Eigen returns ascending eigenvalues; walk from the top.
    model.components.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(ambient));
    model.explained_variance.resize(static_cast<Eigen::Index>(dim));
    for (std::size_t c = 0; c < dim; ++c) {
        const auto src = static_cast<Eigen::Index>(ambient - 1 - c);
        const auto dst = static_cast<Eigen::Index>(c);
        model.components.row(dst) = solver.eigenvectors().col(src).transpose();
        fix_sign(model.components.row(dst));
        model.explained_variance(dst) = std::max(0.0, solver.eigenvalues()(src));
    }
    return model;
}

PcaModel fit_pca(const EmbeddingMatrix& m, std::size_t dim) { return fit_pca(m.values(), dim); }

Matrix project(const PcaModel& model, const Matrix& data) {
    if (static_cast<std::size_t>(data.cols()) != model.ambient_dim()) {
        throw DimensionError("PCA model expects " + std::to_string(model.ambient_dim()) + " columns, got " +
                             std::to_string(data.cols()));
    }
    return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

EmbeddingMatrix apply_pca(const PcaModel& model, const EmbeddingMatrix& m) {
    return EmbeddingMatrix(project(model, m.values()), m.label());
}

Matrix reconstruct(const PcaModel& model, const Matrix& reduced) {
    if (static_cast<std::size_t>(reduced.cols()) != model.dim()) {
        throw DimensionError("reduced data has " + std::to_string(reduced.cols()) + " columns, model has " +
                             std::to_string(model.dim()));
    }
    Matrix out = reduced * model.components;
    out.rowwise() += model.mean.transpose();
    return out;
}

PcaMode parse_pca_mode(std::string_view name) {
    if (name == "per_dataset" || name == "per-dataset") return PcaMode::per_dataset;
    if (name == "joint") return PcaMode::joint;
    throw ParameterError("unknown PCA mode '" + std::string(name) + "' (expected per_dataset or joint)");
}

std::string_view to_string(PcaMode mode) { return mode == PcaMode::joint ? "joint" : "per_dataset"; }

ReducedCollection reduce_collection(const PairedCollection& c, std::size_t dim, PcaMode mode) {
    std::vector<PairedCollection::Member> reduced;
    std::vector<PcaModel> models;
    if (mode == PcaMode::per_dataset) {
        for (const auto& [role, m] : c.members()) {
            models.push_back(fit_pca(m, dim));
            reduced.emplace_back(role, apply_pca(models.back(), m));
        }
    } else {
        const auto cols = c.members().front().second.cols();
        Eigen::Index total = 0;
        for (const auto& [role, m] : c.members()) {
            if (m.cols() != cols) throw DimensionError("joint PCA needs equal column counts; '" + role + "' differs");
            total += static_cast<Eigen::Index>(m.rows());
        }
        Matrix stacked(total, static_cast<Eigen::Index>(cols));
        Eigen::Index offset = 0;
        for (const auto& [role, m] : c.members()) {
            stacked.middleRows(offset, static_cast<Eigen::Index>(m.rows())) = m.values();
            offset += static_cast<Eigen::Index>(m.rows());
        }
        models.push_back(fit_pca(stacked, dim));
        for (const auto& [role, m] : c.members()) reduced.emplace_back(role, apply_pca(models.front(), m));
    }
    return {validate_pairing(std::move(reduced)), std::move(models)};
}

json to_json(const PcaModel& model) {
    json components = json::array();
    for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
        components.push_back(std::vector<double>(model.components.row(i).begin(), model.components.row(i).end()));
    }
    return {{"mean", std::vector<double>(model.mean.begin(), model.mean.end())},
            {"components", std::move(components)},
            {"explained_variance", std::vector<double>(model.explained_variance.begin(), model.explained_variance.end())}};
}

PcaModel pca_from_json(const json& j) {
    try {
        const auto mean = j.at("mean").get<std::vector<double>>();
        const auto rows = j.at("components").get<std::vector<std::vector<double>>>();
        const auto var = j.at("explained_variance").get<std::vector<double>>();
        if (rows.size() != var.size()) throw FormatError("PCA model: components and explained_variance disagree");
        PcaModel model;
        model.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
        model.components.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(mean.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != mean.size()) throw FormatError("PCA model: component width differs from mean");
            for (std::size_t k = 0; k < rows[i].size(); ++k) {
                model.components(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
            }
        }
        model.explained_variance = Eigen::Map<const Vector>(var.data(), static_cast<Eigen::Index>(var.size()));
        return model;
    } catch (const json::exception& e) {
        throw FormatError(std::string("PCA model JSON: ") + e.what());
    }
}

}  // namespace anchortest
