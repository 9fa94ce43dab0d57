#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace anchortest {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// n x p embedding matrix; row i is the pairing key shared with every other
/// dataset of a collection. Immutable once constructed.
///
/// Construction enforces n >= 2, p >= 1 and finite entries. When `unit_norm` is
/// set, every row must have l2 norm within 1e-6 of one.
class EmbeddingMatrix {
public:
    static constexpr double kUnitNormTolerance = 1e-6;

    explicit EmbeddingMatrix(Matrix values, std::string label = {}, bool unit_norm = false);

    std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    const Matrix& values() const noexcept { return values_; }
    const std::string& label() const noexcept { return label_; }
    bool unit_norm() const noexcept { return unit_norm_; }

    EmbeddingMatrix relabeled(std::string label) const;

private:
    Matrix values_;
    std::string label_;
    bool unit_norm_ = false;
};

enum class MatrixFormat { csv, binary };

MatrixFormat parse_matrix_format(std::string_view name);
std::string_view to_string(MatrixFormat format);
/// ".csv" means csv, anything else binary.
MatrixFormat format_for_path(const std::filesystem::path& path);

/// Binary layout: 8-byte magic, n and p as little-endian uint32, then n*p
/// little-endian float64 values in row-major order.
inline constexpr char kBinaryMagic[8] = {'E', 'M', 'B', 'M', 'A', 'T', '0', '1'};
inline constexpr std::size_t kBinaryHeaderSize = 16;

EmbeddingMatrix read_csv_matrix(std::istream& in, std::string label = {});
void write_csv_matrix(std::ostream& out, const Matrix& values);
EmbeddingMatrix read_binary_matrix(std::istream& in, std::string label = {});
void write_binary_matrix(std::ostream& out, const Matrix& values);

EmbeddingMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format, std::string label = {});
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path, MatrixFormat format);

/// Scales every row to unit l2 norm. Throws DegeneracyError naming the first all-zero row.
/// Rows that already have unit norm are left bitwise unchanged.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m);

/// Index-paired datasets keyed by role ("anchor", "nonanchor_1", ...). Insertion
/// order is preserved; rows are never reordered.
class PairedCollection {
public:
    using Member = std::pair<std::string, EmbeddingMatrix>;

    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return members_.size(); }
    const std::vector<Member>& members() const noexcept { return members_; }
    const EmbeddingMatrix& at(std::string_view role) const;
    bool contains(std::string_view role) const noexcept;
    std::vector<std::string> roles() const;

private:
    friend PairedCollection validate_pairing(std::vector<Member> members);
    std::vector<Member> members_;
    std::size_t n_ = 0;
};

/// Builds a collection iff all members share one row count. Requires >= 2 members
/// and unique roles.
PairedCollection validate_pairing(std::vector<PairedCollection::Member> members);

}  // namespace anchortest
