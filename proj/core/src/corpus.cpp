#include "anchortest/corpus.hpp"

#include "anchortest/error.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace anchortest {

namespace {

void require_shape_and_finite(const Matrix& values) {
    if (values.rows() < 2) throw ArityError("embedding matrix needs at least 2 rows, got " + std::to_string(values.rows()));
    if (values.cols() < 1) throw DimensionError("embedding matrix needs at least 1 column");
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (!std::isfinite(values(i, j))) {
                throw ParseError(static_cast<std::size_t>(i), static_cast<std::size_t>(j), "non-finite value");
            }
        }
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_cell(std::string_view cell, std::size_t row, std::size_t col) {
    cell = trim(cell);
    if (cell.empty()) throw ParseError(row, col, "empty cell");
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        throw ParseError(row, col, "not a number: '" + std::string(cell) + "'");
    }
    if (!std::isfinite(value)) throw ParseError(row, col, "non-finite value");
    return value;
}

template <class T>
T to_little_endian(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
    v = to_little_endian(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_le(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("binary matrix truncated");
    return to_little_endian(v);
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(Matrix values, std::string label, bool unit_norm)
    : values_(std::move(values)), label_(std::move(label)), unit_norm_(unit_norm) {
    require_shape_and_finite(values_);
    if (unit_norm_) {
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            if (std::abs(values_.row(i).norm() - 1.0) > kUnitNormTolerance) {
                throw FormatError("row " + std::to_string(i) + " is flagged unit-norm but has norm " +
                                  std::to_string(values_.row(i).norm()));
            }
        }
    }
}

EmbeddingMatrix EmbeddingMatrix::relabeled(std::string label) const {
    EmbeddingMatrix copy = *this;
    copy.label_ = std::move(label);
    return copy;
}

MatrixFormat parse_matrix_format(std::string_view name) {
    if (name == "csv") return MatrixFormat::csv;
    if (name == "binary" || name == "bin") return MatrixFormat::binary;
    throw ParameterError("unknown matrix format '" + std::string(name) + "' (expected csv or binary)");
}

std::string_view to_string(MatrixFormat format) {
    return format == MatrixFormat::csv ? "csv" : "binary";
}

MatrixFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? MatrixFormat::csv : MatrixFormat::binary;
}

EmbeddingMatrix read_csv_matrix(std::istream& in, std::string label) {
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view view = trim(line);
        if (view.empty()) continue;
        std::size_t col = 0;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = view.find(',', start);
            const std::string_view cell = view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            values.push_back(parse_cell(cell, rows, col));
            ++col;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (rows == 0) {
            cols = col;
        } else if (col != cols) {
            throw FormatError("ragged rows: row 0 has " + std::to_string(cols) + " columns, row " +
                              std::to_string(rows) + " has " + std::to_string(col));
        }
        ++rows;
    }
    if (rows == 0) throw FormatError("no rows");
    Matrix m = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    return EmbeddingMatrix(std::move(m), std::move(label));
}

void write_csv_matrix(std::ostream& out, const Matrix& values) {
    std::array<char, 64> buf{};
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j) out.put(',');
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), values(i, j));
            out.write(buf.data(), res.ptr - buf.data());
        }
        out.put('\n');
    }
}

EmbeddingMatrix read_binary_matrix(std::istream& in, std::string label) {
    char magic[8];
    in.read(magic, sizeof magic);
    if (in.gcount() == 0) throw FormatError("no rows");
    if (!in || std::memcmp(magic, kBinaryMagic, sizeof magic) != 0) throw FormatError("bad binary matrix magic");
    const auto n = read_le<std::uint32_t>(in);
    const auto p = read_le<std::uint32_t>(in);
    if (n == 0) throw FormatError("no rows");
    Matrix m(n, p);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < p; ++j) {
            const double v = read_le<double>(in);
            if (!std::isfinite(v)) throw ParseError(i, j, "non-finite value");
            m(i, j) = v;
        }
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after binary matrix payload");
    return EmbeddingMatrix(std::move(m), std::move(label));
}

void write_binary_matrix(std::ostream& out, const Matrix& values) {
    constexpr auto limit = std::numeric_limits<std::uint32_t>::max();
    if (static_cast<std::uint64_t>(values.rows()) > limit || static_cast<std::uint64_t>(values.cols()) > limit) {
        throw DimensionError("matrix too large for binary format");
    }
    out.write(kBinaryMagic, sizeof kBinaryMagic);
    write_le(out, static_cast<std::uint32_t>(values.rows()));
    write_le(out, static_cast<std::uint32_t>(values.cols()));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) write_le(out, values(i, j));
    }
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format, std::string label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (label.empty()) label = path.stem().string();
    return format == MatrixFormat::csv ? read_csv_matrix(in, std::move(label))
                                       : read_binary_matrix(in, std::move(label));
}

void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    if (format == MatrixFormat::csv) {
        write_csv_matrix(out, m.values());
    } else {
        write_binary_matrix(out, m.values());
    }
    if (!out) throw IoError("write failed for " + path.string());
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& m) {
    Matrix out = m.values();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double norm = out.row(i).norm();
        if (norm == 0.0) throw DegeneracyError("cannot normalize all-zero row " + std::to_string(i));
        // Rows already unit to rounding are kept as-is so normalization is idempotent bit for bit.
        if (std::abs(norm - 1.0) > 8 * std::numeric_limits<double>::epsilon()) out.row(i) /= norm;
    }
    return EmbeddingMatrix(std::move(out), m.label(), true);
}

const EmbeddingMatrix& PairedCollection::at(std::string_view role) const {
    for (const auto& [r, m] : members_) {
        if (r == role) return m;
    }
    throw PairingError("no member with role '" + std::string(role) + "'");
}

bool PairedCollection::contains(std::string_view role) const noexcept {
    return std::any_of(members_.begin(), members_.end(), [&](const Member& m) { return m.first == role; });
}

std::vector<std::string> PairedCollection::roles() const {
    std::vector<std::string> out;
    out.reserve(members_.size());
    for (const auto& [r, m] : members_) out.push_back(r);
    return out;
}

PairedCollection validate_pairing(std::vector<PairedCollection::Member> members) {
    if (members.size() < 2) {
        throw ArityError("pairing needs at least 2 datasets, got " + std::to_string(members.size()));
    }
    std::set<std::string> seen;
    for (const auto& [role, m] : members) {
        if (!seen.insert(role).second) throw PairingError("duplicate role '" + role + "'");
    }
    const std::size_t n = members.front().second.rows();
    const bool same = std::all_of(members.begin(), members.end(), [n](const auto& m) { return m.second.rows() == n; });
    if (!same) {
        std::ostringstream msg;
        msg << "row counts differ:";
        for (const auto& [role, m] : members) msg << ' ' << role << "=" << m.rows();
        throw PairingError(msg.str());
    }
    PairedCollection c;
    c.members_ = std::move(members);
    c.n_ = n;
    return c;
}

}  // namespace anchortest
