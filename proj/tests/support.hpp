#pragma once

#include "anchortest/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testsupport {

/// Directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("anchortest_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline anchortest::Matrix gaussian_matrix(long rows, long cols, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, sd);
    anchortest::Matrix m(rows, cols);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) m(i, j) = normal(gen);
    }
    return m;
}

inline anchortest::Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    anchortest::Matrix m(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];
    }
    return m;
}

inline anchortest::Matrix column(const std::vector<double>& values) {
    anchortest::Matrix m(static_cast<long>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<long>(i), 0) = values[i];
    return m;
}

// Oracles below are deliberately naive re-derivations, independent of the library code.

/// Min-cost perfect matching by enumerating all permutations. For equal uniform
/// weights the transport LP has an optimal vertex that is a permutation matrix.
inline double transport_oracle(std::vector<double> a, std::vector<double> b) {
    std::vector<std::size_t> perm(b.size());
    std::iota(perm.begin(), perm.end(), 0);
    double best = INFINITY;
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) cost += std::abs(a[i] - b[perm[i]]);
        best = std::min(best, cost);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(a.size());
}

/// Energy statistic from the textbook double sums, V-statistic convention.
inline double energy_oracle(const anchortest::Matrix& x, const anchortest::Matrix& y) {
    const double nx = static_cast<double>(x.rows());
    const double ny = static_cast<double>(y.rows());
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (long i = 0; i < x.rows(); ++i) {
        for (long j = 0; j < y.rows(); ++j) xy += (x.row(i) - y.row(j)).norm();
    }
    for (long i = 0; i < x.rows(); ++i) {
        for (long j = 0; j < x.rows(); ++j) xx += (x.row(i) - x.row(j)).norm();
    }
    for (long i = 0; i < y.rows(); ++i) {
        for (long j = 0; j < y.rows(); ++j) yy += (y.row(i) - y.row(j)).norm();
    }
    const double e = 2.0 * xy / (nx * ny) - xx / (nx * nx) - yy / (ny * ny);
    return nx * ny / (nx + ny) * e;
}

/// Classic paired t-statistic mean / (sd / sqrt(n)).
inline double paired_t(const std::vector<double>& d) {
    const double n = static_cast<double>(d.size());
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    return mean / std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace testsupport
