#include "anchortest/cluster.hpp"

#include "anchortest/error.hpp"
#include "anchortest/parallel.hpp"
#include "anchortest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace anchortest {

using nlohmann::json;

namespace {

std::size_t count_distinct_rows(const Matrix& points) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), less);
    std::size_t distinct = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size(); ++i) {
        if (less(order[i - 1], order[i])) ++distinct;
    }
    return distinct;
}

Matrix cluster_means(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k,
                     std::vector<std::size_t>& sizes) {
    Matrix means = Matrix::Zero(static_cast<Eigen::Index>(k), points.cols());
    sizes.assign(k, 0);
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        means.row(static_cast<Eigen::Index>(assignment[i])) += points.row(static_cast<Eigen::Index>(i));
        ++sizes[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (sizes[c] > 0) means.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(sizes[c]);
    }
    return means;
}

double wcss_raw(const Matrix& points, std::span<const std::size_t> assignment, std::size_t k) {
    std::vector<std::size_t> sizes;
    const Matrix means = cluster_means(points, assignment, k, sizes);
    double total = 0.0;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        total += (points.row(static_cast<Eigen::Index>(i)) - means.row(static_cast<Eigen::Index>(assignment[i]))).squaredNorm();
    }
    return total;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, rng::Engine& engine) {
    const auto n = static_cast<std::size_t>(points.rows());
    Matrix centers(static_cast<Eigen::Index>(k), points.cols());
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.row(0) = points.row(static_cast<Eigen::Index>(first(engine)));

    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = (points.row(static_cast<Eigen::Index>(i)) - centers.row(0)).squaredNorm();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t c = 1; c < k; ++c) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n - 1;
        const double target = unit(engine) * total;
        double running = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            running += d2[i];
            if (running > target && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        // Guard against rounding at the top end landing on an already-chosen point.
        while (d2[pick] == 0.0 && pick > 0) --pick;
        centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], (points.row(static_cast<Eigen::Index>(i)) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm());
        }
    }
    return centers;
}

/// Single-point transfers: moving x from A to B changes WCSS by
/// |B|/(|B|+1) |x - m_B|^2 - |A|/(|A|-1) |x - m_A|^2. Applies improving moves until none remain.
void hartigan_refine(const Matrix& points, std::vector<std::size_t>& assignment, std::size_t k, std::size_t max_passes) {
    const auto n = static_cast<std::size_t>(points.rows());
    std::vector<std::size_t> sizes;
    Matrix means = cluster_means(points, assignment, k, sizes);
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t a = assignment[i];
            if (sizes[a] < 2) continue;
            const auto row = points.row(static_cast<Eigen::Index>(i));
            const double na = static_cast<double>(sizes[a]);
            const double remove = na / (na - 1.0) * (row - means.row(static_cast<Eigen::Index>(a))).squaredNorm();
            std::size_t best = a;
            double best_add = remove;
            for (std::size_t b = 0; b < k; ++b) {
                if (b == a) continue;
                const double nb = static_cast<double>(sizes[b]);
                const double add = nb / (nb + 1.0) * (row - means.row(static_cast<Eigen::Index>(b))).squaredNorm();
                if (add < best_add) {
                    best_add = add;
                    best = b;
                }
            }
            if (best == a || remove - best_add <= 1e-12 * remove) continue;
            const auto ai = static_cast<Eigen::Index>(a);
            const auto bi = static_cast<Eigen::Index>(best);
            means.row(ai) = (means.row(ai) * na - row) / (na - 1.0);
            const double nb = static_cast<double>(sizes[best]);
            means.row(bi) = (means.row(bi) * nb + row) / (nb + 1.0);
            --sizes[a];
            ++sizes[best];
            assignment[i] = best;
            moved = true;
        }
        if (!moved) break;
    }
}

struct RunResult {
    std::vector<std::size_t> assignment;
    double wcss = std::numeric_limits<double>::infinity();
};

RunResult lloyd(const Matrix& points, std::size_t k, rng::Engine& engine, const KMeansConfig& config) {
    const auto n = static_cast<std::size_t>(points.rows());
    Matrix centers = seed_plus_plus(points, k, engine);
    std::vector<std::size_t> assignment(n, k);
    std::vector<std::size_t> sizes(k);
    std::vector<double> dist(n);
    double previous = std::numeric_limits<double>::infinity();
    double current = previous;

    for (std::size_t iter = 0; iter < std::max<std::size_t>(config.max_iter, 1); ++iter) {
        bool changed = false;
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = (points.row(static_cast<Eigen::Index>(i)) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[i] != best) changed = true;
            assignment[i] = best;
            dist[i] = best_d;
            ++sizes[best];
        }

        // Refill empty clusters with the point farthest from its center.
        for (std::size_t c = 0; c < k; ++c) {
            if (sizes[c] != 0) continue;
            std::size_t far = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (sizes[assignment[i]] > 1 && dist[i] > far_d) {
                    far_d = dist[i];
                    far = i;
                }
            }
            --sizes[assignment[far]];
            assignment[far] = c;
            sizes[c] = 1;
            dist[far] = 0.0;
            centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
            changed = true;
        }

        centers = cluster_means(points, assignment, k, sizes);
        current = wcss_raw(points, assignment, k);
        if (config.check_monotone && current > previous * (1.0 + 1e-12) + 1e-12) {
            throw DegeneracyError("k-means WCSS increased from " + std::to_string(previous) + " to " +
                                  std::to_string(current) + " at iteration " + std::to_string(iter));
        }
        const bool converged = !changed || (std::isfinite(previous) && previous - current <= config.tol * previous);
        previous = current;
        if (converged) break;
    }
    if (config.hartigan) {
        hartigan_refine(points, assignment, k, std::max<std::size_t>(config.max_iter, 1));
        const double refined = wcss_raw(points, assignment, k);
        if (config.check_monotone && refined > current * (1.0 + 1e-12) + 1e-12) {
            throw DegeneracyError("Hartigan refinement increased WCSS");
        }
        current = refined;
    }
    return {std::move(assignment), current};
}

}  // namespace

std::vector<std::size_t> Partition::cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignment) {
        if (a < k) ++sizes[a];
    }
    return sizes;
}

void check_partition(const Partition& part, std::size_t n, bool require_nonempty) {
    if (part.assignment.size() != n) {
        throw PairingError("partition covers " + std::to_string(part.assignment.size()) + " indices, data has " +
                           std::to_string(n));
    }
    if (part.k == 0) throw ParameterError("partition has k = 0");
    for (std::size_t i = 0; i < n; ++i) {
        if (part.assignment[i] >= part.k) {
            throw ParameterError("cluster id " + std::to_string(part.assignment[i]) + " at index " + std::to_string(i) +
                                 " outside [0, " + std::to_string(part.k) + ")");
        }
    }
    if (require_nonempty) {
        const auto sizes = part.cluster_sizes();
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            if (sizes[c] == 0) throw ParameterError("cluster " + std::to_string(c) + " is empty");
        }
    }
}

Partition kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, const KMeansConfig& config) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (k < 2 || k > n) {
        throw ParameterError("k-means needs 2 <= K <= n, got K=" + std::to_string(k) + ", n=" + std::to_string(n));
    }
    if (config.restarts < 1) throw ParameterError("k-means needs restarts >= 1");
    if (count_distinct_rows(points) < k) {
        throw DegeneracyError("fewer than K=" + std::to_string(k) + " distinct rows");
    }

    std::vector<RunResult> runs(config.restarts);
    parallel_for(config.restarts, config.threads, [&](std::size_t r) {
        auto engine = rng::stream(seed, r);
        runs[r] = lloyd(points, k, engine, config);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].wcss < runs[best].wcss) best = r;
    }
    Partition part{k, std::move(runs[best].assignment), 0.0};
    part.wcss = wcss_raw(points, part.assignment, k);
    return part;
}

double wcss(const Matrix& points, const Partition& part) {
    check_partition(part, static_cast<std::size_t>(points.rows()), false);
    return wcss_raw(points, part.assignment, part.k);
}

Partition brute_force_partition(const Matrix& points, std::size_t k) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n > kBruteForceMaxRows) {
        throw GuardError("exhaustive partition search limited to n <= " + std::to_string(kBruteForceMaxRows) +
                         ", got n=" + std::to_string(n));
    }
    if (k < 1 || k > n) throw ParameterError("brute force needs 1 <= K <= n");

    // Restricted growth strings enumerate each set partition exactly once.
    const auto dims = points.cols();
    std::vector<std::size_t> labels(n, 0);
    std::vector<std::size_t> counts(k, 0);
    Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), dims);
    std::vector<double> sq(k, 0.0);
    std::vector<double> row_sq(n);
    for (std::size_t i = 0; i < n; ++i) row_sq[i] = points.row(static_cast<Eigen::Index>(i)).squaredNorm();

    std::vector<std::size_t> best_labels;
    double best = std::numeric_limits<double>::infinity();

    auto objective = [&] {
        double total = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            total += sq[c] - sums.row(static_cast<Eigen::Index>(c)).squaredNorm() / static_cast<double>(counts[c]);
        }
        return total;
    };

    auto recurse = [&](auto& self, std::size_t i, std::size_t used) -> void {
        if (n - i < k - used) return;  // not enough points left to open the remaining blocks
        if (i == n) {
            const double value = objective();
            if (value < best) {
                best = value;
                best_labels = labels;
            }
            return;
        }
        const std::size_t limit = std::min(used + 1, k);
        for (std::size_t c = 0; c < limit; ++c) {
            labels[i] = c;
            ++counts[c];
            sums.row(static_cast<Eigen::Index>(c)) += points.row(static_cast<Eigen::Index>(i));
            sq[c] += row_sq[i];
            self(self, i + 1, c == used ? used + 1 : used);
            --counts[c];
            sums.row(static_cast<Eigen::Index>(c)) -= points.row(static_cast<Eigen::Index>(i));
            sq[c] -= row_sq[i];
        }
    };
    recurse(recurse, 0, 0);

    Partition part{k, std::move(best_labels), 0.0};
    part.wcss = wcss_raw(points, part.assignment, k);
    return part;
}

double rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) throw PairingError("rand index needs equal-length labelings");
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    std::size_t agree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if ((a[i] == a[j]) == (b[i] == b[j])) ++agree;
        }
    }
    return static_cast<double>(agree) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

bool same_partition(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size()) return false;
    std::map<std::size_t, std::size_t> forward;
    std::map<std::size_t, std::size_t> backward;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto f = forward.emplace(a[i], b[i]).first;
        const auto g = backward.emplace(b[i], a[i]).first;
        if (f->second != b[i] || g->second != a[i]) return false;
    }
    return true;
}

json to_json(const Partition& part) {
    return {{"K", part.k}, {"assignment", part.assignment}, {"wcss", part.wcss}};
}

Partition partition_from_json(const json& j) {
    try {
        Partition part;
        part.k = j.at("K").get<std::size_t>();
        part.assignment = j.at("assignment").get<std::vector<std::size_t>>();
        part.wcss = j.value("wcss", 0.0);
        check_partition(part, part.assignment.size(), false);
        return part;
    } catch (const json::exception& e) {
        throw FormatError(std::string("partition JSON: ") + e.what());
    }
}

}  // namespace anchortest
