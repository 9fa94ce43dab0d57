#include "anchortest/stattests.hpp"

#include "anchortest/error.hpp"
#include "anchortest/parallel.hpp"
#include "anchortest/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace anchortest {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Permutation statistics within this relative distance of the observed one count as ties.
constexpr double kTieTolerance = 1e-12;

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double mu3 = 0.0;
    bool constant = false;
};

template <class Fn>
Moments moments(std::size_t n, Fn&& value) {
    Moments m;
    const double first = value(0);
    m.constant = true;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = value(i);
        sum += v;
        if (v != first) m.constant = false;
    }
    m.mean = sum / static_cast<double>(n);
    double s2 = 0.0;
    double s3 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = value(i) - m.mean;
        s2 += c * c;
        s3 += c * c * c;
    }
    m.var = s2 / static_cast<double>(n - 1);
    m.mu3 = s3 / static_cast<double>(n - 1);
    return m;
}

double johnson_from_moments(const Moments& m, std::size_t n) {
    const double nn = static_cast<double>(n);
    const double se = std::sqrt(m.var / nn);
    const double ratio = m.mean / m.var;
    return m.mean / se + m.mu3 * (ratio * ratio / 3.0 + 1.0 / (6.0 * m.var * nn)) / se;
}

/// Same as johnson_t but maps a constant sample to +-inf (0 if it is all zero),
/// which is how a sign-flipped replicate with no spread compares to anything finite.
template <class Fn>
double johnson_or_inf(std::size_t n, Fn&& value) {
    const Moments m = moments(n, value);
    if (m.constant) {
        if (m.mean == 0.0) return 0.0;
        return m.mean > 0 ? kInf : -kInf;
    }
    return johnson_from_moments(m, n);
}

bool all_zero(std::span<const double> d) {
    return std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; });
}

/// Fills `signs` with independent fair +-1 draws, 64 per engine call.
void draw_signs(rng::Engine& engine, std::vector<double>& signs) {
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < signs.size(); ++i) {
        if (i % 64 == 0) bits = engine();
        signs[i] = (bits & 1U) ? -1.0 : 1.0;
        bits >>= 1;
    }
}

std::size_t count_at_least(std::span<const double> abs_perm, double abs_obs) {
    const double threshold = abs_obs * (1.0 - kTieTolerance);
    return static_cast<std::size_t>(std::count_if(abs_perm.begin(), abs_perm.end(), [&](double t) { return t >= threshold; }));
}

double add_one_pvalue(std::size_t extreme, std::size_t replicates) {
    return static_cast<double>(1 + extreme) / static_cast<double>(replicates + 1);
}

void require_replicates(const PermutationConfig& config) {
    if (config.replicates < 1) throw ParameterError("permutation test needs R >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
}

Matrix paired_diffs(const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw DimensionError("paired test needs equal shapes, got " + std::to_string(x.rows()) + "x" +
                             std::to_string(x.cols()) + " and " + std::to_string(y.rows()) + "x" +
                             std::to_string(y.cols()));
    }
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (n <= p) {
        throw DimensionError("paired multivariate test needs n > p (rank), got n=" + std::to_string(n) +
                             ", p=" + std::to_string(p));
    }
    Matrix d = x - y;
    if ((d.array() == 0.0).all()) throw VacuousTestError("all paired differences are zero, test vacuous");
    return d;
}

/// Returns the covariance LDLT of the difference rows, or throws when it is singular.
Eigen::LDLT<Eigen::MatrixXd> covariance_factor(const Matrix& d, Eigen::VectorXd& mean) {
    const auto n = static_cast<double>(d.rows());
    mean = d.colwise().mean().transpose();
    const Matrix centered = d.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov = centered.transpose() * centered / (n - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().maxCoeff();
    const double bottom = eig.eigenvalues().minCoeff();
    if (!(top > 0.0) || bottom <= 1e-12 * top) {
        throw DegeneracyError("difference covariance is singular");
    }
    return Eigen::LDLT<Eigen::MatrixXd>(cov);
}

}  // namespace

std::string_view to_string(TestMethod method) {
    switch (method) {
        case TestMethod::anchored_johnson: return "anchored_johnson";
        case TestMethod::hotelling_paired: return "hotelling_paired";
        case TestMethod::nploc_mean: return "nploc_mean";
        case TestMethod::energy: return "energy";
    }
    return "unknown";
}

json to_json(const TestReport& r) {
    json j = {{"method", std::string(to_string(r.method))},
              {"statistic", r.statistic},
              {"p_value", r.p_value},
              {"replicates", r.replicates},
              {"seed", r.seed},
              {"alpha", r.alpha},
              {"reject", r.reject},
              {"labels", r.labels},
              {"metadata", r.metadata}};
    j["K"] = r.k ? json(*r.k) : json(nullptr);
    return j;
}

double johnson_t(std::span<const double> d) {
    const std::size_t n = d.size();
    if (n < 2) throw ArityError("Johnson t-statistic needs n >= 2, got " + std::to_string(n));
    const Moments m = moments(n, [&](std::size_t i) { return d[i]; });
    if (m.constant) throw DegeneracyError("degenerate sample: zero variance");
    return johnson_from_moments(m, n);
}

TestReport sign_flip_pvalue(const DiffVector& d, const PermutationConfig& config) {
    require_replicates(config);
    if (d.size() >= 2 && all_zero(d.diffs)) throw VacuousTestError("all paired differences are zero, test vacuous");
    const double observed = johnson_t(d.diffs);
    const std::size_t n = d.size();

    std::vector<double> abs_perm(config.replicates);
    parallel_for(config.replicates, config.threads, [&](std::size_t r) {
        auto engine = rng::stream(config.seed, r);
        std::vector<double> signs(n);
        draw_signs(engine, signs);
        abs_perm[r] = std::abs(johnson_or_inf(n, [&](std::size_t i) { return signs[i] * d.diffs[i]; }));
    });

    const double abs_obs = std::abs(observed);
    const std::size_t extreme = count_at_least(abs_perm, abs_obs);
    const auto below = static_cast<std::size_t>(
        std::count_if(abs_perm.begin(), abs_perm.end(), [&](double t) { return abs_obs > t; }));

    TestReport report;
    report.method = TestMethod::anchored_johnson;
    report.statistic = observed;
    report.replicates = config.replicates;
    report.seed = config.seed;
    report.alpha = config.alpha;
    report.p_value = add_one_pvalue(extreme, config.replicates);
    report.reject = report.p_value < config.alpha;
    report.metadata["n"] = static_cast<double>(n);
    report.metadata["paper_step4_proportion"] = static_cast<double>(below) / static_cast<double>(config.replicates);
    return report;
}

AnchoredMapping anchored_mapping(const EmbeddingMatrix& anchor, const EmbeddingMatrix& first,
                                 const EmbeddingMatrix& second, std::size_t k, const KMeansConfig& kmeans_config,
                                 std::uint64_t seed) {
    // Validates the shared index set before any clustering work.
    validate_pairing({{"anchor", anchor}, {"first", first}, {"second", second}});
    // One clustering stream for both, so bitwise-equal non-anchors get the same partition.
    AnchoredMapping m;
    m.first_partition = kmeans(first, k, rng::derive(seed, 1), kmeans_config);
    m.second_partition = kmeans(second, k, rng::derive(seed, 1), kmeans_config);
    m.first = mapped_distances(anchor, m.first_partition, first.label());
    m.second = mapped_distances(anchor, m.second_partition, second.label());
    return m;
}

TestReport anchored_test(const EmbeddingMatrix& anchor, const EmbeddingMatrix& first, const EmbeddingMatrix& second,
                         const AnchoredConfig& config) {
    const std::uint64_t seed = config.permutation.seed;
    const AnchoredMapping mapping = anchored_mapping(anchor, first, second, config.k, config.kmeans, seed);
    const DiffVector d = paired_differences(mapping.first, mapping.second);
    if (all_zero(d.diffs)) throw VacuousTestError("structures identical, test vacuous");

    PermutationConfig perm = config.permutation;
    perm.seed = rng::derive(seed, 3);
    TestReport report = sign_flip_pvalue(d, perm);
    report.seed = seed;
    report.k = config.k;
    report.labels = {anchor.label(), first.label(), second.label()};
    double mean = 0.0;
    for (double v : d.diffs) mean += v;
    report.metadata["mean_difference"] = mean / static_cast<double>(d.size());
    report.metadata["first_wcss"] = mapping.first_partition.wcss;
    report.metadata["second_wcss"] = mapping.second_partition.wcss;
    return report;
}

TestReport hotelling_paired(const Matrix& x, const Matrix& y, double alpha) {
    const Matrix d = paired_diffs(x, y);
    Eigen::VectorXd mean;
    const auto factor = covariance_factor(d, mean);
    const auto n = static_cast<double>(d.rows());
    const auto p = static_cast<double>(d.cols());
    const double t2 = n * mean.dot(factor.solve(mean));
    const double f = t2 * (n - p) / (p * (n - 1.0));

    TestReport report;
    report.method = TestMethod::hotelling_paired;
    report.statistic = t2;
    report.alpha = alpha;
    if (t2 <= 0.0) {
        report.p_value = 1.0;
    } else {
        const boost::math::fisher_f_distribution<double> dist(p, n - p);
        report.p_value = boost::math::cdf(boost::math::complement(dist, f));
    }
    report.reject = report.p_value < alpha;
    report.metadata["F"] = f;
    report.metadata["df1"] = p;
    report.metadata["df2"] = n - p;
    return report;
}

TestReport nploc_mean_test(const Matrix& x, const Matrix& y, const PermutationConfig& config) {
    require_replicates(config);
    const Matrix d = paired_diffs(x, y);
    Eigen::VectorXd mean;
    const auto factor = covariance_factor(d, mean);
    const auto rows = d.rows();
    const auto n = static_cast<double>(rows);
    const double observed = n * mean.dot(factor.solve(mean));

    // With M0 = sum d_i d_i', a sign-flipped sample with mean m has covariance
    // (M0 - n m m') / (n - 1), so T = n (n - 1) q / (1 - n q) where q = m' M0^-1 m.
    const Eigen::MatrixXd m0 = d.transpose() * d;
    const Eigen::LDLT<Eigen::MatrixXd> m0_factor(m0);
    auto statistic_for_mean = [&](const Eigen::VectorXd& m) {
        const double q = m.dot(m0_factor.solve(m));
        const double denom = 1.0 - n * q;
        if (denom <= 0.0) return kInf;
        return n * (n - 1.0) * q / denom;
    };
    const double observed_sm = statistic_for_mean(mean);

    std::vector<double> perm(config.replicates);
    parallel_for(config.replicates, config.threads, [&](std::size_t r) {
        auto engine = rng::stream(config.seed, r);
        std::vector<double> signs(static_cast<std::size_t>(rows));
        draw_signs(engine, signs);
        Eigen::VectorXd m = Eigen::VectorXd::Zero(d.cols());
        for (Eigen::Index i = 0; i < rows; ++i) m += signs[static_cast<std::size_t>(i)] * d.row(i).transpose();
        m /= n;
        perm[r] = statistic_for_mean(m);
    });

    TestReport report;
    report.method = TestMethod::nploc_mean;
    report.statistic = observed;
    report.replicates = config.replicates;
    report.seed = config.seed;
    report.alpha = config.alpha;
    report.p_value = add_one_pvalue(count_at_least(perm, observed_sm), config.replicates);
    report.reject = report.p_value < config.alpha;
    return report;
}

double energy_statistic(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols()) {
        throw DimensionError("energy statistic needs equal dimensions, got " + std::to_string(x.cols()) + " and " +
                             std::to_string(y.cols()));
    }
    if (x.rows() < 1 || y.rows() < 1) throw ArityError("energy statistic needs non-empty samples");
    auto mean_dist = [](const Matrix& a, const Matrix& b) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < b.rows(); ++j) s += (a.row(i) - b.row(j)).norm();
        }
        return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
    };
    const auto nx = static_cast<double>(x.rows());
    const auto ny = static_cast<double>(y.rows());
    return nx * ny / (nx + ny) * (2.0 * mean_dist(x, y) - mean_dist(x, x) - mean_dist(y, y));
}

TestReport energy_test(const Matrix& x, const Matrix& y, const PermutationConfig& config) {
    require_replicates(config);
    const double observed = energy_statistic(x, y);
    const auto nx = static_cast<std::size_t>(x.rows());
    const auto ny = static_cast<std::size_t>(y.rows());
    const std::size_t total = nx + ny;

    Matrix pooled(static_cast<Eigen::Index>(total), x.cols());
    pooled.topRows(x.rows()) = x;
    pooled.bottomRows(y.rows()) = y;
    Matrix dist(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
    double all = 0.0;
    for (Eigen::Index i = 0; i < pooled.rows(); ++i) {
        dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) {
            dist(i, j) = dist(j, i) = (pooled.row(i) - pooled.row(j)).norm();
            all += 2.0 * dist(i, j);
        }
    }
    const double fx = static_cast<double>(nx);
    const double fy = static_cast<double>(ny);
    auto statistic_for = [&](std::span<const std::size_t> order) {
        double sxx = 0.0;
        double syy = 0.0;
        for (std::size_t a = 0; a < nx; ++a) {
            const auto i = static_cast<Eigen::Index>(order[a]);
            for (std::size_t b = 0; b < nx; ++b) sxx += dist(i, static_cast<Eigen::Index>(order[b]));
        }
        for (std::size_t a = nx; a < total; ++a) {
            const auto i = static_cast<Eigen::Index>(order[a]);
            for (std::size_t b = nx; b < total; ++b) syy += dist(i, static_cast<Eigen::Index>(order[b]));
        }
        const double sxy = (all - sxx - syy) / 2.0;
        return fx * fy / (fx + fy) * (2.0 * sxy / (fx * fy) - sxx / (fx * fx) - syy / (fy * fy));
    };
    std::vector<std::size_t> identity(total);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    const double observed_fast = statistic_for(identity);

    std::vector<double> perm(config.replicates);
    parallel_for(config.replicates, config.threads, [&](std::size_t r) {
        auto engine = rng::stream(config.seed, r);
        std::vector<std::size_t> order = identity;
        std::shuffle(order.begin(), order.end(), engine);
        perm[r] = statistic_for(order);
    });

    TestReport report;
    report.method = TestMethod::energy;
    report.statistic = observed;
    report.replicates = config.replicates;
    report.seed = config.seed;
    report.alpha = config.alpha;
    report.p_value = add_one_pvalue(count_at_least(perm, observed_fast), config.replicates);
    report.reject = report.p_value < config.alpha;
    return report;
}

}  // namespace anchortest
