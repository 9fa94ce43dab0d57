#include "anchortest/synth.hpp"

#include "anchortest/cluster.hpp"
#include "anchortest/error.hpp"
#include "anchortest/parallel.hpp"
#include "anchortest/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace anchortest {

using nlohmann::json;

namespace {

// Stream indices under a scenario seed.
constexpr std::uint64_t kLabelStream = 0;
constexpr std::uint64_t kAltLabelStream = 1;
constexpr std::uint64_t kDatasetStream = 16;

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, rng::Engine& engine) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(engine);
    }
    return m;
}

/// k x dim means with minimum pairwise distance `gap`, centered, then randomly rotated and offset.
Matrix community_means(std::size_t dim, std::size_t k, double gap, rng::Engine& engine) {
    const auto d = static_cast<Eigen::Index>(dim);
    const auto kk = static_cast<Eigen::Index>(k);
    Matrix base = Matrix::Zero(kk, d);
    if (dim >= k) {
        for (Eigen::Index c = 0; c < kk; ++c) base(c, c) = gap / std::numbers::sqrt2;
    } else if (dim == 1) {
        for (Eigen::Index c = 0; c < kk; ++c) base(c, 0) = gap * static_cast<double>(c);
    } else {
        const double radius = gap / (2.0 * std::sin(std::numbers::pi / static_cast<double>(k)));
        for (Eigen::Index c = 0; c < kk; ++c) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(k);
            base(c, 0) = radius * std::cos(angle);
            base(c, 1) = radius * std::sin(angle);
        }
    }
    base.rowwise() -= base.colwise().mean();

    const Eigen::MatrixXd g = gaussian(d, d, engine);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    Matrix means = base * q.transpose();
    const Matrix offset = gaussian(1, d, engine) * (gap / 2.0);
    means.rowwise() += offset.row(0);
    return means;
}

EmbeddingMatrix sample_dataset(const ScenarioConfig& cfg, std::span<const std::size_t> labels, std::uint64_t seed,
                               std::string label) {
    auto engine = rng::Engine(seed);
    const Matrix means = community_means(cfg.dim, cfg.k_true, cfg.separation * cfg.noise_sd, engine);
    Matrix x = gaussian(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(cfg.dim), engine) * cfg.noise_sd;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) += means.row(static_cast<Eigen::Index>(labels[i]));
    }
    return EmbeddingMatrix(std::move(x), std::move(label));
}

bool communities_filled(std::span<const std::size_t> labels, std::size_t k) {
    std::vector<std::size_t> counts(k, 0);
    for (auto l : labels) ++counts[l];
    return std::all_of(counts.begin(), counts.end(), [](std::size_t c) { return c >= 2; });
}

std::vector<std::size_t> perturb_labels(std::span<const std::size_t> labels, std::size_t k, double drift,
                                        std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        auto engine = rng::stream(seed, attempt);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<std::size_t> other(1, k - 1);
        std::vector<std::size_t> out(labels.begin(), labels.end());
        for (auto& l : out) {
            if (unit(engine) < drift) l = (l + other(engine)) % k;
        }
        if (communities_filled(out, k)) return out;
    }
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
    if (cfg.k_true < 2) throw ParameterError("scenario needs k_true >= 2");
    if (cfg.n < 2 * cfg.k_true) throw ParameterError("scenario needs n >= 2 * k_true");
    if (cfg.dim < 1) throw ParameterError("scenario needs dim >= 1");
    if (!std::isfinite(cfg.separation) || cfg.separation < 0.0) throw ParameterError("separation must be finite and >= 0");
    if (!(cfg.noise_sd > 0.0) || !std::isfinite(cfg.noise_sd)) throw ParameterError("noise_sd must be > 0");
}

json to_json(const ScenarioConfig& cfg) {
    return {{"n", cfg.n},
            {"dim", cfg.dim},
            {"k_true", cfg.k_true},
            {"separation", cfg.separation},
            {"noise_sd", cfg.noise_sd},
            {"structure", cfg.structure == Structure::shared ? "shared" : "independent"},
            {"seed", cfg.seed}};
}

ScenarioConfig scenario_from_json(const json& j) {
    ScenarioConfig cfg;
    try {
        cfg.n = j.value("n", cfg.n);
        cfg.dim = j.value("dim", cfg.dim);
        cfg.k_true = j.value("k_true", cfg.k_true);
        cfg.separation = j.value("separation", cfg.separation);
        cfg.noise_sd = j.value("noise_sd", cfg.noise_sd);
        const std::string structure = j.value("structure", std::string("shared"));
        if (structure == "shared") {
            cfg.structure = Structure::shared;
        } else if (structure == "independent") {
            cfg.structure = Structure::independent;
        } else {
            throw ParameterError("structure must be 'shared' or 'independent'");
        }
        cfg.seed = j.value("seed", cfg.seed);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("scenario JSON: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

std::vector<std::size_t> draw_labels(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (n < 2 * k) throw ParameterError("need n >= 2k to give every community two members");
    for (std::uint64_t attempt = 0;; ++attempt) {
        auto engine = rng::stream(seed, attempt);
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        std::vector<std::size_t> z(n);
        for (auto& l : z) l = pick(engine);
        if (communities_filled(z, k)) return z;
    }
}

double expected_rand_index_independent(std::size_t k) {
    const double same = 1.0 / static_cast<double>(k);
    return same * same + (1.0 - same) * (1.0 - same);
}

SyntheticTriple generate_from_labels(const ScenarioConfig& cfg, std::vector<std::size_t> anchor_labels,
                                     std::vector<std::size_t> first_labels, std::vector<std::size_t> second_labels) {
    validate(cfg);
    for (const auto* z : {&anchor_labels, &first_labels, &second_labels}) {
        if (z->size() != cfg.n) throw PairingError("label vector length differs from n");
        for (auto l : *z) {
            if (l >= cfg.k_true) throw ParameterError("latent label outside [0, k_true)");
        }
    }
    if (cfg.structure == Structure::independent && same_partition(first_labels, second_labels)) {
        throw GuardError("independent structure requested but both non-anchor labelings coincide");
    }
    auto anchor = sample_dataset(cfg, anchor_labels, rng::derive(cfg.seed, kDatasetStream + 0), "anchor");
    auto first = sample_dataset(cfg, first_labels, rng::derive(cfg.seed, kDatasetStream + 1), "D1");
    auto second = sample_dataset(cfg, second_labels, rng::derive(cfg.seed, kDatasetStream + 2), "D2");
    return {validate_pairing({{"anchor", std::move(anchor)}, {"nonanchor_1", std::move(first)}, {"nonanchor_2", std::move(second)}}),
            std::move(anchor_labels), std::move(first_labels), std::move(second_labels)};
}

SyntheticTriple generate_null_triple(const ScenarioConfig& cfg) {
    if (cfg.structure != Structure::shared) throw ParameterError("null triple needs structure = shared");
    validate(cfg);
    auto z = draw_labels(cfg.n, cfg.k_true, rng::derive(cfg.seed, kLabelStream));
    return generate_from_labels(cfg, z, z, z);
}

SyntheticTriple generate_alt_triple(const ScenarioConfig& cfg) {
    if (cfg.structure != Structure::independent) throw ParameterError("alternative triple needs structure = independent");
    validate(cfg);
    auto z = draw_labels(cfg.n, cfg.k_true, rng::derive(cfg.seed, kLabelStream));
    std::vector<std::size_t> z2;
    for (std::uint64_t attempt = 0;; ++attempt) {
        z2 = draw_labels(cfg.n, cfg.k_true, rng::derive(cfg.seed, {kAltLabelStream, attempt}));
        if (!same_partition(z, z2)) break;
    }
    return generate_from_labels(cfg, z, z, std::move(z2));
}

double ChainConfig::drift(double rho) const {
    return std::clamp(base_drift + drift_per_temperature * rho, 0.0, 1.0);
}

ChainCorpus generate_chain(const ChainConfig& cfg) {
    validate(cfg.base);
    if (cfg.temperatures.empty()) throw ParameterError("chain needs at least one temperature");
    const ScenarioConfig& base = cfg.base;
    auto z_o = draw_labels(base.n, base.k_true, rng::derive(base.seed, kLabelStream));
    ChainCorpus corpus{sample_dataset(base, z_o, rng::derive(base.seed, kDatasetStream), "O"), z_o, {}};
    for (std::size_t t = 0; t < cfg.temperatures.size(); ++t) {
        const double rho = cfg.temperatures[t];
        const double q = cfg.drift(rho);
        const std::uint64_t level_seed = rng::derive(base.seed, {100, t});
        auto z_g = perturb_labels(z_o, base.k_true, q, rng::derive(level_seed, 0));
        auto z_s = perturb_labels(z_g, base.k_true, q, rng::derive(level_seed, 1));
        corpus.levels.push_back({rho,
                                 sample_dataset(base, z_g, rng::derive(level_seed, 2), "G"),
                                 sample_dataset(base, z_g, rng::derive(level_seed, 3), "Gprime"),
                                 sample_dataset(base, z_s, rng::derive(level_seed, 4), "S"),
                                 std::move(z_g), std::move(z_s)});
    }
    return corpus;
}

std::string_view to_string(ScenarioKind kind) { return kind == ScenarioKind::null ? "null" : "alt"; }

ScenarioKind parse_scenario_kind(std::string_view name) {
    if (name == "null") return ScenarioKind::null;
    if (name == "alt" || name == "alternative") return ScenarioKind::alt;
    throw ParameterError("unknown scenario '" + std::string(name) + "' (expected null or alt)");
}

MonteCarloReport monte_carlo(ScenarioKind scenario, const ScenarioConfig& cfg, const MonteCarloConfig& config) {
    if (config.replicates < 1) throw ParameterError("Monte Carlo needs M >= 1");
    validate(cfg);
    const std::size_t m_total = config.replicates;
    std::vector<double> p_values(m_total, 1.0);
    std::vector<char> rejected(m_total, 0);
    std::vector<char> vacuous(m_total, 0);
    std::vector<double> runtime_ms(m_total, 0.0);

    parallel_for(m_total, config.threads, [&](std::size_t m) {
        const auto start = std::chrono::steady_clock::now();
        ScenarioConfig rep = cfg;
        rep.seed = rng::derive(cfg.seed, m);
        rep.structure = scenario == ScenarioKind::null ? Structure::shared : Structure::independent;
        const SyntheticTriple triple = scenario == ScenarioKind::null ? generate_null_triple(rep) : generate_alt_triple(rep);

        AnchoredConfig test = config.test;
        test.permutation.seed = rng::derive(rep.seed, 0xA5);
        test.permutation.threads = 1;
        test.kmeans.threads = 1;
        try {
            const TestReport report = anchored_test(triple.data.at("anchor"), triple.data.at("nonanchor_1"),
                                                    triple.data.at("nonanchor_2"), test);
            p_values[m] = report.p_value;
            rejected[m] = report.reject ? 1 : 0;
        } catch (const VacuousTestError&) {
            vacuous[m] = 1;
        }
        runtime_ms[m] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    });

    MonteCarloReport report;
    report.scenario = scenario;
    report.replicates = m_total;
    report.alpha = config.test.permutation.alpha;
    report.rejections = static_cast<std::size_t>(std::count(rejected.begin(), rejected.end(), 1));
    report.vacuous = static_cast<std::size_t>(std::count(vacuous.begin(), vacuous.end(), 1));
    const double mm = static_cast<double>(m_total);
    report.rate = static_cast<double>(report.rejections) / mm;
    constexpr double z = 1.959963984540054;
    const double denom = 1.0 + z * z / mm;
    const double center = (report.rate + z * z / (2.0 * mm)) / denom;
    const double half = z * std::sqrt(report.rate * (1.0 - report.rate) / mm + z * z / (4.0 * mm * mm)) / denom;
    report.ci_low = std::max(0.0, center - half);
    report.ci_high = std::min(1.0, center + half);
    report.ci_degenerate = m_total < 2;
    double total_ms = 0.0;
    for (double t : runtime_ms) total_ms += t;
    report.mean_runtime_ms = total_ms / mm;
    report.p_values = std::move(p_values);
    return report;
}

json to_json(const MonteCarloReport& r) {
    return {{"scenario", std::string(to_string(r.scenario))},
            {"replicates", r.replicates},
            {"rejections", r.rejections},
            {"vacuous", r.vacuous},
            {"alpha", r.alpha},
            {"rejection_rate", r.rate},
            {"ci95", {r.ci_low, r.ci_high}},
            {"ci_degenerate", r.ci_degenerate},
            {"p_values", r.p_values}};
}

}  // namespace anchortest
