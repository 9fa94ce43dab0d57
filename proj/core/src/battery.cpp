#include "anchortest/battery.hpp"

#include "anchortest/anchor.hpp"
#include "anchortest/divergence.hpp"
#include "anchortest/error.hpp"
#include "anchortest/parallel.hpp"
#include "anchortest/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <sstream>

namespace anchortest {

using nlohmann::json;

BatteryOptions options_from_grid(const ExperimentGrid& grid) {
    BatteryOptions options;
    options.k_values = grid.k_values;
    options.alpha = grid.alpha;
    options.permutations = grid.permutations;
    options.seed = grid.seed;
    return options;
}

void set_baselines(BatteryOptions& options, const std::string& list) {
    options.hotelling = options.nploc = options.energy = false;
    if (list.empty() || list == "none") return;
    std::stringstream in(list);
    for (std::string item; std::getline(in, item, ',');) {
        if (item == "hotelling") {
            options.hotelling = true;
        } else if (item == "nploc") {
            options.nploc = true;
        } else if (item == "energy") {
            options.energy = true;
        } else {
            throw ParameterError("unknown baseline '" + item + "' (expected hotelling, nploc, energy)");
        }
    }
}

namespace {

constexpr std::uint64_t kBaselineStream = 1000;

struct Prepared {
    std::optional<EmbeddingMatrix> anchor, first, second;
    std::optional<Matrix> base_first, base_second;
    std::string anchored_error, anchored_message;
    std::string baseline_error, baseline_message;
};

std::string error_kind(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return err->kind();
    return "error";
}

EmbeddingMatrix maybe_reduce(const EmbeddingMatrix& m, std::size_t dim) {
    if (dim == 0 || m.cols() <= dim) return m;
    return apply_pca(fit_pca(m, dim), m);
}

void prepare_anchored(const BatteryInput& in, const BatteryOptions& options, Prepared& out) {
    validate_pairing({{"anchor", in.anchor}, {"nonanchor_1", in.first}, {"nonanchor_2", in.second}});
    const std::size_t dim = options.pca_dim;
    const bool wide = dim > 0 && std::max({in.anchor.cols(), in.first.cols(), in.second.cols()}) > dim;
    if (!wide || options.pca_mode == PcaMode::per_dataset) {
        out.anchor = maybe_reduce(in.anchor, dim);
        out.first = maybe_reduce(in.first, dim);
        out.second = maybe_reduce(in.second, dim);
        return;
    }
    if (in.anchor.cols() != in.first.cols() || in.anchor.cols() != in.second.cols()) {
        throw DimensionError("joint PCA needs equal column counts");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(in.anchor.rows());
    Matrix stacked(3 * n, static_cast<Eigen::Index>(in.anchor.cols()));
    stacked << in.anchor.values(), in.first.values(), in.second.values();
    const PcaModel model = fit_pca(stacked, dim);
    out.anchor = apply_pca(model, in.anchor);
    out.first = apply_pca(model, in.first);
    out.second = apply_pca(model, in.second);
}

void prepare_baselines(const BatteryInput& in, const BatteryOptions& options, Prepared& out) {
    if (in.first.cols() != in.second.cols()) {
        throw DimensionError("baselines need D1 and D2 in one space, got " + std::to_string(in.first.cols()) + " and " +
                             std::to_string(in.second.cols()) + " columns");
    }
    if (in.first.rows() != in.second.rows()) throw PairingError("baselines need paired rows");
    const std::size_t dim = options.pca_dim;
    if (dim == 0 || in.first.cols() <= dim) {
        out.base_first = in.first.values();
        out.base_second = in.second.values();
        return;
    }
    const Eigen::Index n = static_cast<Eigen::Index>(in.first.rows());
    Matrix stacked(2 * n, static_cast<Eigen::Index>(in.first.cols()));
    stacked << in.first.values(), in.second.values();
    const PcaModel model = fit_pca(stacked, dim);
    out.base_first = project(model, in.first.values());
    out.base_second = project(model, in.second.values());
}

template <class Fn>
void capture(BatteryCell& cell, Fn&& fn) {
    try {
        cell.report = fn();
    } catch (const std::exception& e) {
        cell.error = error_kind(e);
        cell.message = e.what();
    }
}

std::string format_rho(const std::optional<double>& rho) {
    if (!rho) return "";
    std::ostringstream out;
    out << *rho;
    return out.str();
}

std::string format_double(double v, const char* fmt = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

json cell_json(const BatteryCell& cell) {
    if (!cell.enabled) return nullptr;
    if (cell.report) return to_json(*cell.report);
    return {{"error", cell.error}, {"message", cell.message}};
}

}  // namespace

BatteryResult run_battery(const std::vector<BatteryInput>& inputs, const BatteryOptions& options) {
    if (inputs.empty()) throw ManifestError("battery has no test triples");
    if (options.k_values.empty()) throw ParameterError("battery needs at least one K");
    for (auto k : options.k_values) {
        if (k < 2) throw ParameterError("K values must be >= 2");
    }
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
    if (options.permutations < 1) throw ParameterError("permutations must be >= 1");

    const std::size_t rows = inputs.size();
    std::vector<Prepared> prepared(rows);
    parallel_for(rows, options.threads, [&](std::size_t r) {
        try {
            prepare_anchored(inputs[r], options, prepared[r]);
        } catch (const std::exception& e) {
            prepared[r].anchored_error = error_kind(e);
            prepared[r].anchored_message = e.what();
        }
        if (!options.hotelling && !options.nploc && !options.energy) return;
        try {
            prepare_baselines(inputs[r], options, prepared[r]);
        } catch (const std::exception& e) {
            prepared[r].baseline_error = error_kind(e);
            prepared[r].baseline_message = e.what();
        }
    });

    BatteryResult result{options, {}};
    result.rows.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        auto& row = result.rows[r];
        const auto& in = inputs[r];
        row.corpus = in.corpus;
        row.rho = in.rho;
        row.anchor = in.anchor.label();
        row.first = in.first.label();
        row.second = in.second.label();
        row.tag = in.tag.empty() ? default_hypothesis_tag(row.anchor, row.first, row.second) : in.tag;
        row.ball_pvalue = in.ball_pvalue;
        row.anchored.resize(options.k_values.size());
        row.hotelling.enabled = options.hotelling;
        row.nploc.enabled = options.nploc;
        row.energy.enabled = options.energy;
    }

    const std::size_t per_row = options.k_values.size() + 3;
    parallel_for(rows * per_row, options.threads, [&](std::size_t task) {
        const std::size_t r = task / per_row;
        const std::size_t j = task % per_row;
        auto& row = result.rows[r];
        const auto& prep = prepared[r];
        PermutationConfig perm{options.permutations, 0, options.alpha, 1};

        if (j < options.k_values.size()) {
            BatteryCell& cell = row.anchored[j];
            if (!prep.anchored_error.empty()) {
                cell.error = prep.anchored_error;
                cell.message = prep.anchored_message;
                return;
            }
            AnchoredConfig cfg{options.k_values[j], options.kmeans, perm};
            cfg.kmeans.threads = 1;
            cfg.permutation.seed = rng::derive(options.seed, {r, j});
            capture(cell, [&] { return anchored_test(*prep.anchor, *prep.first, *prep.second, cfg); });
            return;
        }

        const std::size_t b = j - options.k_values.size();
        BatteryCell& cell = b == 0 ? row.hotelling : b == 1 ? row.nploc : row.energy;
        if (!cell.enabled) return;
        if (!prep.baseline_error.empty()) {
            cell.error = prep.baseline_error;
            cell.message = prep.baseline_message;
            return;
        }
        perm.seed = rng::derive(options.seed, {r, kBaselineStream + b});
        capture(cell, [&] {
            if (b == 0) return hotelling_paired(*prep.base_first, *prep.base_second, options.alpha);
            if (b == 1) return nploc_mean_test(*prep.base_first, *prep.base_second, perm);
            return energy_test(*prep.base_first, *prep.base_second, perm);
        });
        if (cell.report) cell.report->labels = {row.first, row.second};
    });
    return result;
}

std::vector<BatteryInput> load_battery_inputs(const DatasetManifest& manifest) {
    const auto triples = expand_triples(manifest);
    std::map<std::string, EmbeddingMatrix> loaded;
    auto get = [&](const ManifestEntry& e) -> EmbeddingMatrix {
        const std::string key = e.path.string() + "|" + std::string(to_string(e.format));
        auto it = loaded.find(key);
        if (it == loaded.end()) it = loaded.emplace(key, load_matrix(e.path, e.format)).first;
        return it->second.relabeled(e.name.empty() ? e.role : e.name);
    };
    std::vector<BatteryInput> inputs;
    inputs.reserve(triples.size());
    for (const auto& t : triples) {
        inputs.push_back({t.corpus, t.rho, t.tag, get(t.anchor), get(t.first), get(t.second), t.ball_pvalue});
    }
    return inputs;
}

std::string format_pvalue(double p, double alpha, std::size_t replicates) {
    const std::string star = p < alpha ? "*" : "";
    const double floor = replicates > 0 ? 1.0 / static_cast<double>(replicates + 1) : 1e-3;
    const bool at_floor = replicates > 0 ? p <= floor * (1.0 + 1e-9) : p < floor;
    if (at_floor) {
        const double exponent = std::log10(floor);
        if (std::abs(exponent - std::round(exponent)) < 1e-9) {
            return "< 1e" + std::to_string(static_cast<long>(std::round(exponent))) + star;
        }
        return "< " + format_double(floor, "%.3g") + star;
    }
    return format_double(p, "%.3f") + star;
}

std::string render_cell(const BatteryCell& cell, double alpha) {
    if (!cell.enabled) return "";
    if (!cell.report) return "n/a(" + cell.error + ")";
    return format_pvalue(cell.report->p_value, alpha, cell.report->replicates);
}

std::vector<std::string> battery_header(const BatteryOptions& options) {
    std::vector<std::string> header{"corpus", "rho", "hypothesis", "anchor", "d1", "d2"};
    for (auto k : options.k_values) header.push_back("anch_K" + std::to_string(k));
    for (const char* name : {"hotelling", "nploc", "energy", "ball"}) header.emplace_back(name);
    return header;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

namespace {

std::vector<std::string> row_cells(const BatteryRow& row, double alpha) {
    std::vector<std::string> cells{row.corpus, format_rho(row.rho), row.tag, row.anchor, row.first, row.second};
    for (const auto& cell : row.anchored) cells.push_back(render_cell(cell, alpha));
    cells.push_back(render_cell(row.hotelling, alpha));
    cells.push_back(render_cell(row.nploc, alpha));
    cells.push_back(render_cell(row.energy, alpha));
    cells.push_back(row.ball_pvalue ? format_pvalue(*row.ball_pvalue, alpha, 0) : "");
    return cells;
}

}  // namespace

void write_battery_csv(std::ostream& out, const BatteryResult& result) {
    auto write = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_field(cells[i]);
        out << '\n';
    };
    write(battery_header(result.options));
    for (const auto& row : result.rows) write(row_cells(row, result.options.alpha));
}

json to_json(const BatteryResult& result) {
    const auto& o = result.options;
    json baselines = json::array();
    if (o.hotelling) baselines.push_back("hotelling");
    if (o.nploc) baselines.push_back("nploc");
    if (o.energy) baselines.push_back("energy");
    json doc = {{"options",
                 {{"k_values", o.k_values},
                  {"alpha", o.alpha},
                  {"permutations", o.permutations},
                  {"seed", o.seed},
                  {"baselines", baselines},
                  {"pca_dim", o.pca_dim},
                  {"pca_mode", std::string(to_string(o.pca_mode))}}},
                {"rows", json::array()}};
    for (const auto& row : result.rows) {
        json anchored = json::object();
        for (std::size_t j = 0; j < row.anchored.size(); ++j) {
            anchored[std::to_string(o.k_values[j])] = cell_json(row.anchored[j]);
        }
        doc["rows"].push_back({{"corpus", row.corpus},
                               {"rho", row.rho ? json(*row.rho) : json(nullptr)},
                               {"hypothesis", row.tag},
                               {"anchor", row.anchor},
                               {"d1", row.first},
                               {"d2", row.second},
                               {"anchored", anchored},
                               {"hotelling", cell_json(row.hotelling)},
                               {"nploc", cell_json(row.nploc)},
                               {"energy", cell_json(row.energy)},
                               {"ball", row.ball_pvalue ? json(*row.ball_pvalue) : json(nullptr)}});
    }
    return doc;
}

void write_battery_console(std::ostream& out, const BatteryResult& result) {
    std::vector<std::vector<std::string>> table{battery_header(result.options)};
    for (const auto& row : result.rows) table.push_back(row_cells(row, result.options.alpha));
    std::vector<std::size_t> width(table.front().size(), 0);
    for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
    }
    for (const auto& line : table) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(width[i])) << line[i] << (i + 1 < line.size() ? "  " : "");
        }
        out << '\n';
    }
    for (const auto& row : result.rows) {
        auto note = [&](const BatteryCell& cell, const std::string& what) {
            if (cell.enabled && !cell.ok()) out << "  " << row.tag << " " << what << ": " << cell.message << '\n';
        };
        for (std::size_t j = 0; j < row.anchored.size(); ++j) {
            note(row.anchored[j], "K=" + std::to_string(result.options.k_values[j]));
        }
        note(row.hotelling, "hotelling");
        note(row.nploc, "nploc");
        note(row.energy, "energy");
    }
}

std::vector<DistanceRow> run_distances(const std::vector<BatteryInput>& inputs, const BatteryOptions& options) {
    if (inputs.empty()) throw ManifestError("no test triples");
    for (const auto& in : inputs) {
        if (!in.rho) {
            throw ManifestError("distance curves need a temperature for every non-anchor; '" + in.first.label() +
                                "' / '" + in.second.label() + "' have none");
        }
    }
    const std::size_t per_row = options.k_values.size();
    std::vector<DistanceRow> rows(inputs.size() * per_row);
    std::vector<Prepared> prepared(inputs.size());
    for (std::size_t r = 0; r < inputs.size(); ++r) prepare_anchored(inputs[r], options, prepared[r]);

    parallel_for(rows.size(), options.threads, [&](std::size_t task) {
        const std::size_t r = task / per_row;
        const std::size_t j = task % per_row;
        const auto& in = inputs[r];
        const auto& prep = prepared[r];
        KMeansConfig km = options.kmeans;
        km.threads = 1;
        const auto mapping = anchored_mapping(*prep.anchor, *prep.first, *prep.second, options.k_values[j], km,
                                              rng::derive(options.seed, {r, j}));
        const auto& d1 = mapping.first.distances;
        const auto& d2 = mapping.second.distances;
        const KlEstimate kl = kl_divergence(d1, d2);
        double gap = 0.0;
        for (std::size_t i = 0; i < d1.size(); ++i) gap += d1[i] - d2[i];
        gap /= static_cast<double>(d1.size());
        rows[task] = {options.k_values[j],
                      *in.rho,
                      kl.value,
                      kl.degenerate,
                      wasserstein1(d1, d2),
                      gap,
                      in.tag.empty() ? default_hypothesis_tag(in.anchor.label(), in.first.label(), in.second.label())
                                     : in.tag,
                      in.corpus};
    });
    return rows;
}

void write_distances_csv(std::ostream& out, const std::vector<DistanceRow>& rows) {
    out << "K,rho,kl,wasserstein,gap,hypothesis,corpus\n";
    for (const auto& row : rows) {
        std::ostringstream rho;
        rho << row.rho;
        out << row.k << ',' << rho.str() << ',' << format_double(row.kl, "%.17g") << ','
            << format_double(row.wasserstein, "%.17g") << ',' << format_double(row.gap, "%.17g") << ','
            << csv_field(row.tag) << ',' << csv_field(row.corpus) << '\n';
    }
}

json to_json(const std::vector<DistanceRow>& rows) {
    json doc = json::array();
    for (const auto& row : rows) {
        doc.push_back({{"K", row.k},
                       {"rho", row.rho},
                       {"kl", row.kl},
                       {"kl_degenerate", row.kl_degenerate},
                       {"wasserstein", row.wasserstein},
                       {"gap", row.gap},
                       {"hypothesis", row.tag},
                       {"corpus", row.corpus}});
    }
    return doc;
}

}  // namespace anchortest
