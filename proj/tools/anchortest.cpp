// anchortest: command-line front end for the anchored community-structure test.

#include "anchortest/anchor.hpp"
#include "anchortest/battery.hpp"
#include "anchortest/cluster.hpp"
#include "anchortest/corpus.hpp"
#include "anchortest/error.hpp"
#include "anchortest/llm.hpp"
#include "anchortest/manifest.hpp"
#include "anchortest/preprocess.hpp"
#include "anchortest/rng.hpp"
#include "anchortest/stattests.hpp"
#include "anchortest/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anchortest;

namespace {

struct Common {
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out;
    std::string format = "csv";
};

void add_seed(CLI::App* cmd, Common& c) {
    cmd->add_option("--seed", c.seed, "Master RNG seed")->capture_default_str();
}

void add_threads(CLI::App* cmd, Common& c) {
    cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)")->capture_default_str();
}

void add_output(CLI::App* cmd, Common& c) {
    cmd->add_option("--out", c.out, "Output file (default: stdout)");
    cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
}

void print_seed(std::uint64_t seed) { std::cerr << "seed: " << seed << '\n'; }

/// Writes to --out, or stdout when it is empty.
void emit(const Common& c, const std::string& content) {
    if (c.out.empty() || c.out == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(c.out, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + c.out);
    out << content;
    if (!out) throw IoError("cannot write " + c.out);
    std::cerr << "wrote " << c.out << '\n';
}

MatrixFormat format_of(const std::string& flag, const fs::path& path) {
    return flag.empty() ? format_for_path(path) : parse_matrix_format(flag);
}

std::vector<std::size_t> parse_k_grid(const std::string& text) {
    std::vector<std::size_t> ks;
    std::stringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
        const auto dash = item.find('-');
        try {
            if (dash != std::string::npos) {
                const auto lo = std::stoul(item.substr(0, dash));
                const auto hi = std::stoul(item.substr(dash + 1));
                if (hi < lo) throw ParameterError("empty K range '" + item + "'");
                for (auto k = lo; k <= hi; ++k) ks.push_back(k);
            } else {
                ks.push_back(std::stoul(item));
            }
        } catch (const std::logic_error&) {
            throw ParameterError("bad --k-grid entry '" + item + "'");
        }
    }
    if (ks.empty()) throw ParameterError("--k-grid is empty");
    return ks;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    Common common;
    std::string in, in_format, out, out_format;
    bool normalize = false;
};

int cmd_ingest(const IngestArgs& a) {
    print_seed(a.common.seed);
    auto m = load_matrix(a.in, format_of(a.in_format, a.in));
    if (a.normalize) m = normalize_rows(m);
    std::cout << "rows: " << m.rows() << "\ncols: " << m.cols() << "\nunit_norm: " << (m.unit_norm() ? "yes" : "no")
              << '\n';
    if (!a.out.empty()) {
        save_matrix(m, a.out, format_of(a.out_format, a.out));
        std::cerr << "wrote " << a.out << '\n';
    }
    return 0;
}

struct LlmArgs {
    Common common;
    std::string texts, out, out_format, config, base_url, model, cache_dir, role = "G";
    std::string prompt{llm::kDefaultPromptTemplate};
    double temperature = 0.7;
    std::size_t concurrency = 0;
};

llm::ClientConfig client_config(const LlmArgs& a) {
    llm::ClientConfig cfg;
    if (!a.config.empty()) {
        std::ifstream in(a.config);
        if (!in) throw IoError("cannot open " + a.config);
        try {
            cfg = llm::client_config_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw FormatError(a.config + ": " + e.what());
        }
    }
    if (!a.base_url.empty()) cfg.base_url = a.base_url;
    if (!a.cache_dir.empty()) cfg.cache_dir = a.cache_dir;
    if (a.concurrency > 0) cfg.concurrency = a.concurrency;
    return cfg;
}

int cmd_embed(const LlmArgs& a) {
    print_seed(a.common.seed);
    auto cfg = client_config(a);
    if (!a.model.empty()) cfg.embedding_model = a.model;
    const auto texts = llm::read_lines(a.texts);
    auto endpoint = llm::make_http_embedding(cfg);
    const auto m = llm::embed_batch(texts, cfg, *endpoint, fs::path(a.out).stem().string());
    save_matrix(m, a.out, format_of(a.out_format, a.out));
    std::cout << "rows: " << m.rows() << "\ncols: " << m.cols() << '\n';
    std::cerr << "wrote " << a.out << '\n';
    return 0;
}

int cmd_paraphrase(const LlmArgs& a) {
    print_seed(a.common.seed);
    auto cfg = client_config(a);
    llm::ParaphraseJob job;
    job.inputs = llm::read_lines(a.texts);
    job.temperature = a.temperature;
    job.prompt_template = a.prompt;
    job.model = a.model.empty() ? cfg.chat_model : a.model;
    job.role = llm::parse_chain_role(a.role);
    auto endpoint = llm::make_http_chat(cfg);
    const auto outputs = llm::paraphrase_batch(job, cfg, *endpoint);
    llm::write_lines(outputs, a.out);
    std::cout << "paraphrased: " << outputs.size() << '\n';
    std::cerr << "wrote " << a.out << '\n';
    return 0;
}

struct ReduceArgs {
    Common common;
    std::vector<std::string> in, out;
    std::string in_format, out_format, mode = "per_dataset", model_out;
    std::size_t dim = 10;
};

int cmd_reduce(const ReduceArgs& a) {
    print_seed(a.common.seed);
    if (a.in.size() != a.out.size()) throw ParameterError("--in and --out need the same number of paths");
    const PcaMode mode = parse_pca_mode(a.mode);
    std::vector<PairedCollection::Member> members;
    for (std::size_t i = 0; i < a.in.size(); ++i) {
        members.emplace_back("m" + std::to_string(i), load_matrix(a.in[i], format_of(a.in_format, a.in[i])));
    }
    std::vector<EmbeddingMatrix> reduced;
    std::vector<PcaModel> models;
    if (members.size() == 1) {
        models.push_back(fit_pca(members[0].second, a.dim));
        reduced.push_back(apply_pca(models[0], members[0].second));
    } else {
        auto r = reduce_collection(validate_pairing(std::move(members)), a.dim, mode);
        for (const auto& [role, m] : r.data.members()) reduced.push_back(m);
        models = std::move(r.models);
    }
    for (std::size_t i = 0; i < reduced.size(); ++i) {
        save_matrix(reduced[i], a.out[i], format_of(a.out_format, a.out[i]));
        std::cout << a.out[i] << ": " << reduced[i].rows() << " x " << reduced[i].cols() << '\n';
    }
    if (!a.model_out.empty()) {
        json doc = json::array();
        for (const auto& m : models) doc.push_back(to_json(m));
        std::ofstream out(a.model_out);
        out << doc.dump(2) << '\n';
        if (!out) throw IoError("cannot write " + a.model_out);
    }
    return 0;
}

struct TestArgs {
    Common common;
    std::string anchor, d1, d2, in_format, mode = "per_dataset", distances_prefix;
    std::size_t k = 2, permutations = 999, pca_dim = 10, restarts = 10;
    double alpha = 0.05;
};

EmbeddingMatrix reduce_for_test(const EmbeddingMatrix& m, std::size_t dim) {
    if (dim == 0 || m.cols() <= dim) return m;
    return apply_pca(fit_pca(m, dim), m);
}

int cmd_test(const TestArgs& a) {
    print_seed(a.common.seed);
    const auto anchor = load_matrix(a.anchor, format_of(a.in_format, a.anchor));
    const auto d1 = load_matrix(a.d1, format_of(a.in_format, a.d1));
    const auto d2 = load_matrix(a.d2, format_of(a.in_format, a.d2));

    EmbeddingMatrix ra = anchor, r1 = d1, r2 = d2;
    if (parse_pca_mode(a.mode) == PcaMode::joint && std::max({anchor.cols(), d1.cols(), d2.cols()}) > a.pca_dim &&
        a.pca_dim > 0) {
        auto r = reduce_collection(
            validate_pairing({{"anchor", anchor}, {"nonanchor_1", d1}, {"nonanchor_2", d2}}), a.pca_dim, PcaMode::joint);
        ra = r.data.at("anchor");
        r1 = r.data.at("nonanchor_1");
        r2 = r.data.at("nonanchor_2");
    } else {
        ra = reduce_for_test(anchor, a.pca_dim);
        r1 = reduce_for_test(d1, a.pca_dim);
        r2 = reduce_for_test(d2, a.pca_dim);
    }

    AnchoredConfig cfg;
    cfg.k = a.k;
    cfg.kmeans.restarts = a.restarts;
    cfg.kmeans.threads = a.common.threads;
    cfg.permutation = {a.permutations, a.common.seed, a.alpha, a.common.threads};
    if (!a.distances_prefix.empty()) {
        const auto mapping = anchored_mapping(ra, r1, r2, a.k, cfg.kmeans, a.common.seed);
        save_distances_csv(mapping.first, a.distances_prefix + "_d1.csv");
        save_distances_csv(mapping.second, a.distances_prefix + "_d2.csv");
    }
    const TestReport report = anchored_test(ra, r1, r2, cfg);
    if (a.common.format == "json") {
        emit(a.common, to_json(report).dump(2) + "\n");
    } else {
        std::ostringstream out;
        out << "method,K,statistic,p_value,replicates,seed,alpha,reject\n";
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%zu,%llu,%g,%s\n", std::string(to_string(report.method)).c_str(),
                      a.k, report.statistic, report.p_value, report.replicates,
                      static_cast<unsigned long long>(report.seed), report.alpha, report.reject ? "true" : "false");
        out << buf;
        emit(a.common, out.str());
    }
    std::cerr << "p = " << format_pvalue(report.p_value, report.alpha, report.replicates) << '\n';
    return 0;
}

struct BatteryArgs {
    Common common;
    std::string manifest, k_grid, baselines = "hotelling,nploc,energy", mode = "per_dataset";
    std::optional<std::size_t> permutations;
    std::optional<double> alpha;
    std::optional<std::uint64_t> seed;
    std::size_t pca_dim = 10;
};

BatteryOptions battery_options(const BatteryArgs& a, const DatasetManifest& manifest) {
    BatteryOptions o = options_from_grid(manifest.grid);
    if (!a.k_grid.empty()) o.k_values = parse_k_grid(a.k_grid);
    if (a.permutations) o.permutations = *a.permutations;
    if (a.alpha) o.alpha = *a.alpha;
    if (a.seed) o.seed = *a.seed;
    o.pca_dim = a.pca_dim;
    o.pca_mode = parse_pca_mode(a.mode);
    o.threads = a.common.threads;
    set_baselines(o, a.baselines);
    return o;
}

DatasetManifest checked_manifest(const std::string& path) {
    if (path.empty()) throw ManifestError("--manifest is required");
    auto m = load_manifest(path);
    if (m.entries.empty()) throw ManifestError("manifest lists no datasets");
    validate_manifest(m);
    return m;
}

int cmd_battery(const BatteryArgs& a) {
    const auto manifest = checked_manifest(a.manifest);
    const auto options = battery_options(a, manifest);
    print_seed(options.seed);
    const auto result = run_battery(load_battery_inputs(manifest), options);
    if (a.common.format == "json") {
        emit(a.common, to_json(result).dump(2) + "\n");
    } else {
        std::ostringstream out;
        write_battery_csv(out, result);
        emit(a.common, out.str());
    }
    if (!a.common.out.empty()) write_battery_console(std::cout, result);
    return 0;
}

int cmd_distances(const BatteryArgs& a) {
    const auto manifest = checked_manifest(a.manifest);
    const auto options = battery_options(a, manifest);
    print_seed(options.seed);
    const auto rows = run_distances(load_battery_inputs(manifest), options);
    if (a.common.format == "json") {
        emit(a.common, to_json(rows).dump(2) + "\n");
    } else {
        std::ostringstream out;
        write_distances_csv(out, rows);
        emit(a.common, out.str());
    }
    return 0;
}

struct SynthArgs {
    Common common;
    std::string scenario = "null", out_dir = "synthetic", matrix_format = "binary";
    ScenarioConfig cfg;
    std::vector<double> temperatures{0.1, 0.4, 0.7, 1.0, 1.5};
    double base_drift = 0.1, drift_per_temperature = 0.1;
    std::size_t replicates = 200, k = 2, permutations = 999, restarts = 10;
    double alpha = 0.05;
};

json manifest_entry(const std::string& file, const std::string& role, const std::string& name,
                    std::optional<double> rho, MatrixFormat format, const std::string& corpus) {
    json e = {{"path", file}, {"role", role}, {"name", name}, {"format", std::string(to_string(format))}, {"corpus", corpus}};
    e["temperature"] = rho ? json(*rho) : json(nullptr);
    return e;
}

int cmd_synth(const SynthArgs& a) {
    print_seed(a.common.seed);
    ScenarioConfig cfg = a.cfg;
    cfg.seed = a.common.seed;
    const MatrixFormat format = parse_matrix_format(a.matrix_format);
    const std::string ext = format == MatrixFormat::csv ? ".csv" : ".bin";
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    json datasets = json::array();
    json doc;

    auto write = [&](const EmbeddingMatrix& m, const std::string& stem) {
        save_matrix(m, dir / (stem + ext), format);
        return stem + ext;
    };

    if (a.scenario == "chain") {
        ChainConfig chain{cfg, a.temperatures, a.base_drift, a.drift_per_temperature};
        const auto corpus = generate_chain(chain);
        datasets.push_back(manifest_entry(write(corpus.original, "O"), "anchor", "O", std::nullopt, format, "synthetic"));
        for (const auto& level : corpus.levels) {
            std::ostringstream tag;
            tag << level.rho;
            datasets.push_back(manifest_entry(write(level.g, "G_" + tag.str()), "nonanchor_G", "G", level.rho, format, "synthetic"));
            datasets.push_back(manifest_entry(write(level.g_prime, "Gprime_" + tag.str()), "nonanchor_Gprime", "Gprime",
                                              level.rho, format, "synthetic"));
            datasets.push_back(manifest_entry(write(level.s, "S_" + tag.str()), "nonanchor_S", "S", level.rho, format, "synthetic"));
        }
        doc["hypotheses"] = json::array({{{"tag", "H0(O,{G,S})"}, {"anchor", "O"}, {"nonanchors", {"G", "S"}}},
                                         {{"tag", "H0(O,{G,G'})"}, {"anchor", "O"}, {"nonanchors", {"G", "Gprime"}}}});
    } else {
        const ScenarioKind kind = parse_scenario_kind(a.scenario);
        cfg.structure = kind == ScenarioKind::null ? Structure::shared : Structure::independent;
        const auto triple = kind == ScenarioKind::null ? generate_null_triple(cfg) : generate_alt_triple(cfg);
        for (const auto& [role, m] : triple.data.members()) {
            datasets.push_back(manifest_entry(write(m, role), role, role, std::nullopt, format, "synthetic"));
        }
        std::ofstream labels(dir / "labels.json");
        labels << json({{"anchor", triple.anchor_labels}, {"nonanchor_1", triple.first_labels},
                        {"nonanchor_2", triple.second_labels}})
                      .dump()
               << '\n';
    }
    doc["datasets"] = datasets;
    doc["grid"] = {{"k_values", {2, 3, 4, 5}}, {"alpha", 0.05}, {"permutations", 999}, {"seed", a.common.seed}};
    doc["scenario"] = to_json(cfg);
    std::ofstream out(dir / "manifest.json");
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("cannot write manifest");
    std::cout << "wrote " << datasets.size() << " datasets and " << (dir / "manifest.json").string() << '\n';
    return 0;
}

int cmd_mc(const SynthArgs& a) {
    print_seed(a.common.seed);
    ScenarioConfig cfg = a.cfg;
    cfg.seed = a.common.seed;
    MonteCarloConfig mc;
    mc.replicates = a.replicates;
    mc.threads = a.common.threads;
    mc.test.k = a.k;
    mc.test.kmeans.restarts = a.restarts;
    mc.test.permutation.replicates = a.permutations;
    mc.test.permutation.alpha = a.alpha;
    const auto report = monte_carlo(parse_scenario_kind(a.scenario), cfg, mc);
    json doc = to_json(report);
    doc["config"] = to_json(cfg);
    doc["K"] = a.k;
    doc["permutations"] = a.permutations;
    Common c = a.common;
    c.format = "json";
    emit(c, doc.dump(2) + "\n");
    std::cerr << "rejection rate: " << report.rate << " [" << report.ci_low << ", " << report.ci_high << "]"
              << (report.ci_degenerate ? " (degenerate CI)" : "") << ", vacuous: " << report.vacuous
              << ", mean runtime: " << report.mean_runtime_ms << " ms\n";
    return 0;
}

void add_scenario_options(CLI::App* cmd, SynthArgs& a) {
    cmd->add_option("--n", a.cfg.n, "Rows per dataset")->capture_default_str();
    cmd->add_option("--dim", a.cfg.dim, "Ambient dimension")->capture_default_str();
    cmd->add_option("--k-true", a.cfg.k_true, "Latent communities")->capture_default_str();
    cmd->add_option("--separation", a.cfg.separation, "Distance between community means, in noise sd")
        ->capture_default_str();
    cmd->add_option("--noise", a.cfg.noise_sd, "Noise standard deviation")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anchored hypothesis tests for paired embedding datasets"};
    app.require_subcommand(1);
    std::function<int()> run;

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate and convert an embedding matrix");
    c_ingest->add_option("--in", ingest.in, "Input matrix")->required();
    c_ingest->add_option("--in-format", ingest.in_format, "csv or binary (default: by extension)");
    c_ingest->add_option("--out", ingest.out, "Converted output");
    c_ingest->add_option("--out-format", ingest.out_format, "csv or binary (default: by extension)");
    c_ingest->add_flag("--normalize", ingest.normalize, "Scale rows to unit norm");
    add_seed(c_ingest, ingest.common);
    c_ingest->callback([&] { run = [&] { return cmd_ingest(ingest); }; });

    LlmArgs embed;
    auto* c_embed = app.add_subcommand("embed", "Embed one text per line through an embedding endpoint");
    c_embed->add_option("--texts", embed.texts, "Text file, one text per line")->required();
    c_embed->add_option("--out", embed.out, "Output matrix")->required();
    c_embed->add_option("--out-format", embed.out_format, "csv or binary (default: by extension)");
    c_embed->add_option("--client-config", embed.config, "Client config JSON");
    c_embed->add_option("--base-url", embed.base_url, "Endpoint base URL");
    c_embed->add_option("--model", embed.model, "Embedding model tag");
    c_embed->add_option("--cache-dir", embed.cache_dir, "Response cache directory");
    c_embed->add_option("--concurrency", embed.concurrency, "In-flight requests");
    add_seed(c_embed, embed.common);
    c_embed->callback([&] { run = [&] { return cmd_embed(embed); }; });

    LlmArgs para;
    auto* c_para = app.add_subcommand("paraphrase", "Paraphrase one text per line through a chat endpoint");
    c_para->add_option("--texts", para.texts, "Text file, one text per line")->required();
    c_para->add_option("--out", para.out, "Output text file")->required();
    c_para->add_option("--temperature", para.temperature, "Sampling temperature in [0, 2]")->capture_default_str();
    c_para->add_option("--role", para.role, "Chain role: G, Gprime or S")->capture_default_str();
    c_para->add_option("--prompt", para.prompt, "Prompt template; the text follows on a new line")->capture_default_str();
    c_para->add_option("--client-config", para.config, "Client config JSON");
    c_para->add_option("--base-url", para.base_url, "Endpoint base URL");
    c_para->add_option("--model", para.model, "Chat model tag");
    c_para->add_option("--cache-dir", para.cache_dir, "Response cache directory");
    c_para->add_option("--concurrency", para.concurrency, "In-flight requests");
    add_seed(c_para, para.common);
    c_para->callback([&] { run = [&] { return cmd_paraphrase(para); }; });

    ReduceArgs reduce;
    auto* c_reduce = app.add_subcommand("reduce", "PCA-reduce one or more paired matrices");
    c_reduce->add_option("--in", reduce.in, "Input matrices")->required();
    c_reduce->add_option("--out", reduce.out, "Output matrices, one per input")->required();
    c_reduce->add_option("--in-format", reduce.in_format, "csv or binary (default: by extension)");
    c_reduce->add_option("--out-format", reduce.out_format, "csv or binary (default: by extension)");
    c_reduce->add_option("--pca-dim", reduce.dim, "Target dimension")->capture_default_str();
    c_reduce->add_option("--pca-mode", reduce.mode, "per_dataset or joint")->capture_default_str();
    c_reduce->add_option("--model-out", reduce.model_out, "Write fitted PCA models as JSON");
    add_seed(c_reduce, reduce.common);
    c_reduce->callback([&] { run = [&] { return cmd_reduce(reduce); }; });

    TestArgs test;
    auto* c_test = app.add_subcommand("test", "Anchored test on a single anchor/D1/D2 triple");
    c_test->add_option("--anchor", test.anchor, "Anchor matrix")->required();
    c_test->add_option("--d1", test.d1, "First non-anchor matrix")->required();
    c_test->add_option("--d2", test.d2, "Second non-anchor matrix")->required();
    c_test->add_option("--in-format", test.in_format, "csv or binary (default: by extension)");
    c_test->add_option("--k", test.k, "Clusters")->capture_default_str();
    c_test->add_option("--permutations", test.permutations, "Sign-flip replicates")->capture_default_str();
    c_test->add_option("--alpha", test.alpha, "Significance level")->capture_default_str();
    c_test->add_option("--restarts", test.restarts, "k-means restarts")->capture_default_str();
    c_test->add_option("--pca-dim", test.pca_dim, "Reduce wider inputs to this dimension (0 = off)")
        ->capture_default_str();
    c_test->add_option("--pca-mode", test.mode, "per_dataset or joint")->capture_default_str();
    c_test->add_option("--distances", test.distances_prefix, "Also write <prefix>_d1.csv and <prefix>_d2.csv");
    add_seed(c_test, test.common);
    add_threads(c_test, test.common);
    add_output(c_test, test.common);
    c_test->callback([&] { run = [&] { return cmd_test(test); }; });

    BatteryArgs battery;
    BatteryArgs distances;
    for (auto [name, args, help] : {std::tuple{"battery", &battery, "Run the p-value table over a manifest"},
                                    std::tuple{"distances", &distances, "KL and W1 between mapped distance sets per K"}}) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--manifest", args->manifest, "Manifest JSON")->required();
        cmd->add_option("--k-grid", args->k_grid, "Comma list or range of K values, e.g. 2-5");
        cmd->add_option("--permutations", args->permutations, "Permutation replicates (default: manifest)");
        cmd->add_option("--alpha", args->alpha, "Significance level (default: manifest)");
        cmd->add_option("--seed", args->seed, "Master seed (default: manifest)");
        cmd->add_option("--baselines", args->baselines, "Comma list of hotelling, nploc, energy, or none")
            ->capture_default_str();
        cmd->add_option("--pca-dim", args->pca_dim, "Reduce wider inputs to this dimension (0 = off)")
            ->capture_default_str();
        cmd->add_option("--pca-mode", args->mode, "per_dataset or joint (anchored test)")->capture_default_str();
        add_threads(cmd, args->common);
        add_output(cmd, args->common);
        if (args == &battery) {
            cmd->callback([&] { run = [&] { return cmd_battery(battery); }; });
        } else {
            cmd->callback([&] { run = [&] { return cmd_distances(distances); }; });
        }
    }

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic null, alt or chain corpus with its manifest");
    c_synth->add_option("--scenario", synth.scenario, "null, alt or chain")
        ->check(CLI::IsMember({"null", "alt", "chain"}))
        ->capture_default_str();
    c_synth->add_option("--out-dir", synth.out_dir, "Output directory")->capture_default_str();
    c_synth->add_option("--matrix-format", synth.matrix_format, "csv or binary")->capture_default_str();
    c_synth->add_option("--temperatures", synth.temperatures, "Chain temperatures")->capture_default_str();
    c_synth->add_option("--base-drift", synth.base_drift, "Chain label drift at rho = 0")->capture_default_str();
    c_synth->add_option("--drift-per-temperature", synth.drift_per_temperature, "Chain drift slope")
        ->capture_default_str();
    add_scenario_options(c_synth, synth);
    add_seed(c_synth, synth.common);
    c_synth->callback([&] { run = [&] { return cmd_synth(synth); }; });

    SynthArgs mc;
    auto* c_mc = app.add_subcommand("mc", "Monte Carlo rejection rate of the anchored test");
    c_mc->add_option("--scenario", mc.scenario, "null or alt")->check(CLI::IsMember({"null", "alt"}))->capture_default_str();
    c_mc->add_option("--replicates", mc.replicates, "Monte Carlo replicates")->capture_default_str();
    c_mc->add_option("--k", mc.k, "Clusters")->capture_default_str();
    c_mc->add_option("--permutations", mc.permutations, "Sign-flip replicates")->capture_default_str();
    c_mc->add_option("--alpha", mc.alpha, "Significance level")->capture_default_str();
    c_mc->add_option("--restarts", mc.restarts, "k-means restarts")->capture_default_str();
    c_mc->add_option("--out", mc.common.out, "Report file (default: stdout)");
    add_scenario_options(c_mc, mc);
    add_seed(c_mc, mc.common);
    add_threads(c_mc, mc.common);
    c_mc->callback([&] { run = [&] { return cmd_mc(mc); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        return run();
    } catch (const VacuousTestError& e) {
        std::cerr << "error (vacuous): " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        std::cerr << "error (" << e.kind() << "): " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
