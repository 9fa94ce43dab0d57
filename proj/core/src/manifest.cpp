#include "anchortest/manifest.hpp"

#include "anchortest/error.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace anchortest {

using nlohmann::json;

namespace {

template <class T>
T field_or(const json& obj, const char* key, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ManifestError(std::string("field '") + key + "': " + e.what());
    }
}

std::string required_string(const json& obj, const char* key, std::size_t index) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw ManifestError("datasets[" + std::to_string(index) + "] needs a string '" + key + "'");
    }
    return it->get<std::string>();
}

bool is_nonanchor_role(const std::string& role) { return role.rfind("nonanchor", 0) == 0; }

struct Group {
    std::string corpus;
    std::optional<double> rho;
};

/// Entries visible in (corpus, rho): those with that temperature, plus temperature-free
/// entries of the corpus. A temperature-specific entry shadows a shared one with the same name.
std::vector<const ManifestEntry*> visible_entries(const DatasetManifest& m, const Group& g) {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : m.entries) {
        if (e.corpus != g.corpus) continue;
        if (e.temperature == g.rho) out.push_back(&e);
    }
    if (g.rho) {
        for (const auto& e : m.entries) {
            if (e.corpus != g.corpus || e.temperature) continue;
            const bool shadowed = std::any_of(out.begin(), out.end(), [&](const ManifestEntry* o) { return o->name == e.name; });
            if (!shadowed) out.push_back(&e);
        }
    }
    return out;
}

}  // namespace

std::string default_hypothesis_tag(const std::string& anchor, const std::string& first, const std::string& second) {
    return "H0(" + anchor + ",{" + first + "," + second + "})";
}

DatasetManifest parse_manifest(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) throw ManifestError("manifest must be a JSON object");
    DatasetManifest m;
    const auto datasets = doc.find("datasets");
    if (datasets == doc.end() || !datasets->is_array() || datasets->empty()) {
        throw ManifestError("manifest has no datasets");
    }
    for (std::size_t i = 0; i < datasets->size(); ++i) {
        const json& d = (*datasets)[i];
        if (!d.is_object()) throw ManifestError("datasets[" + std::to_string(i) + "] must be an object");
        ManifestEntry e;
        std::filesystem::path p = required_string(d, "path", i);
        e.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
        e.role = required_string(d, "role", i);
        if (const auto t = d.find("temperature"); t != d.end() && !t->is_null()) {
            if (!t->is_number()) throw ManifestError("datasets[" + std::to_string(i) + "].temperature must be a number");
            e.temperature = t->get<double>();
        }
        const std::string format = field_or<std::string>(d, "format", "");
        e.format = format.empty() ? format_for_path(e.path) : parse_matrix_format(format);
        e.corpus = field_or<std::string>(d, "corpus", "default");
        e.name = field_or<std::string>(d, "name", e.role);
        m.entries.push_back(std::move(e));
    }
    if (const auto grid = doc.find("grid"); grid != doc.end()) {
        if (!grid->is_object()) throw ManifestError("grid must be an object");
        m.grid.k_values = field_or<std::vector<std::size_t>>(*grid, "k_values", m.grid.k_values);
        m.grid.alpha = field_or<double>(*grid, "alpha", m.grid.alpha);
        m.grid.permutations = field_or<std::size_t>(*grid, "permutations", m.grid.permutations);
        m.grid.seed = field_or<std::uint64_t>(*grid, "seed", m.grid.seed);
    }
    if (const auto hyps = doc.find("hypotheses"); hyps != doc.end()) {
        if (!hyps->is_array()) throw ManifestError("hypotheses must be an array");
        for (const json& h : *hyps) {
            HypothesisSpec spec;
            spec.anchor = field_or<std::string>(h, "anchor", "");
            const auto non = field_or<std::vector<std::string>>(h, "nonanchors", {});
            if (spec.anchor.empty() || non.size() != 2) {
                throw ManifestError("each hypothesis needs an 'anchor' and exactly two 'nonanchors'");
            }
            spec.first = non[0];
            spec.second = non[1];
            spec.tag = field_or<std::string>(h, "tag", default_hypothesis_tag(spec.anchor, spec.first, spec.second));
            if (const auto b = h.find("ball_pvalue"); b != h.end() && b->is_number()) spec.ball_pvalue = b->get<double>();
            m.hypotheses.push_back(std::move(spec));
        }
    }
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ManifestError(std::string("manifest is not valid JSON: ") + e.what());
    }
    return parse_manifest(doc, path.parent_path());
}

json to_json(const DatasetManifest& manifest) {
    json datasets = json::array();
    for (const auto& e : manifest.entries) {
        json d = {{"path", e.path.generic_string()},
                  {"role", e.role},
                  {"format", std::string(to_string(e.format))},
                  {"corpus", e.corpus},
                  {"name", e.name}};
        d["temperature"] = e.temperature ? json(*e.temperature) : json(nullptr);
        datasets.push_back(std::move(d));
    }
    json doc = {{"datasets", datasets},
                {"grid",
                 {{"k_values", manifest.grid.k_values},
                  {"alpha", manifest.grid.alpha},
                  {"permutations", manifest.grid.permutations},
                  {"seed", manifest.grid.seed}}}};
    if (!manifest.hypotheses.empty()) {
        json hyps = json::array();
        for (const auto& h : manifest.hypotheses) {
            json j = {{"tag", h.tag}, {"anchor", h.anchor}, {"nonanchors", {h.first, h.second}}};
            if (h.ball_pvalue) j["ball_pvalue"] = *h.ball_pvalue;
            hyps.push_back(std::move(j));
        }
        doc["hypotheses"] = std::move(hyps);
    }
    return doc;
}

void validate_manifest(const DatasetManifest& manifest) {
    if (manifest.entries.empty()) throw ManifestError("manifest has no datasets");
    if (manifest.grid.k_values.empty()) throw ManifestError("grid.k_values is empty");
    for (auto k : manifest.grid.k_values) {
        if (k < 2) throw ManifestError("grid.k_values must all be >= 2");
    }
    if (!(manifest.grid.alpha > 0.0 && manifest.grid.alpha < 1.0)) throw ManifestError("grid.alpha must lie in (0, 1)");
    if (manifest.grid.permutations < 1) throw ManifestError("grid.permutations must be >= 1");
    for (const auto& e : manifest.entries) {
        if (!std::filesystem::exists(e.path)) throw ManifestError("dataset path does not exist: " + e.path.string());
    }
}

std::vector<TestTriple> expand_triples(const DatasetManifest& manifest) {
    std::vector<std::string> corpora;
    for (const auto& e : manifest.entries) {
        if (std::find(corpora.begin(), corpora.end(), e.corpus) == corpora.end()) corpora.push_back(e.corpus);
    }

    std::vector<TestTriple> triples;
    for (const auto& corpus : corpora) {
        std::set<double> temps;
        bool has_untempered = false;
        for (const auto& e : manifest.entries) {
            if (e.corpus != corpus) continue;
            if (e.temperature) {
                temps.insert(*e.temperature);
            } else {
                has_untempered = true;
            }
        }
        std::vector<Group> groups;
        if (temps.empty() && has_untempered) groups.push_back({corpus, std::nullopt});
        for (double t : temps) groups.push_back({corpus, t});

        for (const auto& group : groups) {
            const auto visible = visible_entries(manifest, group);
            auto find = [&](const std::string& name) -> const ManifestEntry* {
                for (const auto* e : visible) {
                    if (e->name == name) return e;
                }
                return nullptr;
            };

            if (!manifest.hypotheses.empty()) {
                for (const auto& h : manifest.hypotheses) {
                    const auto* a = find(h.anchor);
                    const auto* f = find(h.first);
                    const auto* s = find(h.second);
                    if (!a || !f || !s) continue;
                    // A tempered group only hosts triples that involve at least one of its own datasets.
                    if (group.rho && !a->temperature && !f->temperature && !s->temperature) continue;
                    if (a == f || a == s || f == s) throw ManifestError("hypothesis " + h.tag + " repeats a dataset");
                    triples.push_back({corpus, group.rho, h.tag, *a, *f, *s, h.ball_pvalue});
                }
                continue;
            }

            std::vector<const ManifestEntry*> anchors;
            std::vector<const ManifestEntry*> others;
            for (const auto* e : visible) {
                if (e->role == "anchor") {
                    anchors.push_back(e);
                } else if (is_nonanchor_role(e->role)) {
                    others.push_back(e);
                } else {
                    throw ManifestError("unknown role '" + e->role + "' (expected anchor or nonanchor_<k>)");
                }
            }
            const std::string where = "corpus '" + corpus + "'" +
                                      (group.rho ? " at temperature " + std::to_string(*group.rho) : std::string());
            if (anchors.size() != 1) {
                throw ManifestError(where + " needs exactly one anchor, found " + std::to_string(anchors.size()));
            }
            if (others.size() < 2) {
                throw ManifestError(where + " needs at least two non-anchors, found " + std::to_string(others.size()));
            }
            std::stable_sort(others.begin(), others.end(),
                             [](const ManifestEntry* x, const ManifestEntry* y) { return x->role < y->role; });
            for (std::size_t i = 0; i < others.size(); ++i) {
                for (std::size_t j = i + 1; j < others.size(); ++j) {
                    const auto* a = anchors.front();
                    triples.push_back({corpus, group.rho, default_hypothesis_tag(a->name, others[i]->name, others[j]->name),
                                       *a, *others[i], *others[j], std::nullopt});
                }
            }
        }
    }
    if (triples.empty()) throw ManifestError("manifest defines no test triples");
    return triples;
}

}  // namespace anchortest
