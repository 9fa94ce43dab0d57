#include "anchortest/llm.hpp"

#include "anchortest/error.hpp"
#include "anchortest/parallel.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace anchortest::llm {

using nlohmann::json;

ClientConfig client_config_from_json(const json& j) {
    ClientConfig cfg;
    try {
        cfg.base_url = j.value("base_url", cfg.base_url);
        cfg.api_key_env = j.value("api_key_env", cfg.api_key_env);
        cfg.chat_model = j.value("chat_model", cfg.chat_model);
        cfg.embedding_model = j.value("embedding_model", cfg.embedding_model);
        cfg.concurrency = j.value("concurrency", cfg.concurrency);
        cfg.max_retries = j.value("max_retries", cfg.max_retries);
        cfg.backoff = std::chrono::milliseconds(j.value("backoff_ms", cfg.backoff.count()));
        cfg.timeout = std::chrono::seconds(j.value("timeout_s", cfg.timeout.count()));
        cfg.cache_dir = j.value("cache_dir", cfg.cache_dir.string());
        cfg.embed_batch = j.value("embed_batch", cfg.embed_batch);
    } catch (const json::exception& e) {
        throw ParameterError(std::string("client config: ") + e.what());
    }
    if (cfg.concurrency == 0) throw ParameterError("client concurrency must be >= 1");
    if (cfg.embed_batch == 0) throw ParameterError("embed_batch must be >= 1");
    return cfg;
}

json to_json(const ClientConfig& cfg) {
    return {{"base_url", cfg.base_url},
            {"api_key_env", cfg.api_key_env},
            {"chat_model", cfg.chat_model},
            {"embedding_model", cfg.embedding_model},
            {"concurrency", cfg.concurrency},
            {"max_retries", cfg.max_retries},
            {"backoff_ms", cfg.backoff.count()},
            {"timeout_s", cfg.timeout.count()},
            {"cache_dir", cfg.cache_dir.string()},
            {"embed_batch", cfg.embed_batch}};
}

namespace {

struct Endpoint {
    std::string origin;
    std::string prefix;
};

Endpoint split_base_url(const std::string& url) {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ParameterError("base URL needs a scheme: " + url);
    const auto path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path), prefix};
}

class HttpBase {
public:
    explicit HttpBase(const ClientConfig& cfg) : endpoint_(split_base_url(cfg.base_url)), timeout_(cfg.timeout) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str())) token_ = key;
    }

protected:
    json post(const std::string& route, const json& body) const {
        httplib::Client client(endpoint_.origin);
        client.set_connection_timeout(static_cast<time_t>(timeout_.count()));
        client.set_read_timeout(static_cast<time_t>(timeout_.count()));
        if (!token_.empty()) client.set_bearer_token_auth(token_);
        auto res = client.Post(endpoint_.prefix + route, body.dump(), "application/json");
        if (!res) throw IoError("request to " + endpoint_.origin + endpoint_.prefix + route + " failed: " +
                                httplib::to_string(res.error()));
        if (res->status / 100 != 2) {
            throw IoError("HTTP " + std::to_string(res->status) + " from " + route + ": " + res->body.substr(0, 200));
        }
        try {
            return json::parse(res->body);
        } catch (const json::exception& e) {
            throw FormatError(std::string("malformed response body: ") + e.what());
        }
    }

private:
    Endpoint endpoint_;
    std::chrono::seconds timeout_;
    std::string token_;
};

class HttpChat final : public ChatEndpoint, private HttpBase {
public:
    using HttpBase::HttpBase;
    std::string complete(const std::string& model, const std::string& prompt, double temperature) override {
        const json body = {{"model", model},
                           {"temperature", temperature},
                           {"messages", json::array({{{"role", "user"}, {"content", prompt}}})}};
        const json reply = post("/chat/completions", body);
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw FormatError(std::string("unexpected chat response: ") + e.what());
        }
    }
};

class HttpEmbedding final : public EmbeddingEndpoint, private HttpBase {
public:
    using HttpBase::HttpBase;
    std::vector<std::vector<double>> embed(const std::string& model, const std::vector<std::string>& texts) override {
        const json reply = post("/embeddings", {{"model", model}, {"input", texts}});
        try {
            const auto& data = reply.at("data");
            std::vector<std::vector<double>> out(texts.size());
            std::vector<bool> seen(texts.size(), false);
            for (std::size_t pos = 0; pos < data.size(); ++pos) {
                const auto& item = data.at(pos);
                const std::size_t idx = item.value("index", pos);
                if (idx >= texts.size() || seen[idx]) throw FormatError("embedding response has a bad index");
                seen[idx] = true;
                out[idx] = item.at("embedding").get<std::vector<double>>();
            }
            if (data.size() != texts.size()) throw FormatError("embedding response has the wrong number of items");
            return out;
        } catch (const json::exception& e) {
            throw FormatError(std::string("unexpected embedding response: ") + e.what());
        }
    }
};

/// Runs attempt() up to 1 + max_retries times with exponential backoff and jitter.
template <class Fn>
bool with_retries(const ClientConfig& cfg, std::size_t salt, Fn&& attempt) {
    std::minstd_rand jitter(static_cast<std::minstd_rand::result_type>(salt + 1));
    for (std::size_t tries = 0;; ++tries) {
        try {
            attempt();
            return true;
        } catch (const std::exception&) {
            if (tries >= cfg.max_retries) return false;
        }
        const auto base = cfg.backoff * (1LL << std::min<std::size_t>(tries, 16));
        const auto extra = std::chrono::milliseconds(base.count() > 0 ? jitter() % (base.count() / 2 + 1) : 0);
        std::this_thread::sleep_for(base + extra);
    }
}

}  // namespace

std::unique_ptr<ChatEndpoint> make_http_chat(const ClientConfig& cfg) { return std::make_unique<HttpChat>(cfg); }

std::unique_ptr<EmbeddingEndpoint> make_http_embedding(const ClientConfig& cfg) {
    return std::make_unique<HttpEmbedding>(cfg);
}

std::string_view to_string(ChainRole role) {
    switch (role) {
        case ChainRole::G: return "G";
        case ChainRole::Gprime: return "Gprime";
        case ChainRole::S: return "S";
    }
    return "G";
}

ChainRole parse_chain_role(std::string_view name) {
    if (name == "G") return ChainRole::G;
    if (name == "Gprime" || name == "G'") return ChainRole::Gprime;
    if (name == "S") return ChainRole::S;
    throw ParameterError("unknown chain role '" + std::string(name) + "' (expected G, Gprime or S)");
}

void validate(const ParaphraseJob& job) {
    if (!(job.temperature >= 0.0 && job.temperature <= 2.0)) {
        throw ParameterError("temperature must lie in [0, 2], got " + std::to_string(job.temperature));
    }
    if (job.model.empty()) throw ParameterError("paraphrase job needs a model tag");
}

std::string render_prompt(const std::string& prompt_template, const std::string& text) {
    return prompt_template + "\n" + text;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

ContentCache::ContentCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!enabled()) return;
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::optional<json> ContentCache::get(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(dir_ / (key + ".json"));
    if (!in) return std::nullopt;
    try {
        return json::parse(in);
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

void ContentCache::put(const std::string& key, const json& value) const {
    if (!enabled()) return;
    static std::atomic<std::uint64_t> counter{0};
    const auto final_path = dir_ / (key + ".json");
    const auto tmp = dir_ / (key + ".tmp." + std::to_string(counter.fetch_add(1)) + "." +
                             std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write cache file " + tmp.string());
        out << value.dump();
        if (!out) throw IoError("cannot write cache file " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot publish cache file " + final_path.string());
    }
}

std::string ContentCache::paraphrase_key(const ParaphraseJob& job, const std::string& input) {
    const json key = {{"kind", "paraphrase"},
                      {"model", job.model},
                      {"temperature", job.temperature},
                      {"template", job.prompt_template},
                      {"role", std::string(to_string(job.role))},
                      {"input", input}};
    return sha256_hex(key.dump());
}

std::string ContentCache::embedding_key(const std::string& model, const std::string& text) {
    const json key = {{"kind", "embedding"}, {"model", model}, {"text", text}};
    return sha256_hex(key.dump());
}

std::vector<std::string> paraphrase_batch(const ParaphraseJob& job, const ClientConfig& cfg, ChatEndpoint& endpoint) {
    validate(job);
    const ContentCache cache(cfg.cache_dir);
    const std::size_t n = job.inputs.size();
    std::vector<std::string> out(n);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
        if (auto hit = cache.get(ContentCache::paraphrase_key(job, job.inputs[i])); hit && hit->contains("output")) {
            out[i] = (*hit)["output"].get<std::string>();
        } else {
            pending.push_back(i);
        }
    }

    std::vector<char> ok(pending.size(), 0);
    parallel_for(pending.size(), static_cast<unsigned>(std::max<std::size_t>(cfg.concurrency, 1)), [&](std::size_t slot) {
        const std::size_t i = pending[slot];
        ok[slot] = with_retries(cfg, i, [&] {
            std::string text = endpoint.complete(job.model, render_prompt(job.prompt_template, job.inputs[i]), job.temperature);
            cache.put(ContentCache::paraphrase_key(job, job.inputs[i]), {{"input", job.inputs[i]}, {"output", text}});
            out[i] = std::move(text);
        });
    });

    std::vector<std::size_t> failed;
    for (std::size_t slot = 0; slot < pending.size(); ++slot) {
        if (!ok[slot]) failed.push_back(pending[slot]);
    }
    if (!failed.empty()) {
        throw TransportError("paraphrase requests failed for " + std::to_string(failed.size()) + " of " +
                                 std::to_string(n) + " inputs",
                             std::move(failed));
    }
    return out;
}

EmbeddingMatrix embed_batch(const std::vector<std::string>& texts, const ClientConfig& cfg, EmbeddingEndpoint& endpoint,
                            std::string label) {
    if (texts.size() < 2) throw ArityError("embedding needs at least 2 texts");
    if (cfg.embed_batch == 0) throw ParameterError("embed_batch must be >= 1");
    const ContentCache cache(cfg.cache_dir);
    const std::size_t n = texts.size();
    std::vector<std::vector<double>> vectors(n);
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < n; ++i) {
        if (auto hit = cache.get(ContentCache::embedding_key(cfg.embedding_model, texts[i])); hit && hit->contains("embedding")) {
            vectors[i] = (*hit)["embedding"].get<std::vector<double>>();
        } else {
            pending.push_back(i);
        }
    }

    const std::size_t chunks = (pending.size() + cfg.embed_batch - 1) / cfg.embed_batch;
    std::vector<char> ok(chunks, 0);
    parallel_for(chunks, static_cast<unsigned>(std::max<std::size_t>(cfg.concurrency, 1)), [&](std::size_t c) {
        const std::size_t begin = c * cfg.embed_batch;
        const std::size_t end = std::min(pending.size(), begin + cfg.embed_batch);
        std::vector<std::string> batch;
        for (std::size_t s = begin; s < end; ++s) batch.push_back(texts[pending[s]]);
        ok[c] = with_retries(cfg, c, [&] {
            auto result = endpoint.embed(cfg.embedding_model, batch);
            if (result.size() != batch.size()) throw FormatError("endpoint returned the wrong number of embeddings");
            for (std::size_t s = begin; s < end; ++s) {
                const std::size_t i = pending[s];
                cache.put(ContentCache::embedding_key(cfg.embedding_model, texts[i]),
                          {{"text", texts[i]}, {"embedding", result[s - begin]}});
                vectors[i] = std::move(result[s - begin]);
            }
        });
    });

    std::vector<std::size_t> failed;
    for (std::size_t c = 0; c < chunks; ++c) {
        if (ok[c]) continue;
        const std::size_t end = std::min(pending.size(), (c + 1) * cfg.embed_batch);
        for (std::size_t s = c * cfg.embed_batch; s < end; ++s) failed.push_back(pending[s]);
    }
    if (!failed.empty()) {
        throw TransportError("embedding requests failed for " + std::to_string(failed.size()) + " of " +
                                 std::to_string(n) + " texts",
                             std::move(failed));
    }

    const std::size_t p = vectors.front().size();
    if (p == 0) throw DimensionError("endpoint returned an empty embedding");
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        if (vectors[i].size() != p) {
            throw DimensionError("embedding " + std::to_string(i) + " has " + std::to_string(vectors[i].size()) +
                                 " dimensions, expected " + std::to_string(p));
        }
        for (std::size_t j = 0; j < p; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vectors[i][j];
    }
    return normalize_rows(EmbeddingMatrix(std::move(m), std::move(label)));
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (std::string line : lines) {
        for (auto& ch : line) {
            if (ch == '\n' || ch == '\r') ch = ' ';
        }
        out << line << '\n';
    }
    if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace anchortest::llm
