#pragma once

#include "anchortest/corpus.hpp"

#include <json.hpp>

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace anchortest::llm {

struct ClientConfig {
    /// Base URL including any path prefix, e.g. "https://api.openai.com/v1".
    std::string base_url = "https://api.openai.com/v1";
    /// Environment variable that holds the bearer token.
    std::string api_key_env = "OPENAI_API_KEY";
    std::string chat_model = "gpt-3.5-turbo";
    std::string embedding_model = "text-embedding-3-small";
    std::size_t concurrency = 4;
    /// Retries after the first attempt.
    std::size_t max_retries = 3;
    std::chrono::milliseconds backoff{500};
    std::chrono::seconds timeout{60};
    /// Empty disables caching.
    std::filesystem::path cache_dir;
    std::size_t embed_batch = 64;
};

ClientConfig client_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClientConfig& cfg);

/// One chat completion: a single user message at the given temperature.
class ChatEndpoint {
public:
    virtual ~ChatEndpoint() = default;
    virtual std::string complete(const std::string& model, const std::string& prompt, double temperature) = 0;
};

/// Embeds a batch of texts; returns one vector per text, in order.
class EmbeddingEndpoint {
public:
    virtual ~EmbeddingEndpoint() = default;
    virtual std::vector<std::vector<double>> embed(const std::string& model, const std::vector<std::string>& texts) = 0;
};

/// Clients for POST {base}/chat/completions and POST {base}/embeddings.
std::unique_ptr<ChatEndpoint> make_http_chat(const ClientConfig& cfg);
std::unique_ptr<EmbeddingEndpoint> make_http_embedding(const ClientConfig& cfg);

enum class ChainRole { G, Gprime, S };
std::string_view to_string(ChainRole role);
ChainRole parse_chain_role(std::string_view name);

inline constexpr std::string_view kDefaultPromptTemplate = "Paraphrase the following text:";

struct ParaphraseJob {
    std::vector<std::string> inputs;
    double temperature = 0.7;
    std::string prompt_template{kDefaultPromptTemplate};
    std::string model = "gpt-3.5-turbo";
    ChainRole role = ChainRole::G;
};

/// Throws ParameterError when the temperature is outside [0, 2].
void validate(const ParaphraseJob& job);

/// Template and text joined by a newline.
std::string render_prompt(const std::string& prompt_template, const std::string& text);

std::string sha256_hex(std::string_view data);

/// Directory of JSON documents keyed by content hash. Writes go to a temp file and are renamed.
class ContentCache {
public:
    explicit ContentCache(std::filesystem::path dir);

    bool enabled() const noexcept { return !dir_.empty(); }
    std::optional<nlohmann::json> get(const std::string& key) const;
    void put(const std::string& key, const nlohmann::json& value) const;

    static std::string paraphrase_key(const ParaphraseJob& job, const std::string& input);
    static std::string embedding_key(const std::string& model, const std::string& text);

private:
    std::filesystem::path dir_;
};

/// Output i paraphrases input i. Results already in the cache are not requested again;
/// fresh results are cached as they arrive, so a failed job keeps its partial progress.
/// Throws TransportError listing the indices that still failed after retries.
std::vector<std::string> paraphrase_batch(const ParaphraseJob& job, const ClientConfig& cfg, ChatEndpoint& endpoint);

/// Row i embeds text i, unit-normalized. Only uncached texts reach the endpoint.
EmbeddingMatrix embed_batch(const std::vector<std::string>& texts, const ClientConfig& cfg,
                            EmbeddingEndpoint& endpoint, std::string label = {});

/// One text per line. Writing flattens embedded newlines to spaces.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::vector<std::string>& lines, const std::filesystem::path& path);

}  // namespace anchortest::llm
