#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cam/providers.hpp"

namespace cam {

struct HttpResponse {
    int status = 0;  // 0 = transport failure (no response)
    std::string body;
};

// Minimal POST-only transport so tests can exercise the provider without a
// network. The default implementation speaks HTTP(S) via httplib.
class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    // `path` is relative to the endpoint base, e.g. "/embeddings".
    virtual HttpResponse post(const std::string& path, const std::string& body,
                              const std::vector<std::pair<std::string, std::string>>& headers) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport(const std::string& endpoint_url,
                                                   double timeout_s);

struct RemoteProviderConfig {
    std::string endpoint_url = "https://api.openai.com/v1";
    std::string api_key;
    std::string embed_model = "text-embedding-3-small";
    std::string chat_model = "gpt-4o-mini";
    std::size_t dimension = 1536;
    double timeout_s = 30.0;
    std::size_t max_retries = 2;  // total attempts = 1 + max_retries
};

// OpenAI-compatible provider: POST /embeddings and /chat/completions with
// temperature 0. Every request is retried up to max_retries times on any
// failure; the final ProviderError carries the last HTTP status (0 when the
// transport never produced a response).
class RemoteProvider : public Provider {
public:
    explicit RemoteProvider(RemoteProviderConfig config,
                            std::unique_ptr<HttpTransport> transport = nullptr);

    std::size_t dimension() const override { return config_.dimension; }
    std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override;
    std::string summarize(const std::vector<std::string>& texts, int level) override;
    std::vector<NodeId> select_relevant(
        const std::string& query,
        const std::vector<std::pair<NodeId, std::string>>& candidates) override;
    std::string answer(const std::string& query,
                       const std::vector<std::string>& context_blocks) override;

private:
    std::string post_json(const std::string& path, const std::string& body);
    std::string chat(const std::string& prompt);

    RemoteProviderConfig config_;
    std::unique_ptr<HttpTransport> transport_;
};

}  // namespace cam
