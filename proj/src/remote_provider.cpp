#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "cam/remote_provider.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cam/errors.hpp"

namespace cam {

using json = nlohmann::json;

namespace {

// Replaces every "{name}" in the prompt template.
std::string fill_placeholder(std::string text, const std::string& name, const std::string& value) {
    const std::string key = "{" + name + "}";
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

class HttplibTransport : public HttpTransport {
public:
    HttplibTransport(const std::string& endpoint_url, double timeout_s) {
        // Split "scheme://host[:port]/prefix" into the client origin and the
        // path prefix prepended to every request.
        const auto scheme_end = endpoint_url.find("://");
        const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const auto path_start = endpoint_url.find('/', host_start);
        origin_ = endpoint_url.substr(0, path_start);
        if (path_start != std::string::npos) prefix_ = endpoint_url.substr(path_start);
        while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
        client_ = std::make_unique<httplib::Client>(origin_);
        const auto sec = static_cast<time_t>(timeout_s);
        const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
        client_->set_connection_timeout(sec, usec);
        client_->set_read_timeout(sec, usec);
        client_->set_write_timeout(sec, usec);
    }

    HttpResponse post(const std::string& path, const std::string& body,
                      const std::vector<std::pair<std::string, std::string>>& headers) override {
        httplib::Headers hs(headers.begin(), headers.end());
        auto res = client_->Post(prefix_ + path, hs, body, "application/json");
        if (!res) return {0, ""};
        return {res->status, res->body};
    }

private:
    std::string origin_;
    std::string prefix_;
    std::unique_ptr<httplib::Client> client_;
};

}  // namespace

std::unique_ptr<HttpTransport> make_http_transport(const std::string& endpoint_url,
                                                   double timeout_s) {
    return std::make_unique<HttplibTransport>(endpoint_url, timeout_s);
}

RemoteProvider::RemoteProvider(RemoteProviderConfig config, std::unique_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.api_key.empty()) throw ConfigError("remote provider requires an API key");
    if (config_.dimension == 0) throw ConfigError("remote provider dimension must be positive");
    if (!transport_) transport_ = make_http_transport(config_.endpoint_url, config_.timeout_s);
}

std::string RemoteProvider::post_json(const std::string& path, const std::string& body) {
    const std::vector<std::pair<std::string, std::string>> headers = {
        {"Authorization", "Bearer " + config_.api_key}};
    HttpResponse last;
    for (std::size_t attempt = 0; attempt <= config_.max_retries; ++attempt) {
        last = transport_->post(path, body, headers);
        if (last.status == 200) return last.body;
    }
    throw ProviderError("request to " + path + " failed after " +
                            std::to_string(1 + config_.max_retries) + " attempts (HTTP " +
                            std::to_string(last.status) + ")",
                        last.status);
}

std::vector<Embedding> RemoteProvider::embed_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    json req = {{"model", config_.embed_model}, {"input", texts}};
    const std::string body = post_json("/embeddings", req.dump());
    try {
        const json res = json::parse(body);
        std::vector<Embedding> out(texts.size());
        std::vector<bool> seen(texts.size(), false);
        for (const auto& item : res.at("data")) {
            const auto index = item.at("index").get<std::size_t>();
            if (index >= out.size()) throw ProviderError("embedding index out of range");
            out[index] = item.at("embedding").get<Embedding>();
            seen[index] = true;
        }
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (!seen[i]) throw ProviderError("embedding response misses index " + std::to_string(i));
            if (out[i].size() != config_.dimension)
                throw ProviderError("embedding dimension mismatch: got " +
                                    std::to_string(out[i].size()) + ", configured " +
                                    std::to_string(config_.dimension));
        }
        return out;
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embedding response: ") + e.what());
    }
}

std::string RemoteProvider::chat(const std::string& prompt) {
    json req = {{"model", config_.chat_model},
                {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                {"temperature", 0}};
    const std::string body = post_json("/chat/completions", req.dump());
    try {
        const json res = json::parse(body);
        return res.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat response: ") + e.what());
    }
}

std::string RemoteProvider::summarize(const std::vector<std::string>& texts, int level) {
    std::string fragments;
    for (std::size_t i = 0; i < texts.size(); ++i)
        fragments += std::to_string(i + 1) + ". " + texts[i] + "\n";
    std::string prompt = fill_placeholder(prompts::kSummarize, "level", std::to_string(level));
    prompt = fill_placeholder(prompt, "fragments", fragments);
    return chat(prompt);
}

std::vector<NodeId> RemoteProvider::select_relevant(
    const std::string& query, const std::vector<std::pair<NodeId, std::string>>& candidates) {
    if (candidates.empty()) return {};
    std::string listing;
    for (const auto& [id, text] : candidates)
        listing += std::to_string(id) + ". " + text + "\n";
    std::string prompt = fill_placeholder(prompts::kSelect, "query", query);
    prompt = fill_placeholder(prompt, "candidates", listing);
    const std::string content = chat(prompt);
    // Tolerate prose around the array: parse the first [...] span.
    const auto lo = content.find('[');
    const auto hi = content.rfind(']');
    if (lo == std::string::npos || hi == std::string::npos || hi < lo)
        throw ProviderError("selector reply holds no JSON array: " + content);
    json arr;
    try {
        arr = json::parse(content.substr(lo, hi - lo + 1));
    } catch (const json::exception& e) {
        throw ProviderError(std::string("selector reply is not a JSON array: ") + e.what());
    }
    if (!arr.is_array()) throw ProviderError("selector reply is not a JSON array");
    std::set<NodeId> known;
    for (const auto& [id, text] : candidates) known.insert(id);
    std::set<NodeId> picked;
    for (const auto& v : arr) {
        if (!v.is_number_unsigned() && !v.is_number_integer()) continue;
        const auto id = v.get<NodeId>();
        if (known.count(id)) picked.insert(id);
    }
    return {picked.begin(), picked.end()};
}

std::string RemoteProvider::answer(const std::string& query,
                                   const std::vector<std::string>& context_blocks) {
    std::string context;
    for (std::size_t i = 0; i < context_blocks.size(); ++i) {
        if (i) context += "\n\n";
        context += context_blocks[i];
    }
    std::string prompt = fill_placeholder(prompts::kAnswer, "query", query);
    prompt = fill_placeholder(prompt, "context", context);
    return chat(prompt);
}

}  // namespace cam
