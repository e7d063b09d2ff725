#include "cli_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>

#include "cam/errors.hpp"

namespace cam::cli {

namespace {

std::string trim(const std::string& s) {
    const auto lo = s.find_first_not_of(" \t\r");
    if (lo == std::string::npos) return "";
    const auto hi = s.find_last_not_of(" \t\r");
    return s.substr(lo, hi - lo + 1);
}

[[noreturn]] void bad_line(const std::string& path, std::size_t line, const std::string& why) {
    throw ConfigError(path + ":" + std::to_string(line) + ": " + why);
}

double as_double(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " needs a number, got \"" + raw + "\"");
    }
}

std::size_t as_size(const std::string& key, const std::string& raw) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(raw, &used);
        if (used != raw.size() || v < 0) throw std::invalid_argument(raw);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " needs a non-negative integer, got \"" + raw +
                          "\"");
    }
}

bool as_bool(const std::string& key, const std::string& raw) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    throw ConfigError("config key " + key + " needs true or false, got \"" + raw + "\"");
}

}  // namespace

std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t[0] == '[') bad_line(path, lineno, "tables are not supported; use flat keys");
        const auto eq = t.find('=');
        if (eq == std::string::npos) bad_line(path, lineno, "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) bad_line(path, lineno, "empty key");
        if (const auto hash = value.find(" #"); hash != std::string::npos && value[0] != '"')
            value = trim(value.substr(0, hash));
        if (value.empty()) bad_line(path, lineno, "empty value");
        if (value[0] == '"') {
            if (value.size() < 2 || value.back() != '"')
                bad_line(path, lineno, "unterminated string");
            value = value.substr(1, value.size() - 2);
            if (value.find('"') != std::string::npos || value.find('\\') != std::string::npos)
                bad_line(path, lineno, "escapes are not supported");
        }
        if (kv.count(key)) bad_line(path, lineno, "duplicate key " + key);
        kv[key] = value;
    }
    return kv;
}

void apply_config_map(Settings& s, const std::map<std::string, std::string>& kv) {
    const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
        setters = {
            {"alpha", [&](const std::string& k, const std::string& v) { s.engine.alpha = as_double(k, v); }},
            {"sigma", [&](const std::string& k, const std::string& v) { s.engine.sigma = as_double(k, v); }},
            {"theta", [&](const std::string& k, const std::string& v) { s.engine.theta = as_double(k, v); }},
            {"k", [&](const std::string& k, const std::string& v) { s.engine.k = as_size(k, v); }},
            {"top_s", [&](const std::string& k, const std::string& v) { s.engine.s = as_size(k, v); }},
            {"max_lp_iters", [&](const std::string& k, const std::string& v) { s.engine.max_lp_iters = as_size(k, v); }},
            {"max_hops", [&](const std::string& k, const std::string& v) { s.engine.max_hops = as_size(k, v); }},
            {"chunk_size", [&](const std::string& k, const std::string& v) { s.engine.chunk_size = as_size(k, v); }},
            {"min_level_size", [&](const std::string& k, const std::string& v) { s.engine.min_level_size = as_size(k, v); }},
            {"tau_sel", [&](const std::string& k, const std::string& v) { s.engine.tau_sel = as_double(k, v); }},
            {"batch_size", [&](const std::string& k, const std::string& v) { s.batch_size = as_size(k, v); }},
            {"stub_providers", [&](const std::string& k, const std::string& v) { s.stub_providers = as_bool(k, v); }},
            {"seed", [&](const std::string& k, const std::string& v) { s.seed = as_size(k, v); }},
            {"api_key", [&](const std::string&, const std::string& v) { s.api_key = v; }},
            {"api_base", [&](const std::string&, const std::string& v) { s.api_base = v; }},
            {"embed_model", [&](const std::string&, const std::string& v) { s.embed_model = v; }},
            {"chat_model", [&](const std::string&, const std::string& v) { s.chat_model = v; }},
            {"embed_dimension", [&](const std::string& k, const std::string& v) { s.embed_dimension = as_size(k, v); }},
            {"timeout_s", [&](const std::string& k, const std::string& v) { s.timeout_s = as_double(k, v); }},
            {"max_retries", [&](const std::string& k, const std::string& v) { s.max_retries = as_size(k, v); }},
        };
    for (const auto& [key, value] : kv) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError("unknown config key " + key);
        it->second(key, value);
    }
}

void apply_env(Settings& s) {
    if (const char* v = std::getenv("CAM_API_KEY")) s.api_key = v;
    if (const char* v = std::getenv("CAM_API_BASE")) s.api_base = v;
}

Settings load_settings() {
    Settings s;
    if (std::filesystem::exists("cam.toml")) apply_config_map(s, parse_config_file("cam.toml"));
    apply_env(s);
    return s;
}

}  // namespace cam::cli
