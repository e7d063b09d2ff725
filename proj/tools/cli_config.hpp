#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "cam/config.hpp"

namespace cam::cli {

// Everything the CLI can configure. Precedence: built-in defaults, then
// cam.toml in the working directory, then CAM_* environment variables, then
// command-line flags.
struct Settings {
    EngineConfig engine;
    std::size_t batch_size = 64;
    bool stub_providers = false;
    std::uint64_t seed = 0;
    std::string api_key;
    std::string api_base = "https://api.openai.com/v1";
    std::string embed_model = "text-embedding-3-small";
    std::string chat_model = "gpt-4o-mini";
    std::size_t embed_dimension = 1536;
    double timeout_s = 30.0;
    std::size_t max_retries = 2;
};

// Flat TOML subset: "key = value" lines, # comments, blank lines. Values are
// double-quoted strings, bare numbers, or true/false. Tables, arrays and
// escapes are rejected. Throws ConfigError naming the offending line.
std::map<std::string, std::string> parse_config_file(const std::string& path);

// Layers recognized keys from `kv` onto `s`; unknown keys are ConfigError.
void apply_config_map(Settings& s, const std::map<std::string, std::string>& kv);

// Layers CAM_API_KEY and CAM_API_BASE when present.
void apply_env(Settings& s);

// Loads ./cam.toml when it exists, then the environment.
Settings load_settings();

}  // namespace cam::cli
