#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cam/errors.hpp"

namespace cam {

// Knobs shared by ingestion, maintenance and retrieval. Values travel with
// snapshots so a reopened memory behaves like the one that wrote it.
struct EngineConfig {
    double alpha = 0.7;            // semantic vs positional mix in the pair score
    double sigma = 2.0;            // positional Gaussian width
    double theta = 0.5;            // edge admission threshold
    std::size_t k = 10;            // max edges per new chunk
    std::size_t s = 5;             // localization fan-in (top-s seeds)
    std::size_t max_lp_iters = 20; // label propagation round cap
    std::size_t max_hops = 3;      // exploration round cap
    std::size_t chunk_size = 512;  // words per chunk
    std::size_t min_level_size = 4;// growth threshold for a new level
    double tau_sel = 0.30;         // stub selector cosine threshold

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        if (alpha < 0.0 || alpha > 1.0) errs.push_back("alpha must be in [0, 1]");
        if (sigma <= 0.0) errs.push_back("sigma must be > 0");
        if (theta < 0.0 || theta > 1.0) errs.push_back("theta must be in [0, 1]");
        if (tau_sel < 0.0 || tau_sel > 1.0) errs.push_back("tau_sel must be in [0, 1]");
        if (k < 1) errs.push_back("k must be >= 1");
        if (s < 1) errs.push_back("top-s must be >= 1");
        if (max_lp_iters < 1) errs.push_back("max_lp_iters must be >= 1");
        if (max_hops < 1) errs.push_back("max_hops must be >= 1");
        if (chunk_size < 16) errs.push_back("chunk_size must be >= 16");
        if (min_level_size < 1) errs.push_back("min_level_size must be >= 1");
        return errs;
    }

    void validate_or_throw() const {
        const auto errs = validate();
        if (errs.empty()) return;
        std::string msg = "invalid config:";
        for (const auto& e : errs) msg += " " + e + ";";
        throw ConfigError(msg);
    }

    bool operator==(const EngineConfig&) const = default;
};

}  // namespace cam
