#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cam/hierarchy.hpp"

namespace cam {

inline constexpr int kFormatVersion = 1;

std::string sha256_hex(const std::string& bytes);

// Canonical snapshot bytes: one JSON header line, then the NODES, EDGES,
// REPLICAS, REDGES, LABELS and PSI sections ("#SECTION <name> <count>"
// followed by sorted records), then a "#SHA256 <hex>" trailer. Floats are
// rendered with 17 significant digits so serialize(load(x)) == x.
std::string serialize_snapshot(const MemoryHierarchy& h);

inline std::string snapshot_digest(const MemoryHierarchy& h) {
    return sha256_hex(serialize_snapshot(h));
}

// Atomic: writes a temp file next to `path`, then renames. The hierarchy must
// pass the full-walk consistency check.
void save_snapshot(const MemoryHierarchy& h, const std::filesystem::path& path);

// Verifies the checksum trailer, then the format version, then parses, then
// full-walks the rebuilt hierarchy. Corruption -> IntegrityError, unknown
// version -> VersionError.
std::shared_ptr<MemoryHierarchy> load_snapshot(const std::filesystem::path& path);

}  // namespace cam
