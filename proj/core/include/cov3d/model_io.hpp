#pragma once

#include "cov3d/boosting.hpp"

#include <string>

namespace cov3d {

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document with a content checksum over the payload.
/// Doubles are stored in shortest round-trip decimal form, so scores
/// survive a save/load cycle bit-exactly.
void save_model(const MulticlassModel& model, const std::string& path);

/// Throws VersionMismatchError for unknown format versions and
/// ChecksumMismatchError for unparseable or tampered files.
MulticlassModel load_model(const std::string& path);

/// Serialized form without touching the filesystem (used for
/// determinism checks).
std::string model_to_json(const MulticlassModel& model);

}  // namespace cov3d
