#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace spev {

struct ManifestEntry {
    std::int64_t frame_index = 0;
    double timestamp = 0.0;
    std::string camera_id;
    std::filesystem::path path;

    bool operator==(const ManifestEntry&) const = default;
};

/// Ordered frame list: frame_index strictly increasing, timestamps
/// non-decreasing.
struct FrameManifest {
    std::vector<ManifestEntry> entries;

    void validate() const;
};

/// Reads a JSON-lines manifest, one {"frame_index", "timestamp",
/// "camera_id", "path"} object per line. Relative paths are resolved
/// against the manifest's directory. Blank lines are skipped.
FrameManifest load_manifest(const std::filesystem::path& path);

/// Writes entries as JSON lines; paths are written as given.
void save_manifest(const FrameManifest& manifest, const std::filesystem::path& path);

}  // namespace spev
