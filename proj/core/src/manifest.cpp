#include "spev/manifest.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "spev/error.hpp"

namespace spev {

using nlohmann::json;

void FrameManifest::validate() const {
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].frame_index <= entries[i - 1].frame_index) {
            fail(Errc::MalformedConfig,
                 fmt::format("manifest frame_index not strictly increasing at entry {}", i));
        }
        if (entries[i].timestamp < entries[i - 1].timestamp) {
            fail(Errc::MalformedConfig, fmt::format("manifest timestamps decrease at entry {}", i));
        }
    }
}

FrameManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::UnreadableFile, fmt::format("cannot open manifest '{}'", path.string()));
    const auto base = path.parent_path();
    FrameManifest manifest;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            ManifestEntry e;
            e.frame_index = j.at("frame_index").get<std::int64_t>();
            e.timestamp = j.at("timestamp").get<double>();
            e.camera_id = j.at("camera_id").get<std::string>();
            std::filesystem::path p = j.at("path").get<std::string>();
            e.path = p.is_absolute() ? p : base / p;
            manifest.entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            fail(Errc::MalformedConfig,
                 fmt::format("{}:{}: bad manifest line: {}", path.string(), line_no, ex.what()));
        }
    }
    manifest.validate();
    return manifest;
}

void save_manifest(const FrameManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(Errc::UnreadableFile, fmt::format("cannot write manifest '{}'", path.string()));
    for (const auto& e : manifest.entries) {
        json j = {{"frame_index", e.frame_index},
                  {"timestamp", e.timestamp},
                  {"camera_id", e.camera_id},
                  {"path", e.path.generic_string()}};
        out << j.dump() << '\n';
    }
}

}  // namespace spev
