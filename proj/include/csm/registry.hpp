#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csm/pipeline.hpp"

namespace csm {

/// File-backed store of model artifacts:
///   <root>/zones/<zone>/versions/<NNNN>.json   immutable once written
///   <root>/zones/<zone>/active                 version number, replaced by rename
class ModelRegistry {
public:
    explicit ModelRegistry(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Writes the artifact as the next version of its zone and returns it.
    int publish(const ModelArtifact& artifact);
    /// Throws Error(conflict) if the version already exists.
    void write_version(const ModelArtifact& artifact, int version);
    void activate(const std::string& zone_id, int version);

    std::vector<std::string> zones() const;
    std::vector<int> versions(const std::string& zone_id) const;
    std::optional<int> active_version(const std::string& zone_id) const;
    ModelArtifact load(const std::string& zone_id, int version) const;

    /// FNV-1a over every file path and content under the root.
    std::uint64_t state_hash() const;

private:
    std::filesystem::path zone_dir(const std::string& zone_id) const;
    std::filesystem::path version_path(const std::string& zone_id, int version) const;

    std::filesystem::path root_;
};

/// Zone ids double as directory names: [A-Za-z0-9_-]+.
void validate_zone_id(const std::string& zone_id);

}  // namespace csm
