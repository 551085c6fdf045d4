#include "csm/registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot read {}", p.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_atomically(const fs::path& target, const std::string& content) {
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", tmp.string()));
        out << content;
        if (!out.flush()) throw Error(ErrorKind::io, fmt::format("write to {} failed", tmp.string()));
    }
    fs::rename(tmp, target);
}

void fnv1a(std::uint64_t& h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
}

}  // namespace

void validate_zone_id(const std::string& zone_id) {
    const bool ok = !zone_id.empty() && std::all_of(zone_id.begin(), zone_id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
    if (!ok) throw Error(ErrorKind::invalid_argument, fmt::format("invalid zone id '{}'", zone_id));
}

ModelRegistry::ModelRegistry(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "zones"); }

fs::path ModelRegistry::zone_dir(const std::string& zone_id) const {
    validate_zone_id(zone_id);
    return root_ / "zones" / zone_id;
}

fs::path ModelRegistry::version_path(const std::string& zone_id, int version) const {
    return zone_dir(zone_id) / "versions" / fmt::format("{:04d}.json", version);
}

int ModelRegistry::publish(const ModelArtifact& artifact) {
    const auto existing = versions(artifact.zone_id);
    const int next = existing.empty() ? 1 : existing.back() + 1;
    write_version(artifact, next);
    return next;
}

void ModelRegistry::write_version(const ModelArtifact& artifact, int version) {
    if (version < 1) throw Error(ErrorKind::invalid_argument, "versions start at 1");
    const fs::path p = version_path(artifact.zone_id, version);
    fs::create_directories(p.parent_path());
    if (fs::exists(p)) {
        throw Error(ErrorKind::conflict,
                    fmt::format("zone '{}' version {} already exists", artifact.zone_id, version));
    }
    write_atomically(p, to_json(artifact).dump(1) + "\n");
}

void ModelRegistry::activate(const std::string& zone_id, int version) {
    if (!fs::exists(version_path(zone_id, version))) {
        throw Error(ErrorKind::not_found, fmt::format("zone '{}' has no version {}", zone_id, version));
    }
    write_atomically(zone_dir(zone_id) / "active", fmt::format("{}\n", version));
}

std::vector<std::string> ModelRegistry::zones() const {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root_ / "zones")) {
        if (e.is_directory()) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> ModelRegistry::versions(const std::string& zone_id) const {
    std::vector<int> out;
    const fs::path dir = zone_dir(zone_id) / "versions";
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.path().extension() != ".json") continue;
        try {
            out.push_back(std::stoi(name.substr(0, name.size() - 5)));
        } catch (const std::exception&) {
            continue;
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<int> ModelRegistry::active_version(const std::string& zone_id) const {
    const fs::path p = zone_dir(zone_id) / "active";
    if (!fs::exists(p)) return std::nullopt;
    const std::string text = read_file(p);
    try {
        return std::stoi(text);
    } catch (const std::exception&) {
        throw Error(ErrorKind::parse, fmt::format("corrupt active pointer for zone '{}'", zone_id));
    }
}

ModelArtifact ModelRegistry::load(const std::string& zone_id, int version) const {
    const fs::path p = version_path(zone_id, version);
    if (!fs::exists(p)) throw Error(ErrorKind::not_found, fmt::format("zone '{}' has no version {}", zone_id, version));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(p));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, fmt::format("{}: {}", p.string(), e.what()));
    }
    return artifact_from_json(j);
}

std::uint64_t ModelRegistry::state_hash() const {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root_)) {
        if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& f : files) {
        fnv1a(h, fs::relative(f, root_).generic_string());
        fnv1a(h, read_file(f));
    }
    return h;
}

}  // namespace csm
