#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "csm/pipeline.hpp"
#include "csm/risk.hpp"

namespace csm {

/// Input files. A missing events file means no planned events.
struct DataPaths {
    std::filesystem::path visits;
    std::filesystem::path weather;
    std::filesystem::path weather_forecast;
    std::filesystem::path holidays;
    std::filesystem::path events;
};

/// Standard file names inside a data directory written by `csm generate`.
DataPaths data_paths_in(const std::filesystem::path& dir);

struct ServerConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
};

struct AppConfig {
    DataPaths data = data_paths_in("data");
    std::filesystem::path registry = "models";
    std::filesystem::path output_dir = "out";
    TrainConfig train;
    RiskConfig risk;
    ServerConfig server;
};

/// Relative paths are resolved against `base_dir`.
AppConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
AppConfig load_config(const std::filesystem::path& path);

/// Explicit path first, then $CSM_CONFIG, then built-in defaults.
AppConfig resolve_config(const std::optional<std::string>& explicit_path);

/// Visits, weather and holidays aligned on the visit resolution.
Dataset load_dataset(const DataPaths& paths);

inline constexpr const char* kConfigEnv = "CSM_CONFIG";

}  // namespace csm
