#include "csm/config.hpp"

#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "csm/error.hpp"
#include "csm/io.hpp"

namespace csm {

namespace fs = std::filesystem;
using nlohmann::json;

DataPaths data_paths_in(const fs::path& dir) {
    return DataPaths{dir / "visits.csv", dir / "weather.csv", dir / "weather_forecast.csv", dir / "holidays.txt",
                     dir / "events.csv"};
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

AppConfig config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
    AppConfig c;
    c.data = data_paths_in(base_dir / "data");
    c.registry = base_dir / "models";
    c.output_dir = base_dir / "out";
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "data") {
                if (v.is_string()) {
                    c.data = data_paths_in(resolve(base_dir, v.get<std::string>()));
                    continue;
                }
                if (v.contains("dir")) c.data = data_paths_in(resolve(base_dir, v.at("dir").get<std::string>()));
                for (const auto& [name, p] : v.items()) {
                    const fs::path path = resolve(base_dir, p.get<std::string>());
                    if (name == "dir") continue;
                    else if (name == "visits") c.data.visits = path;
                    else if (name == "weather") c.data.weather = path;
                    else if (name == "weather_forecast") c.data.weather_forecast = path;
                    else if (name == "holidays") c.data.holidays = path;
                    else if (name == "events") c.data.events = path;
                    else throw Error(ErrorKind::config, fmt::format("unknown data path '{}'", name));
                }
            } else if (key == "registry") {
                c.registry = resolve(base_dir, v.get<std::string>());
            } else if (key == "output_dir") {
                c.output_dir = resolve(base_dir, v.get<std::string>());
            } else if (key == "train") {
                c.train = train_config_from_json(v);
            } else if (key == "risk") {
                c.risk = risk_config_from_json(v);
            } else if (key == "server") {
                c.server.host = v.value("host", c.server.host);
                c.server.port = v.value("port", c.server.port);
                if (c.server.port < 0 || c.server.port > 65535) {
                    throw Error(ErrorKind::config, fmt::format("invalid port {}", c.server.port));
                }
            } else {
                throw Error(ErrorKind::config, fmt::format("unknown config key '{}'", key));
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, e.what());
    }
    return c;
}

Dataset load_dataset(const DataPaths& paths) {
    auto zones = load_visits(paths.visits.string());
    if (zones.empty()) throw Error(ErrorKind::insufficient_data, fmt::format("{} holds no visits", paths.visits.string()));
    const WeatherSeries weather = load_weather(paths.weather.string());
    const HolidaySet holidays = fs::exists(paths.holidays) ? load_holidays(paths.holidays.string()) : HolidaySet{};
    const Minutes res = zones.begin()->second.resolution();
    return align(zones, weather, holidays, res);
}

AppConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, fmt::format("cannot open config {}", path.string()));
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, fmt::format("{}: {}", path.string(), e.what()));
    }
    return config_from_json(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

AppConfig resolve_config(const std::optional<std::string>& explicit_path) {
    if (explicit_path) return load_config(*explicit_path);
    if (const char* env = std::getenv(kConfigEnv); env && *env) return load_config(env);
    return AppConfig{};
}

}  // namespace csm
