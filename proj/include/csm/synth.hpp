#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "csm/io.hpp"
#include "csm/series.hpp"

namespace csm {

/// Daily-total effects per unit of each daily weather mean, plus the
/// weekend indicator, in visitors per day summed over all zones.
struct DailyEffects {
    double temperature = 225.0;
    double precip_prob = -10.0;
    double cloudiness = -29.0;
    double windspeed = -290.0;
    double weekend = 3246.0;
};

struct SyntheticZone {
    std::string zone_id;
    double base_scale = 1.0;  // > 0; zone share is base_scale / sum of scales
    bool event_driven = false;
};

/// The sixteen Scheveningen-like zones used by default.
std::vector<SyntheticZone> default_zones();
/// Hour-of-day visitor weights summing to one.
std::array<double, 24> default_daily_profile();

struct WeatherConfig {
    int days = 400;
    std::uint64_t seed = 0;
    Date start = Date{std::chrono::year{2021} / 4 / 1};
    std::int32_t offset_minutes = 60;
    /// Scales every stochastic component; 0 leaves the deterministic cycles.
    double noise_scale = 1.0;
};

struct GeneratorConfig {
    std::vector<SyntheticZone> zones = default_zones();
    int days = 400;
    std::uint64_t seed = 0;
    DailyEffects effects;
    double mean_total = 30000.0;
    /// Standard deviation of the Gaussian innovation on the all-zone daily total.
    double noise_sigma = 1000.0;
    /// AR(1) coefficient of the latent daily noise, in [0, 1).
    double persistence = 0.0;
    /// Poisson-like noise on hourly counts.
    bool count_noise = true;
    std::array<double, 24> daily_profile = default_daily_profile();
    /// When set, temperature enters through c + w tanh((T - c) / w) instead of T.
    std::optional<double> saturation_width;
    double saturation_center = 14.0;
    /// Per-day probability of an event spike in event-driven zones.
    double event_rate = 0.06;
    /// Mean spike size as a multiple of the zone's share of mean_total.
    double event_scale = 2.0;

    void validate() const;
};

struct SyntheticDataset {
    Dataset dataset;
    std::vector<Date> days;
    /// Noise-inclusive daily totals before the hourly split, per zone.
    std::map<std::string, std::vector<double>> latent_daily;
    EventCalendar events;
};

WeatherSeries generate_weather(const WeatherConfig& config);
WeatherSeries generate_weather(int days, std::uint64_t seed);

/// Hourly visitor counts driven by the daily weather means of `weather`.
SyntheticDataset generate_visits(const GeneratorConfig& config, const WeatherSeries& weather);

/// Temperature input after the optional saturating response.
double temperature_response(const GeneratorConfig& config, double temperature_c);

/// Fixed-date public holidays for the years touched by [first, last].
HolidaySet fixed_holidays(Date first, Date last);

}  // namespace csm
