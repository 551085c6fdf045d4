#include "csm/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kYearDays = 365.25;

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x43534dU};
    return std::mt19937_64(seq);
}

constexpr std::uint64_t kWeatherStream = 0;

struct Ar1 {
    double phi;
    double sigma;
    double value = 0.0;

    double step(std::mt19937_64& rng, std::normal_distribution<double>& z) {
        value = phi * value + sigma * z(rng);
        return value;
    }
};

}  // namespace

std::vector<SyntheticZone> default_zones() {
    return {
        {"pier", 1.6, false},
        {"boulevard_noord", 1.2, false},
        {"boulevard_midden", 1.8, false},
        {"boulevard_zuid", 1.1, false},
        {"strand_noord", 0.9, false},
        {"strand_centraal", 1.4, false},
        {"strand_zuid", 0.8, false},
        {"beach_stadium", 0.5, true},
        {"toegang_kurhaus", 1.5, false},
        {"toegang_pier", 1.0, false},
        {"toegang_noord", 0.7, false},
        {"toegang_zuid", 0.6, false},
        {"ov_kurhaus", 2.0, false},
        {"ov_strandweg", 0.9, false},
        {"ov_zwarte_pad", 0.7, false},
        {"kurhaus_plein", 1.2, false},
    };
}

std::array<double, 24> default_daily_profile() {
    std::array<double, 24> w{};
    double total = 0.0;
    for (int h = 0; h < 24; ++h) {
        const double d = (h - 14.5) / 3.5;
        w[static_cast<std::size_t>(h)] = 0.02 + std::exp(-0.5 * d * d);
        total += w[static_cast<std::size_t>(h)];
    }
    for (auto& v : w) v /= total;
    return w;
}

void GeneratorConfig::validate() const {
    if (zones.empty()) throw Error(ErrorKind::invalid_argument, "generator needs at least one zone");
    std::set<std::string> ids;
    for (const auto& z : zones) {
        if (!(z.base_scale > 0.0)) {
            throw Error(ErrorKind::invalid_argument, fmt::format("zone '{}' scale must be positive", z.zone_id));
        }
        if (!ids.insert(z.zone_id).second) {
            throw Error(ErrorKind::invalid_argument, fmt::format("duplicate zone '{}'", z.zone_id));
        }
    }
    if (days < 1) throw Error(ErrorKind::invalid_argument, "days must be >= 1");
    if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::invalid_argument, "noise_sigma must be >= 0");
    if (!(persistence >= 0.0 && persistence < 1.0)) {
        throw Error(ErrorKind::invalid_argument, "persistence must lie in [0, 1)");
    }
    double sum = 0.0;
    for (double w : daily_profile) {
        if (!(w >= 0.0)) throw Error(ErrorKind::invalid_argument, "daily profile weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::invalid_argument, fmt::format("daily profile sums to {}, not 1", sum));
    }
    if (saturation_width && !(*saturation_width > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "saturation width must be positive");
    }
    if (!(event_rate >= 0.0 && event_rate <= 1.0)) throw Error(ErrorKind::invalid_argument, "event_rate outside [0, 1]");
}

WeatherSeries generate_weather(const WeatherConfig& config) {
    if (config.days < 1) throw Error(ErrorKind::invalid_argument, "weather needs days >= 1");
    const double ns = config.noise_scale;
    auto rng = substream(config.seed, kWeatherStream);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::exponential_distribution<double> rain(1.0);

    Ar1 temp{0.7, 2.5 * ns};
    Ar1 wind{0.6, 1.8 * ns};
    Ar1 cloud{0.5, 20.0 * ns};
    Ar1 precip{0.5, 15.0 * ns};

    std::vector<WeatherPoint> points;
    points.reserve(static_cast<std::size_t>(config.days) * 24);
    const Timestamp start = local_midnight(config.start, config.offset_minutes);
    for (int d = 0; d < config.days; ++d) {
        temp.step(rng, z);
        wind.step(rng, z);
        cloud.step(rng, z);
        precip.step(rng, z);
        for (int h = 0; h < 24; ++h) {
            const Timestamp t = start + kHour * (d * 24 + h);
            const double day = static_cast<double>(t.local_minutes()) / 1440.0;
            const double hour = static_cast<double>(h);
            WeatherRecord r;
            r.temperature_c = 10.5 + 7.5 * std::sin(kTwoPi * (day - 110.0) / kYearDays) +
                              3.0 * std::sin(kTwoPi * (hour - 9.0) / 24.0) + temp.value + 0.6 * ns * z(rng);
            r.windspeed_ms = std::max(0.0, 5.5 + 1.5 * std::cos(kTwoPi * (day - 15.0) / kYearDays) +
                                               1.0 * std::sin(kTwoPi * (hour - 10.0) / 24.0) + wind.value +
                                               0.8 * ns * z(rng));
            const double cloud_anomaly = cloud.value + 8.0 * ns * z(rng);
            r.cloudiness =
                std::clamp(60.0 + 10.0 * std::cos(kTwoPi * (day - 15.0) / kYearDays) + cloud_anomaly, 0.0, 100.0);
            r.precip_prob_pct = std::clamp(20.0 + 0.6 * cloud_anomaly + precip.value + 5.0 * ns * z(rng), 0.0, 100.0);
            if (ns > 0.0) {
                r.precip_mm = u(rng) < 0.3 * r.precip_prob_pct / 100.0 ? rain(rng) : 0.0;
            } else {
                r.precip_mm = 0.3 * r.precip_prob_pct / 100.0;
            }
            points.push_back(WeatherPoint{t, r});
        }
    }
    return WeatherSeries(kHour, std::move(points));
}

WeatherSeries generate_weather(int days, std::uint64_t seed) {
    WeatherConfig c;
    c.days = days;
    c.seed = seed;
    return generate_weather(c);
}

double temperature_response(const GeneratorConfig& config, double temperature_c) {
    if (!config.saturation_width) return temperature_c;
    const double w = *config.saturation_width;
    const double c = config.saturation_center;
    return c + w * std::tanh((temperature_c - c) / w);
}

HolidaySet fixed_holidays(Date first, Date last) {
    using namespace std::chrono;
    HolidaySet out;
    const int y0 = static_cast<int>(year_month_day{first}.year());
    const int y1 = static_cast<int>(year_month_day{last}.year());
    for (int y = y0; y <= y1; ++y) {
        for (auto md : {month{1} / 1, month{4} / 27, month{5} / 5, month{12} / 25, month{12} / 26}) {
            const Date d{year{y} / md};
            if (d >= first && d <= last) out.insert(d);
        }
    }
    return out;
}

SyntheticDataset generate_visits(const GeneratorConfig& config, const WeatherSeries& weather) {
    config.validate();
    if (weather.resolution() != kHour || weather.empty()) {
        throw Error(ErrorKind::invalid_argument, "generator expects hourly weather");
    }
    const Timestamp start = weather.points().front().time;
    if (start.local_minutes() % 1440 != 0) {
        throw Error(ErrorKind::invalid_argument, "weather must start at local midnight");
    }
    const auto n_hours = static_cast<std::size_t>(config.days) * 24;
    if (weather.size() < n_hours) {
        throw Error(ErrorKind::coverage,
                    fmt::format("weather covers {} hours, generator needs {}", weather.size(), n_hours));
    }
    const WeatherSeries hourly = weather.slice(start, start + kHour * static_cast<int>(n_hours - 1));
    const WeatherSeries daily = resample(hourly, kDay);

    std::vector<Date> days;
    std::map<std::string, std::vector<double>> latent_daily;
    std::set<std::pair<Date, std::string>> events;

    // Deterministic part of the all-zone daily total.
    std::vector<double> signal(static_cast<std::size_t>(config.days));
    for (int d = 0; d < config.days; ++d) {
        const auto& p = daily.points()[static_cast<std::size_t>(d)];
        if (!p.record) throw Error(ErrorKind::coverage, fmt::format("weather gap on day {}", d));
        const auto& w = *p.record;
        const bool weekend = calendar_features(p.time, {}).is_weekend;
        const auto& e = config.effects;
        signal[static_cast<std::size_t>(d)] = config.mean_total + e.temperature * temperature_response(config, w.temperature_c) +
                                              e.precip_prob * w.precip_prob_pct + e.cloudiness * w.cloudiness +
                                              e.windspeed * w.windspeed_ms + (weekend ? e.weekend : 0.0);
        days.push_back(p.time.local_date());
    }

    double scale_sum = 0.0;
    double share_sq = 0.0;
    for (const auto& z : config.zones) scale_sum += z.base_scale;
    for (const auto& z : config.zones) share_sq += (z.base_scale / scale_sum) * (z.base_scale / scale_sum);

    std::map<std::string, ZoneSeries> zones;
    for (std::size_t zi = 0; zi < config.zones.size(); ++zi) {
        const auto& zone = config.zones[zi];
        const double share = zone.base_scale / scale_sum;
        auto rng = substream(config.seed, zi + 1);
        std::normal_distribution<double> z(0.0, 1.0);
        std::uniform_real_distribution<double> u(0.0, 1.0);

        const double sigma = config.noise_sigma * share / std::sqrt(share_sq);
        const double phi = config.persistence;
        double noise = sigma > 0.0 ? sigma / std::sqrt(1.0 - phi * phi) * z(rng) : 0.0;

        std::vector<double> latent(static_cast<std::size_t>(config.days));
        std::vector<VisitPoint> points;
        points.reserve(n_hours);
        for (int d = 0; d < config.days; ++d) {
            if (d > 0 && sigma > 0.0) noise = phi * noise + sigma * z(rng);
            double total = share * signal[static_cast<std::size_t>(d)] + noise;
            if (zone.event_driven && config.event_rate > 0.0 && u(rng) < config.event_rate) {
                total += config.event_scale * (0.5 + u(rng)) * share * config.mean_total;
                events.emplace(days[static_cast<std::size_t>(d)], zone.zone_id);
            }
            total = std::max(0.0, total);
            latent[static_cast<std::size_t>(d)] = total;
            for (int h = 0; h < 24; ++h) {
                const double mean = total * config.daily_profile[static_cast<std::size_t>(h)];
                double count = mean;
                if (config.count_noise && mean > 0.0) {
                    std::poisson_distribution<long long> pois(mean);
                    count = static_cast<double>(pois(rng));
                }
                const auto idx = static_cast<std::size_t>(d * 24 + h);
                points.push_back(VisitPoint{hourly.points()[idx].time, std::max(0.0, count), 1.0});
            }
        }
        latent_daily.emplace(zone.zone_id, std::move(latent));
        zones.emplace(zone.zone_id, ZoneSeries(zone.zone_id, kHour, std::move(points)));
    }
    HolidaySet holidays = fixed_holidays(days.front(), days.back());
    return SyntheticDataset{Dataset(std::move(zones), hourly, std::move(holidays), kHour), std::move(days),
                            std::move(latent_daily), std::move(events)};
}

}  // namespace csm
