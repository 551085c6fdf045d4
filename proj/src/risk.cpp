#include "csm/risk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace {

constexpr RiskCategory kDefaultTable[4][3] = {
    {RiskCategory::low, RiskCategory::low, RiskCategory::elevated},
    {RiskCategory::low, RiskCategory::elevated, RiskCategory::high},
    {RiskCategory::elevated, RiskCategory::high, RiskCategory::critical},
    {RiskCategory::high, RiskCategory::critical, RiskCategory::critical},
};

double percentile_of(double value, const std::vector<double>& sorted) {
    const auto le = std::upper_bound(sorted.begin(), sorted.end(), value) - sorted.begin();
    return 100.0 * static_cast<double>(le) / static_cast<double>(sorted.size());
}

CrowdingBand band_for(double percentile, const CrowdingCuts& cuts) {
    if (percentile < cuts.percentiles[0]) return CrowdingBand::low;
    if (percentile < cuts.percentiles[1]) return CrowdingBand::moderate;
    if (percentile < cuts.percentiles[2]) return CrowdingBand::high;
    return CrowdingBand::extreme;
}

}  // namespace

std::string_view to_string(CrowdingBand b) {
    switch (b) {
    case CrowdingBand::low: return "low";
    case CrowdingBand::moderate: return "moderate";
    case CrowdingBand::high: return "high";
    case CrowdingBand::extreme: return "extreme";
    }
    return "?";
}

std::string_view to_string(AggravationBand b) {
    switch (b) {
    case AggravationBand::low: return "low";
    case AggravationBand::medium: return "medium";
    case AggravationBand::high: return "high";
    }
    return "?";
}

std::string_view to_string(RiskCategory c) {
    switch (c) {
    case RiskCategory::low: return "low";
    case RiskCategory::elevated: return "elevated";
    case RiskCategory::high: return "high";
    case RiskCategory::critical: return "critical";
    }
    return "?";
}

RiskCategory parse_risk_category(std::string_view text) {
    for (auto c : {RiskCategory::low, RiskCategory::elevated, RiskCategory::high, RiskCategory::critical}) {
        if (to_string(c) == text) return c;
    }
    throw Error(ErrorKind::config, fmt::format("unknown risk category '{}'", text));
}

int hour_of_week(const Timestamp& t) {
    const auto c = calendar_features(t, {});
    return c.weekday * 24 + c.hour;
}

ReferenceDistribution::ReferenceDistribution(std::string zone_id, std::array<std::vector<double>, 168> by_hour_of_week)
    : zone_id_(std::move(zone_id)), by_hour_(std::move(by_hour_of_week)) {
    for (auto& b : by_hour_) {
        std::sort(b.begin(), b.end());
        all_.insert(all_.end(), b.begin(), b.end());
    }
    std::sort(all_.begin(), all_.end());
}

ReferenceDistribution ReferenceDistribution::from_series(const ZoneSeries& history) {
    std::array<std::vector<double>, 168> buckets;
    for (const auto& p : history.points()) {
        if (p.visitors) buckets[static_cast<std::size_t>(hour_of_week(p.time))].push_back(*p.visitors);
    }
    return ReferenceDistribution(history.zone_id(), std::move(buckets));
}

void CrowdingCuts::validate() const {
    for (std::size_t i = 0; i < percentiles.size(); ++i) {
        if (!(percentiles[i] >= 0.0 && percentiles[i] <= 100.0) || (i > 0 && percentiles[i] <= percentiles[i - 1])) {
            throw Error(ErrorKind::config, "crowding cut points must be strictly increasing within [0, 100]");
        }
    }
}

CrowdingLevel crowding_level(double value, const Timestamp& t, const ReferenceDistribution& reference,
                             const CrowdingCuts& cuts) {
    cuts.validate();
    CrowdingLevel c;
    c.zone_id = reference.zone_id();
    c.time = t;
    c.value = value;
    const auto* sample = &reference.bucket(hour_of_week(t));
    if (sample->empty()) {
        sample = &reference.all();
        c.used_fallback = true;
    }
    if (sample->empty()) {
        throw Error(ErrorKind::insufficient_data,
                    fmt::format("zone '{}' has no reference distribution", reference.zone_id()));
    }
    c.percentile = percentile_of(value, *sample);
    c.band = band_for(c.percentile, cuts);
    return c;
}

CrowdingLevel crowding_level(double value, std::vector<double> reference, const CrowdingCuts& cuts) {
    cuts.validate();
    if (reference.empty()) {
        throw Error(ErrorKind::insufficient_data, "empty reference distribution");
    }
    std::sort(reference.begin(), reference.end());
    CrowdingLevel c;
    c.value = value;
    c.percentile = percentile_of(value, reference);
    c.band = band_for(c.percentile, cuts);
    return c;
}

void AggravatingFactors::validate() const {
    for (const auto& f : factors) {
        if (!(f.score >= 0.0 && f.score <= 1.0)) {
            throw Error(ErrorKind::validation, fmt::format("factor '{}' score {} outside [0, 1]", f.name, f.score));
        }
        if (!(f.weight >= 0.0) || !std::isfinite(f.weight)) {
            throw Error(ErrorKind::validation, fmt::format("factor '{}' weight {} is negative", f.name, f.weight));
        }
    }
}

double aggravation_score(const AggravatingFactors& factors) {
    factors.validate();
    double weighted = 0.0;
    double total = 0.0;
    for (const auto& f : factors.factors) {
        weighted += f.weight * f.score;
        total += f.weight;
    }
    if (total <= 0.0) {
        throw Error(ErrorKind::invalid_argument, "aggravating factor weights sum to zero");
    }
    return std::clamp(weighted / total, 0.0, 1.0);
}

void AggravationCuts::validate() const {
    if (!(bounds[0] > 0.0 && bounds[0] < bounds[1] && bounds[1] < 1.0)) {
        throw Error(ErrorKind::config, "aggravation cuts must satisfy 0 < a < b < 1");
    }
}

AggravationBand aggravation_band(double aggravation, const AggravationCuts& cuts) {
    if (aggravation < cuts.bounds[0]) return AggravationBand::low;
    if (aggravation < cuts.bounds[1]) return AggravationBand::medium;
    return AggravationBand::high;
}

RiskMatrix::RiskMatrix() {
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) table_[i][j] = kDefaultTable[i][j];
    }
}

RiskMatrix::RiskMatrix(const Table& table) : table_(table) {
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            if ((i > 0 && table_[i][j] < table_[i - 1][j]) || (j > 0 && table_[i][j] < table_[i][j - 1])) {
                throw Error(ErrorKind::config,
                            fmt::format("risk matrix is not monotone at crowding '{}', aggravation '{}'",
                                        to_string(static_cast<CrowdingBand>(i)), to_string(static_cast<AggravationBand>(j))));
            }
        }
    }
}

RiskCategory RiskMatrix::lookup(CrowdingBand c, AggravationBand a) const {
    return table_[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)];
}

RiskCategory MatrixClassifier::classify(const CrowdingLevel& crowding, double aggravation) const {
    return matrix_.lookup(crowding.band, aggravation_band(aggravation, cuts_));
}

std::string MatrixClassifier::describe(const CrowdingLevel& crowding, double aggravation) const {
    const auto a = aggravation_band(aggravation, cuts_);
    return fmt::format("matrix cell [crowding {}][aggravation {}] -> {}", to_string(crowding.band), to_string(a),
                       to_string(matrix_.lookup(crowding.band, a)));
}

double RiskConfig::weight_of(const std::string& factor) const {
    for (const auto& [name, w] : weights) {
        if (name == factor) return w;
    }
    return 0.0;
}

AggravatingFactors RiskConfig::weighted(const std::vector<std::pair<std::string, double>>& scores) const {
    AggravatingFactors f;
    for (const auto& [name, score] : scores) f.factors.push_back({name, score, weight_of(name)});
    return f;
}

double weather_extremity(double temperature_c, double comfort_c, double span_c) {
    if (!(span_c > 0.0)) throw Error(ErrorKind::config, "extremity span must be positive");
    return std::clamp((temperature_c - comfort_c) / span_c, 0.0, 1.0);
}

double weather_extremity(const WeatherRecord& w, const RiskConfig& config) {
    return weather_extremity(w.temperature_c, config.comfort_temp_c, config.extremity_span_c);
}

RiskAssessment classify_risk(const CrowdingLevel& crowding, const AggravatingFactors& factors,
                             const RiskClassifier& classifier, const AggravationCuts& cuts) {
    RiskAssessment a;
    a.zone_id = crowding.zone_id;
    a.time = crowding.time;
    a.crowding = crowding;
    a.aggravation = aggravation_score(factors);
    a.aggravation_band = aggravation_band(a.aggravation, cuts);
    a.category = classifier.classify(crowding, a.aggravation);

    a.explanation.push_back(fmt::format("crowding {} at percentile {:.1f} (value {:.1f}){}", to_string(crowding.band),
                                        crowding.percentile, crowding.value,
                                        crowding.used_fallback ? ", zone-wide reference" : ""));
    double total = 0.0;
    for (const auto& f : factors.factors) total += f.weight;
    std::vector<std::pair<double, const Factor*>> contributions;
    for (const auto& f : factors.factors) contributions.emplace_back(f.weight * f.score / total, &f);
    std::stable_sort(contributions.begin(), contributions.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    for (const auto& [c, f] : contributions) {
        if (c <= 0.0) continue;
        a.explanation.push_back(
            fmt::format("{}: score {:.2f} x weight {:.2f} -> {:.3f}", f->name, f->score, f->weight, c));
    }
    a.explanation.push_back(fmt::format("aggravation {:.3f} ({})", a.aggravation, to_string(a.aggravation_band)));
    a.explanation.push_back(classifier.describe(crowding, a.aggravation));
    return a;
}

RiskAssessment classify_risk(const CrowdingLevel& crowding, const AggravatingFactors& factors, const RiskConfig& config) {
    const MatrixClassifier classifier(config.matrix, config.aggravation_cuts);
    return classify_risk(crowding, factors, classifier, config.aggravation_cuts);
}

RiskConfig risk_config_from_json(const nlohmann::json& j) {
    RiskConfig c;
    try {
        if (j.contains("crowding_cuts")) {
            const auto v = j.at("crowding_cuts").get<std::vector<double>>();
            if (v.size() != 3) throw Error(ErrorKind::config, "crowding_cuts needs 3 values");
            std::copy(v.begin(), v.end(), c.crowding_cuts.percentiles.begin());
        }
        if (j.contains("aggravation_cuts")) {
            const auto v = j.at("aggravation_cuts").get<std::vector<double>>();
            if (v.size() != 2) throw Error(ErrorKind::config, "aggravation_cuts needs 2 values");
            std::copy(v.begin(), v.end(), c.aggravation_cuts.bounds.begin());
        }
        if (j.contains("matrix")) {
            const auto& m = j.at("matrix");
            if (!m.is_array() || m.size() != 4) throw Error(ErrorKind::config, "matrix needs 4 rows");
            RiskMatrix::Table t{};
            for (std::size_t i = 0; i < 4; ++i) {
                if (!m[i].is_array() || m[i].size() != 3) throw Error(ErrorKind::config, "matrix rows need 3 cells");
                for (std::size_t k = 0; k < 3; ++k) t[i][k] = parse_risk_category(m[i][k].get<std::string>());
            }
            c.matrix = RiskMatrix(t);
        }
        if (j.contains("weights")) {
            c.weights.clear();
            for (const auto& [name, w] : j.at("weights").items()) c.weights.emplace_back(name, w.get<double>());
        }
        c.comfort_temp_c = j.value("comfort_temp_c", c.comfort_temp_c);
        c.extremity_span_c = j.value("extremity_span_c", c.extremity_span_c);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, fmt::format("risk config: {}", e.what()));
    }
    c.crowding_cuts.validate();
    c.aggravation_cuts.validate();
    for (const auto& [name, w] : c.weights) {
        if (!(w >= 0.0)) throw Error(ErrorKind::config, fmt::format("weight of '{}' is negative", name));
    }
    if (!(c.extremity_span_c > 0.0)) throw Error(ErrorKind::config, "extremity_span_c must be positive");
    return c;
}

nlohmann::json to_json(const RiskConfig& c) {
    nlohmann::json matrix = nlohmann::json::array();
    for (const auto& row : c.matrix.table()) {
        nlohmann::json r = nlohmann::json::array();
        for (auto cell : row) r.push_back(std::string(to_string(cell)));
        matrix.push_back(std::move(r));
    }
    nlohmann::json weights = nlohmann::json::object();
    for (const auto& [name, w] : c.weights) weights[name] = w;
    return nlohmann::json{{"crowding_cuts", c.crowding_cuts.percentiles},
                          {"aggravation_cuts", c.aggravation_cuts.bounds},
                          {"matrix", matrix},
                          {"weights", weights},
                          {"comfort_temp_c", c.comfort_temp_c},
                          {"extremity_span_c", c.extremity_span_c}};
}

RiskConfig load_risk_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::config, fmt::format("{}: {}", path, e.what()));
    }
    return risk_config_from_json(j);
}

nlohmann::json to_json(const RiskAssessment& a) {
    return nlohmann::json{{"zone_id", a.zone_id},
                          {"timestamp", format_timestamp(a.time)},
                          {"value", a.crowding.value},
                          {"percentile", a.crowding.percentile},
                          {"crowding_band", std::string(to_string(a.crowding.band))},
                          {"reference_fallback", a.crowding.used_fallback},
                          {"aggravation", a.aggravation},
                          {"aggravation_band", std::string(to_string(a.aggravation_band))},
                          {"category", std::string(to_string(a.category))},
                          {"explanation", a.explanation}};
}

}  // namespace csm
