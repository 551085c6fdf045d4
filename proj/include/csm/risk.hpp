#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "csm/series.hpp"

namespace csm {

enum class CrowdingBand { low, moderate, high, extreme };
enum class AggravationBand { low, medium, high };
enum class RiskCategory { low, elevated, high, critical };

std::string_view to_string(CrowdingBand b);
std::string_view to_string(AggravationBand b);
std::string_view to_string(RiskCategory c);
RiskCategory parse_risk_category(std::string_view text);

/// Historical visitor values of one zone bucketed by local hour of week.
class ReferenceDistribution {
public:
    ReferenceDistribution() = default;
    ReferenceDistribution(std::string zone_id, std::array<std::vector<double>, 168> by_hour_of_week);

    /// Buckets every observed slot of `history` (any sub-daily resolution).
    static ReferenceDistribution from_series(const ZoneSeries& history);

    const std::string& zone_id() const { return zone_id_; }
    const std::vector<double>& bucket(int hour_of_week) const { return by_hour_[static_cast<std::size_t>(hour_of_week)]; }
    const std::vector<double>& all() const { return all_; }

private:
    std::string zone_id_;
    std::array<std::vector<double>, 168> by_hour_;  // sorted
    std::vector<double> all_;                       // sorted
};

int hour_of_week(const Timestamp& t);

struct CrowdingLevel {
    std::string zone_id;
    Timestamp time;
    double value = 0.0;
    double percentile = 0.0;  // [0, 100]
    CrowdingBand band = CrowdingBand::low;
    /// The hour-of-week bucket was empty; the zone-wide distribution was used.
    bool used_fallback = false;
};

/// Percentile cut points separating the four crowding bands.
struct CrowdingCuts {
    std::array<double, 3> percentiles{50.0, 80.0, 95.0};
    void validate() const;
};

/// percentile = 100 * #{reference <= value} / #reference.
CrowdingLevel crowding_level(double value, const Timestamp& t, const ReferenceDistribution& reference,
                             const CrowdingCuts& cuts = {});
/// Same rule against an explicit reference sample.
CrowdingLevel crowding_level(double value, std::vector<double> reference, const CrowdingCuts& cuts = {});

struct Factor {
    std::string name;
    double score = 0.0;   // [0, 1]
    double weight = 1.0;  // >= 0
};

struct AggravatingFactors {
    std::vector<Factor> factors;
    void validate() const;
};

/// Weighted arithmetic mean of the factor scores.
double aggravation_score(const AggravatingFactors& factors);

struct AggravationCuts {
    std::array<double, 2> bounds{0.33, 0.66};
    void validate() const;
};

AggravationBand aggravation_band(double aggravation, const AggravationCuts& cuts = {});

/// Category per (crowding band, aggravation band). Category must be
/// non-decreasing along both axes.
class RiskMatrix {
public:
    using Table = std::array<std::array<RiskCategory, 3>, 4>;

    RiskMatrix();
    explicit RiskMatrix(const Table& table);

    RiskCategory lookup(CrowdingBand c, AggravationBand a) const;
    const Table& table() const { return table_; }

private:
    Table table_;
};

/// Seam for replacing the table lookup by a learned classifier.
class RiskClassifier {
public:
    virtual ~RiskClassifier() = default;
    virtual RiskCategory classify(const CrowdingLevel& crowding, double aggravation) const = 0;
    virtual std::string describe(const CrowdingLevel& crowding, double aggravation) const = 0;
};

class MatrixClassifier final : public RiskClassifier {
public:
    MatrixClassifier(RiskMatrix matrix, AggravationCuts cuts) : matrix_(matrix), cuts_(cuts) {}

    RiskCategory classify(const CrowdingLevel& crowding, double aggravation) const override;
    std::string describe(const CrowdingLevel& crowding, double aggravation) const override;

private:
    RiskMatrix matrix_;
    AggravationCuts cuts_;
};

struct RiskConfig {
    CrowdingCuts crowding_cuts;
    AggravationCuts aggravation_cuts;
    RiskMatrix matrix;
    /// Factor weights; unknown factor names get weight 0.
    std::vector<std::pair<std::string, double>> weights{
        {"weather_extremity", 1.0}, {"event_on", 1.0}, {"sentiment", 1.0}, {"personnel_shortage", 1.0}};
    double comfort_temp_c = 25.0;
    double extremity_span_c = 10.0;

    double weight_of(const std::string& factor) const;
    /// Builds weighted factors from raw scores using the configured weights.
    AggravatingFactors weighted(const std::vector<std::pair<std::string, double>>& scores) const;
};

RiskConfig risk_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RiskConfig& c);
RiskConfig load_risk_config(const std::string& path);

/// Exceedance of temperature above the comfort threshold, scaled to [0, 1].
double weather_extremity(const WeatherRecord& w, const RiskConfig& config);
double weather_extremity(double temperature_c, double comfort_c, double span_c);

struct RiskAssessment {
    std::string zone_id;
    Timestamp time;
    CrowdingLevel crowding;
    double aggravation = 0.0;
    AggravationBand aggravation_band = AggravationBand::low;
    RiskCategory category = RiskCategory::low;
    std::vector<std::string> explanation;
};

RiskAssessment classify_risk(const CrowdingLevel& crowding, const AggravatingFactors& factors, const RiskConfig& config);
RiskAssessment classify_risk(const CrowdingLevel& crowding, const AggravatingFactors& factors,
                             const RiskClassifier& classifier, const AggravationCuts& cuts);

nlohmann::json to_json(const RiskAssessment& a);

}  // namespace csm
