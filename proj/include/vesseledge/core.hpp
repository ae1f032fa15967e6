#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "vesseledge/error.hpp"

namespace vesseledge {

/// Maritime Mobile Service Identity. Nine decimal digits, always fits in 30 bits.
class VesselId {
public:
    static constexpr std::uint32_t kMax = 999'999'999;

    constexpr VesselId() = default;
    explicit VesselId(std::int64_t mmsi);

    constexpr std::uint32_t value() const noexcept { return mmsi_; }

    friend constexpr auto operator<=>(VesselId, VesselId) = default;

private:
    std::uint32_t mmsi_ = 0;
};

using Timestamp = std::int64_t; // UTC seconds since the Unix epoch

inline constexpr double kCourseUnavailable = 360.0;
inline constexpr double kLatUnavailable = 91.0;
inline constexpr double kLonUnavailable = 181.0;
inline constexpr double kSpeedUnavailable = 102.3;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;

    friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// One vessel position report. Ingestion may produce records carrying the AIS
/// "unavailable" sentinels; the cleaning stage guarantees they never get past it.
struct AisRecord {
    VesselId vessel;
    Timestamp timestamp = 0;
    double lat = 0.0;
    double lon = 0.0;
    double sog = 0.0;                       // knots
    double cog = kCourseUnavailable;        // degrees, 360 = unavailable
    std::optional<std::uint16_t> heading;   // degrees, nullopt = unavailable
    bool anomaly = false;

    LatLon position() const { return {lat, lon}; }
    bool has_course() const { return cog >= 0.0 && cog < 360.0; }

    friend bool operator==(const AisRecord&, const AisRecord&) = default;
};

bool position_valid(double lat, double lon);

/// Time-ordered points of one vessel; timestamps strictly increasing.
struct Trajectory {
    VesselId vessel;
    std::vector<AisRecord> points;

    void validate() const;

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Epoch-aligned tumbling window: start = index * duration.
struct TimeWindow {
    std::int64_t index = 0;
    Timestamp start = 0;
    std::int64_t duration = 30;

    Timestamp end() const { return start + duration; }
    bool contains(Timestamp t) const { return t >= start && t < end(); }

    friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

inline constexpr std::int64_t kDefaultWindowSeconds = 30;

TimeWindow window_of(Timestamp t, std::int64_t duration = kDefaultWindowSeconds);
TimeWindow window_at(std::int64_t index, std::int64_t duration = kDefaultWindowSeconds);

inline constexpr double kEarthRadiusM = 6'371'008.8;
inline constexpr double kMetersPerSecondPerKnot = 1852.0 / 3600.0;

/// Great-circle distance on the mean-radius sphere.
double haversine_m(LatLon a, LatLon b);

/// Linear interpolation of lat/lon in time between two records.
LatLon interpolate_at(const AisRecord& p1, const AisRecord& p2, Timestamp t);

/// Point reached from `from` after travelling `distance_m` on initial bearing `bearing_deg`.
LatLon destination(LatLon from, double bearing_deg, double distance_m);

} // namespace vesseledge

template <>
struct std::hash<vesseledge::VesselId> {
    std::size_t operator()(vesseledge::VesselId id) const noexcept { return std::hash<std::uint32_t>{}(id.value()); }
};
