#include "vesseledge/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vesseledge {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::ParseError: return "parse-error";
    case ErrorKind::ChecksumError: return "checksum-error";
    case ErrorKind::UnsupportedType: return "unsupported-type";
    case ErrorKind::IncompleteMultipart: return "incomplete-multipart";
    case ErrorKind::FormatError: return "format-error";
    case ErrorKind::EmptyModel: return "empty-model";
    case ErrorKind::StateError: return "state-error";
    case ErrorKind::ConfigError: return "config-error";
    case ErrorKind::CorruptPacket: return "corrupt-packet";
    case ErrorKind::TruncatedPacket: return "truncated-packet";
    case ErrorKind::VersionError: return "version-error";
    case ErrorKind::IoError: return "io-error";
    }
    return "unknown";
}

VesselId::VesselId(std::int64_t mmsi) {
    if (mmsi < 0 || mmsi > kMax)
        throw Error(ErrorKind::InvalidArgument, "MMSI out of range: " + std::to_string(mmsi));
    mmsi_ = static_cast<std::uint32_t>(mmsi);
}

bool position_valid(double lat, double lon) {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 &&
           lon <= 180.0;
}

void Trajectory::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].vessel != vessel)
            throw Error(ErrorKind::InvalidArgument, "trajectory mixes vessel ids");
        if (i > 0 && points[i].timestamp <= points[i - 1].timestamp)
            throw Error(ErrorKind::InvalidArgument, "trajectory timestamps not strictly increasing");
    }
}

TimeWindow window_of(Timestamp t, std::int64_t duration) {
    if (duration <= 0)
        throw Error(ErrorKind::InvalidArgument, "window duration must be positive");
    // floor division so negative timestamps still tile
    std::int64_t index = t / duration;
    if ((t % duration) != 0 && t < 0)
        --index;
    return {index, index * duration, duration};
}

TimeWindow window_at(std::int64_t index, std::int64_t duration) {
    if (duration <= 0)
        throw Error(ErrorKind::InvalidArgument, "window duration must be positive");
    return {index, index * duration, duration};
}

namespace {

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

} // namespace

double haversine_m(LatLon a, LatLon b) {
    if (!position_valid(a.lat, a.lon) || !position_valid(b.lat, b.lon))
        throw Error(ErrorKind::InvalidArgument, "coordinate out of range");
    if (a == b)
        return 0.0;
    const double phi1 = deg2rad(a.lat);
    const double phi2 = deg2rad(b.lat);
    const double dphi = deg2rad(b.lat - a.lat);
    const double dlambda = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    h = std::min(1.0, std::max(0.0, h));
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

LatLon interpolate_at(const AisRecord& p1, const AisRecord& p2, Timestamp t) {
    if (p1.timestamp >= p2.timestamp)
        throw Error(ErrorKind::InvalidArgument, "interpolation requires p1 before p2");
    if (t < p1.timestamp || t > p2.timestamp)
        throw Error(ErrorKind::InvalidArgument, "interpolation time outside [p1, p2]");
    if (t == p1.timestamp)
        return p1.position();
    if (t == p2.timestamp)
        return p2.position();
    const double f = static_cast<double>(t - p1.timestamp) / static_cast<double>(p2.timestamp - p1.timestamp);
    return {p1.lat + f * (p2.lat - p1.lat), p1.lon + f * (p2.lon - p1.lon)};
}

LatLon destination(LatLon from, double bearing_deg, double distance_m) {
    const double delta = distance_m / kEarthRadiusM;
    const double theta = deg2rad(bearing_deg);
    const double phi1 = deg2rad(from.lat);
    const double lambda1 = deg2rad(from.lon);
    const double sin_phi2 = std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
    const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
    const double y = std::sin(theta) * std::sin(delta) * std::cos(phi1);
    const double x = std::cos(delta) - std::sin(phi1) * sin_phi2;
    double lambda2 = lambda1 + std::atan2(y, x);
    double lon = rad2deg(lambda2);
    lon = std::fmod(lon + 540.0, 360.0) - 180.0;
    return {rad2deg(phi2), lon};
}

} // namespace vesseledge
