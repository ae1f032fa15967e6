#include "vesseledge/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>

#include "vesseledge/ais.hpp"

namespace vesseledge::synth {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Approaches, fairway and quays west of Gothenburg.
constexpr LatLon kSea{57.600, 11.580};
constexpr LatLon kNorthSea{57.745, 11.600};
constexpr LatLon kVinga{57.630, 11.640};
constexpr LatLon kHjartholmen{57.705, 11.740};
constexpr LatLon kOuter{57.655, 11.720};
constexpr LatLon kAlvsborg{57.680, 11.790};
constexpr LatLon kTorshamn{57.684, 11.806};
constexpr LatLon kSkandia{57.692, 11.835};
constexpr LatLon kMouth{57.689, 11.852};
constexpr LatLon kRiver{57.697, 11.900};
constexpr LatLon kStena{57.701, 11.944};
constexpr LatLon kAnchorage{57.625, 11.700};
constexpr LatLon kGrounds{57.610, 11.625};
constexpr std::array<LatLon, 5> kIslands{{
    {57.660, 11.840},  // Saltholmen
    {57.652, 11.812},  // Aspero
    {57.643, 11.775},  // Branno
    {57.616, 11.785},  // Styrso
    {57.571, 11.775},  // Vrango
}};

constexpr double kMinLat = 57.55, kMaxLat = 57.76, kMinLon = 11.55, kMaxLon = 11.97;

enum class Kind { Ferry, Cargo, Archipelago, Tug, Anchored, Fishing, Leisure };

// Default fleet mix; larger or smaller fleets scale it.
constexpr std::array<std::pair<Kind, int>, 7> kFleet{{{Kind::Ferry, 6},
                                                      {Kind::Cargo, 22},
                                                      {Kind::Archipelago, 10},
                                                      {Kind::Tug, 6},
                                                      {Kind::Anchored, 12},
                                                      {Kind::Fishing, 8},
                                                      {Kind::Leisure, 30}}};

Kind kind_of(std::size_t i, std::size_t n) {
    const auto slot = static_cast<int>(i * 94 / n);
    int acc = 0;
    for (auto [k, c] : kFleet) {
        acc += c;
        if (slot < acc)
            return k;
    }
    return Kind::Leisure;
}

struct Handling {
    double turn_deg_s;
    double accel_kn_s;
};

Handling handling(Kind k) {
    switch (k) {
    case Kind::Ferry: return {0.8, 0.05};
    case Kind::Cargo: return {0.4, 0.02};
    case Kind::Archipelago: return {2.0, 0.15};
    case Kind::Tug: return {3.0, 0.2};
    case Kind::Fishing: return {1.5, 0.08};
    case Kind::Leisure: return {5.0, 0.4};
    case Kind::Anchored: return {0.4, 0.02};
    }
    return {1.0, 0.1};
}

std::uint32_t mmsi_of(Kind k, std::size_t i) {
    const std::uint32_t base = k == Kind::Leisure ? 265'700'000u : k == Kind::Ferry ? 266'100'000u : 265'100'000u;
    return base + static_cast<std::uint32_t>(i) * 1'013u + 7u;
}

double bearing_deg(LatLon a, LatLon b) {
    const double p1 = a.lat * kDeg, p2 = b.lat * kDeg, dl = (b.lon - a.lon) * kDeg;
    const double y = std::sin(dl) * std::cos(p2);
    const double x = std::cos(p1) * std::sin(p2) - std::sin(p1) * std::cos(p2) * std::cos(dl);
    return std::fmod(std::atan2(y, x) / kDeg + 360.0, 360.0);
}

double wrap180(double d) {
    d = std::fmod(d + 180.0, 360.0);
    if (d < 0)
        d += 360.0;
    return d - 180.0;
}

// One leg of a voyage: steer to `pos` at `speed_kn`; on arrival rest for
// `dwell_s` (moored, or out of the area when `away`).
struct Target {
    LatLon pos;
    double speed_kn;
    std::int64_t dwell_s = 0;
    bool away = false;
};

using Rng = std::mt19937_64;

double uni(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

LatLon jitter(Rng& rng, LatLon p, double metres) {
    return destination(p, uni(rng, 0, 360), uni(rng, 0, metres));
}

// Keeps to starboard of the fairway centre line.
void sail(std::vector<Target>& out, LatLon from, std::initializer_list<std::pair<LatLon, double>> path, double offset_m) {
    LatLon prev = from;
    for (auto [p, v] : path) {
        out.push_back({destination(p, bearing_deg(prev, p) + 90.0, offset_m), v});
        prev = p;
    }
}

struct Plan {
    LatLon start;
    std::int64_t initial_rest = 0;  // seconds at rest (or away) before the first target
    bool initially_away = false;
    std::vector<Target> targets;
};

constexpr std::int64_t kMin = 60, kHour = 3600;

Plan plan_for(Kind kind, Rng& rng, std::int64_t day) {
    Plan p;
    auto dur = [&](double lo_min, double hi_min) { return static_cast<std::int64_t>(uni(rng, lo_min, hi_min) * kMin); };
    const double off = uni(rng, 80, 200);
    switch (kind) {
    case Kind::Ferry: {
        p.start = jitter(rng, kStena, 40);
        p.initial_rest = dur(0, 180);
        for (int trip = 0; trip < 8; ++trip) {
            sail(p.targets, kStena,
                 {{kRiver, 8}, {kMouth, 9}, {kAlvsborg, 14}, {kOuter, 17}, {kVinga, 17}, {kSea, 17}}, off);
            p.targets.back().dwell_s = dur(150, 210);
            p.targets.back().away = true;
            sail(p.targets, kSea, {{kVinga, 17}, {kOuter, 17}, {kAlvsborg, 14}, {kMouth, 9}, {kRiver, 8}}, off);
            p.targets.push_back({jitter(rng, kStena, 40), 5, dur(60, 120)});
        }
        break;
    }
    case Kind::Cargo: {
        const LatLon quay = jitter(rng, uni(rng, 0, 1) < 0.5 ? kSkandia : kTorshamn, 150);
        const bool north = uni(rng, 0, 1) < 0.3;
        const LatLon sea = north ? kNorthSea : kSea;
        const double cruise = uni(rng, 10, 13);
        if (uni(rng, 0, 1) < 0.5) {
            // arriving during the day
            p.start = sea;
            p.initially_away = true;
            p.initial_rest = dur(0, 20 * 60);
            if (north)
                sail(p.targets, sea, {{kHjartholmen, cruise}, {kAlvsborg, 8}}, off);
            else
                sail(p.targets, sea, {{kVinga, cruise}, {kOuter, cruise}, {kAlvsborg, 8}}, off);
            p.targets.push_back({quay, 4, day});
        } else {
            p.start = quay;
            p.initial_rest = dur(30, 22 * 60);
            if (north)
                sail(p.targets, quay, {{kAlvsborg, 6}, {kHjartholmen, cruise}, {sea, cruise}}, off);
            else
                sail(p.targets, quay, {{kAlvsborg, 6}, {kOuter, cruise}, {kVinga, cruise}, {kSea, cruise}}, off);
            p.targets.back().dwell_s = day;
            p.targets.back().away = true;
        }
        break;
    }
    case Kind::Archipelago: {
        const auto first = static_cast<std::size_t>(uni(rng, 0, 4.999));
        p.start = kIslands[first];
        p.initial_rest = 5 * kHour + dur(0, 60);
        const double cruise = uni(rng, 10, 12);
        std::size_t at = first;
        int dir = first == 4 ? -1 : 1;
        std::int64_t clock = p.initial_rest;
        while (clock < 24 * kHour) {
            if ((at == 4 && dir > 0) || (at == 0 && dir < 0))
                dir = -dir;
            const std::size_t next = static_cast<std::size_t>(static_cast<int>(at) + dir);
            const auto d = haversine_m(kIslands[at], kIslands[next]);
            const auto stop = dur(3, 6);
            p.targets.push_back({jitter(rng, kIslands[next], 30), cruise, stop});
            clock += static_cast<std::int64_t>(d / (cruise * kMetersPerSecondPerKnot)) + stop;
            at = next;
        }
        p.targets.back().dwell_s = day;
        break;
    }
    case Kind::Tug: {
        const LatLon base = jitter(rng, kSkandia, 200);
        p.start = base;
        p.initial_rest = dur(0, 240);
        const int jobs = static_cast<int>(uni(rng, 4, 8.999));
        for (int j = 0; j < jobs; ++j) {
            const LatLon meet = uni(rng, 0, 1) < 0.5 ? jitter(rng, kOuter, 500) : jitter(rng, kAnchorage, 800);
            p.targets.push_back({jitter(rng, kAlvsborg, 200), 11});
            p.targets.push_back({meet, 11, dur(5, 20)});
            p.targets.push_back({jitter(rng, kAlvsborg, 200), 6});
            p.targets.push_back({base, 6, dur(40, 160)});
        }
        p.targets.back().dwell_s = day;
        break;
    }
    case Kind::Anchored:
        p.start = jitter(rng, kAnchorage, 1500);
        p.initial_rest = day;
        break;
    case Kind::Fishing: {
        const LatLon home = jitter(rng, kIslands[3], 100);
        p.start = home;
        p.initial_rest = 3 * kHour + dur(0, 120);
        p.targets.push_back({jitter(rng, kGrounds, 1500), 9});
        const int hauls = static_cast<int>(uni(rng, 14, 24));
        for (int h = 0; h < hauls; ++h)
            p.targets.push_back({jitter(rng, kGrounds, 3000), uni(rng, 3, 4)});
        p.targets.push_back({home, 9, day});
        break;
    }
    case Kind::Leisure: {
        const LatLon home = jitter(rng, kIslands[static_cast<std::size_t>(uni(rng, 0, 3.999))], 300);
        p.start = home;
        p.initial_rest = 8 * kHour + dur(0, 300);
        const int trips = static_cast<int>(uni(rng, 2, 6.999));
        for (int t = 0; t < trips; ++t) {
            const LatLon dest = jitter(rng, kIslands[static_cast<std::size_t>(uni(rng, 0, 4.999))], 1500);
            p.targets.push_back({dest, uni(rng, 6, 22), dur(10, 60)});
        }
        p.targets.push_back({home, uni(rng, 6, 15), day});
        break;
    }
    }
    return p;
}

enum class EventKind { Overspeed, Drift, LaneDeparture, Circling };

struct Event {
    std::int64_t start;
    std::int64_t length;
    EventKind kind;
    double side;
};

bool in_area(LatLon p) { return p.lat > kMinLat && p.lat < kMaxLat && p.lon > kMinLon && p.lon < kMaxLon; }

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

struct Simulated {
    std::vector<AisRecord> records;
    std::size_t events = 0;
};

Simulated simulate(Kind kind, VesselId id, const HarbourDayConfig& cfg, Rng& rng) {
    const auto day = cfg.duration_s;
    const Plan plan = plan_for(kind, rng, day);
    const Handling h = handling(kind);
    const bool class_b = kind == Kind::Leisure;

    std::vector<Event> events;
    if (kind != Kind::Anchored) {
        std::poisson_distribution<int> count(cfg.events_per_vessel);
        const int n = count(rng);
        for (int i = 0; i < n; ++i)
            events.push_back({static_cast<std::int64_t>(uni(rng, 0, static_cast<double>(day))),
                              static_cast<std::int64_t>(uni(rng, 120, 600)),
                              static_cast<EventKind>(static_cast<int>(uni(rng, 0, 3.999))),
                              uni(rng, 0, 1) < 0.5 ? -1.0 : 1.0});
        std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.start < b.start; });
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    Simulated out;

    LatLon pos = plan.start;
    double heading = uni(rng, 0, 360);
    double speed = 0.0;
    std::int64_t rest_until = plan.initial_rest;
    bool away = plan.initially_away;
    std::size_t target = 0;
    std::size_t next_event = 0;
    std::optional<Event> active;
    std::int64_t next_report = static_cast<std::int64_t>(uni(rng, 0, 180));
    std::int64_t last_report = -1000;
    double last_heading = heading;

    for (std::int64_t t = 0; t < day; ++t) {
        const bool resting = t < rest_until || target >= plan.targets.size();
        if (!resting && away) {
            away = false;
            heading = bearing_deg(pos, plan.targets[target].pos);
            speed = plan.targets[target].speed_kn;
        }

        // anomaly events begin only while under way and lapse after two hours of waiting
        if (active && t >= active->start + active->length)
            active.reset();
        while (!active && next_event < events.size() && events[next_event].start <= t) {
            auto e = events[next_event];
            if (t - e.start > 2 * kHour) {
                ++next_event;
                continue;
            }
            if (resting || speed < 2.0)
                break;
            e.start = t;
            active = e;
            ++out.events;
            ++next_event;
        }

        if (resting) {
            speed = 0.0;
        } else {
            const Target& tg = plan.targets[target];
            const double dist = haversine_m(pos, tg.pos);
            double want_speed = tg.speed_kn;
            double want_heading = bearing_deg(pos, tg.pos);
            if (tg.dwell_s > 0)
                want_speed = std::min(want_speed, std::max(2.0, dist / 250.0));
            double turn = h.turn_deg_s;
            double accel = h.accel_kn_s;
            if (active) {
                switch (active->kind) {
                case EventKind::Overspeed:
                    want_speed = std::min(tg.speed_kn * 2.0 + 6.0, 38.0);
                    accel *= 4.0;
                    break;
                case EventKind::Drift:
                    want_speed = 0.8;
                    want_heading = heading + active->side * 1.5;
                    accel *= 4.0;
                    break;
                case EventKind::LaneDeparture: want_heading = want_heading + active->side * 100.0; break;
                case EventKind::Circling:
                    want_heading = heading + active->side * 90.0;
                    turn = std::max(turn, 2.0);
                    break;
                }
            }
            const double dh = std::clamp(wrap180(want_heading - heading), -turn, turn);
            heading = std::fmod(heading + dh + 360.0, 360.0);
            speed += std::clamp(want_speed - speed, -accel, accel);
            pos = destination(pos, heading, speed * kMetersPerSecondPerKnot);

            const double radius = speed * kMetersPerSecondPerKnot / (turn * kDeg);
            if (haversine_m(pos, tg.pos) < std::max(60.0, 1.2 * radius) && !active) {
                if (tg.dwell_s > 0) {
                    rest_until = t + 1 + tg.dwell_s;
                    away = tg.away;
                    speed = 0.0;
                }
                ++target;
            }
        }

        const bool moving = speed >= 0.5;
        const bool turning = std::abs(wrap180(heading - last_heading)) > 0.3;
        last_heading = heading;
        std::int64_t interval;
        if (class_b)
            interval = speed >= 2.0 ? 30 : 180;
        else if (!moving)
            interval = 180;
        else if (turning || speed > 23.0)
            interval = speed > 23.0 ? 2 : 3;
        else
            interval = speed >= 14.0 ? 6 : 10;
        next_report = std::min(next_report, last_report + interval);
        if (t < next_report)
            continue;
        last_report = t;
        const std::int64_t slack = interval >= 6 ? static_cast<std::int64_t>(uni(rng, -1, 1.999)) : 0;
        next_report = t + interval + slack;

        const bool on_air = !(t < rest_until && away);
        if (!on_air || !in_area(pos) || uni(rng, 0, 1) < cfg.reception_loss)
            continue;

        AisRecord r;
        r.vessel = id;
        r.timestamp = cfg.start + t;
        const double north = cfg.position_noise_m * gauss(rng), east = cfg.position_noise_m * gauss(rng);
        r.lat = round_to(pos.lat + north / kEarthRadiusM / kDeg, 1e6);
        r.lon = round_to(pos.lon + east / (kEarthRadiusM * std::cos(pos.lat * kDeg)) / kDeg, 1e6);
        if (moving) {
            r.sog = round_to(std::max(0.0, speed + 0.1 * gauss(rng)), 10);
            const double spread = 1.0 + 3.0 / std::max(speed, 0.3);
            r.cog = round_to(std::fmod(heading + spread * gauss(rng) + 720.0, 360.0), 10);
        } else {
            r.sog = round_to(std::abs(0.05 * gauss(rng)), 10);
            r.cog = round_to(uni(rng, 0, 360), 10);
        }
        if (r.cog >= 360.0)
            r.cog = 0.0;
        r.anomaly = active.has_value();
        out.records.push_back(r);
    }
    return out;
}

} // namespace

void HarbourDayConfig::validate() const {
    if (vessels == 0 || vessels > 10'000)
        throw Error(ErrorKind::ConfigError, "synthetic fleet size must be in [1, 10000]");
    if (duration_s <= 0)
        throw Error(ErrorKind::ConfigError, "synthetic duration must be positive");
    if (!(events_per_vessel >= 0.0) || !(position_noise_m >= 0.0))
        throw Error(ErrorKind::ConfigError, "event rate and position noise must be non-negative");
    if (!(reception_loss >= 0.0 && reception_loss < 1.0))
        throw Error(ErrorKind::ConfigError, "reception loss must lie in [0, 1)");
}

std::size_t SyntheticDay::injected_records() const {
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const AisRecord& r) { return r.anomaly; }));
}

SyntheticDay harbour_day(const HarbourDayConfig& config) {
    config.validate();
    SyntheticDay day;
    for (std::size_t i = 0; i < config.vessels; ++i) {
        const Kind kind = kind_of(i, config.vessels);
        const VesselId id(mmsi_of(kind, i));
        std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                          static_cast<std::uint32_t>(i)};
        Rng rng(seq);
        auto sim = simulate(kind, id, config, rng);
        if (kind == Kind::Leisure)
            day.class_b.insert(id);
        day.injected_events += sim.events;
        day.records.insert(day.records.end(), sim.records.begin(), sim.records.end());
    }
    std::sort(day.records.begin(), day.records.end(), [](const AisRecord& a, const AisRecord& b) {
        return std::tie(a.timestamp, a.vessel) < std::tie(b.timestamp, b.vessel);
    });
    return day;
}

void write_dma_csv(std::ostream& os, const SyntheticDay& day) {
    ais::write_dma_header(os);
    for (const auto& r : day.records)
        ais::write_dma_row(os, r, day.class_b.contains(r.vessel) ? "Class B" : "Class A");
}

void write_dma_csv(const std::filesystem::path& path, const SyntheticDay& day) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    write_dma_csv(out, day);
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

void write_nmea(std::ostream& os, const SyntheticDay& day) {
    for (const auto& r : day.records) {
        ais::PositionReport rep;
        rep.type = day.class_b.contains(r.vessel) ? 18 : 1;
        rep.mmsi = r.vessel;
        rep.lat = r.lat;
        rep.lon = r.lon;
        rep.sog = r.sog;
        if (r.has_course())
            rep.cog = r.cog;
        rep.utc_second = static_cast<int>(r.timestamp % 60);
        auto [payload, fill] = ais::encode_position_report(rep);
        ais::NmeaFrame f;
        f.tag = "AIVDM";
        f.channel = rep.type == 18 ? 'B' : 'A';
        f.payload = std::move(payload);
        f.fill_bits = fill;
        f.tag_time = r.timestamp;
        os << ais::format_sentence(f) << "\r\n";
    }
}

void write_nmea(const std::filesystem::path& path, const SyntheticDay& day) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    write_nmea(out, day);
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

} // namespace vesseledge::synth
