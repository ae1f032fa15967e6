#include "vesseledge/wire.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <deque>
#include <fstream>
#include <random>

#include <zlib.h>

namespace vesseledge::wire {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

template <typename T>
T get(std::span<const std::uint8_t> in, std::size_t& pos) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        u |= static_cast<U>(static_cast<U>(in[pos + i]) << (8 * i));
    pos += sizeof(T);
    return static_cast<T>(u);
}

std::int32_t q_deg(double v) { return static_cast<std::int32_t>(std::llround(v * 1e6)); }

std::uint16_t q_sog(double sog) {
    const auto q = std::llround(sog * 10.0);
    if (q < 0 || q > 0xFFFF)
        throw Error(ErrorKind::InvalidArgument, "speed does not fit the wire format");
    return static_cast<std::uint16_t>(q);
}

std::uint16_t q_cog(double cog) {
    if (!(cog >= 0.0 && cog < 360.0))
        return 3600;
    // 359.96 rounds to 3600, which is the unavailable code; wrap to north
    return static_cast<std::uint16_t>(std::llround(cog * 10.0) % 3600);
}

double dq_deg(std::int32_t v) { return static_cast<double>(v) / 1e6; }
double dq_tenth(std::uint16_t v) { return static_cast<double>(v) / 10.0; }

} // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong c = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for very large inputs
    std::size_t pos = 0;
    while (pos < bytes.size()) {
        const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
        c = ::crc32(c, bytes.data() + pos, n);
        pos += n;
    }
    return static_cast<std::uint32_t>(c);
}

AisRecord quantize(const AisRecord& r) {
    AisRecord q = r;
    q.lat = dq_deg(q_deg(r.lat));
    q.lon = dq_deg(q_deg(r.lon));
    q.sog = dq_tenth(q_sog(r.sog));
    q.cog = dq_tenth(q_cog(r.cog));
    q.heading.reset();
    return q;
}

std::vector<std::uint8_t> encode(std::span<const AisRecord> points, const TimeWindow& window, std::uint16_t edge_id) {
    if (window.duration <= 0 || window.duration > kMaxWindowSeconds)
        throw Error(ErrorKind::InvalidArgument, "window duration must lie in (0, 255] seconds");
    if (points.size() > kMaxPoints)
        throw Error(ErrorKind::InvalidArgument, "too many points for one packet");
    if (window.index < 0 || window.index > 0xFFFFFFFFLL)
        throw Error(ErrorKind::InvalidArgument, "window index does not fit in 32 bits");

    std::vector<std::uint8_t> out;
    out.reserve(packet_size(points.size()));
    put(out, kVersion);
    put(out, static_cast<std::uint32_t>(window.index));
    put(out, edge_id);
    put(out, static_cast<std::uint16_t>(points.size()));
    for (const auto& p : points) {
        if (!window.contains(p.timestamp))
            throw Error(ErrorKind::InvalidArgument, "record at " + std::to_string(p.timestamp) + " outside window");
        if (!position_valid(p.lat, p.lon))
            throw Error(ErrorKind::InvalidArgument, "record has an invalid position");
        put(out, p.vessel.value());
        put(out, static_cast<std::uint8_t>(p.timestamp - window.start));
        put(out, q_deg(p.lat));
        put(out, q_deg(p.lon));
        put(out, q_sog(p.sog));
        put(out, q_cog(p.cog));
        put(out, static_cast<std::uint8_t>(p.anomaly ? 1 : 0));
    }
    put(out, crc32(out));
    return out;
}

std::vector<std::uint8_t> encode(const compression::SelectionResult& selection, const TimeWindow& window,
                                 std::uint16_t edge_id) {
    return encode(selection.flatten(), window, edge_id);
}

DecodedPacket decode(std::span<const std::uint8_t> bytes, std::int64_t window_seconds) {
    if (bytes.size() < packet_size(0) || (bytes.size() - packet_size(0)) % kPointBytes != 0)
        throw Error(ErrorKind::TruncatedPacket, "packet length " + std::to_string(bytes.size()) + " is not 13 + 18n");
    std::size_t pos = bytes.size() - kCrcBytes;
    const auto stored = get<std::uint32_t>(bytes, pos);
    if (stored != crc32(bytes.first(bytes.size() - kCrcBytes)))
        throw Error(ErrorKind::CorruptPacket, "CRC mismatch");
    pos = 0;
    const auto version = get<std::uint8_t>(bytes, pos);
    if (version != kVersion)
        throw Error(ErrorKind::VersionError, "unsupported packet version " + std::to_string(version));
    DecodedPacket p;
    p.window = window_at(get<std::uint32_t>(bytes, pos), window_seconds);
    p.edge_id = get<std::uint16_t>(bytes, pos);
    const auto count = get<std::uint16_t>(bytes, pos);
    if (packet_size(count) != bytes.size())
        throw Error(ErrorKind::TruncatedPacket, "point count disagrees with packet length");
    p.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        AisRecord r;
        const auto mmsi = get<std::uint32_t>(bytes, pos);
        if (mmsi > VesselId::kMax)
            throw Error(ErrorKind::CorruptPacket, "MMSI out of range");
        r.vessel = VesselId(mmsi);
        r.timestamp = p.window.start + get<std::uint8_t>(bytes, pos);
        r.lat = dq_deg(get<std::int32_t>(bytes, pos));
        r.lon = dq_deg(get<std::int32_t>(bytes, pos));
        r.sog = dq_tenth(get<std::uint16_t>(bytes, pos));
        r.cog = dq_tenth(get<std::uint16_t>(bytes, pos));
        r.anomaly = (get<std::uint8_t>(bytes, pos) & 1) != 0;
        p.points.push_back(r);
    }
    return p;
}

void ChannelSpec::validate() const {
    if (!(bitrate > 0.0) || !std::isfinite(bitrate))
        throw Error(ErrorKind::ConfigError, "channel bitrate must be positive");
    if (!(latency >= 0.0) || !std::isfinite(latency))
        throw Error(ErrorKind::ConfigError, "channel latency must be non-negative");
    if (!(corrupt_probability >= 0.0 && corrupt_probability <= 1.0))
        throw Error(ErrorKind::ConfigError, "corruption probability must lie in [0, 1]");
}

ChannelResult channel_transmit(std::span<const TimedPacket> packets, const ChannelSpec& spec) {
    spec.validate();
    ChannelResult res;
    res.offered = packets.size();
    std::mt19937_64 rng(spec.seed);

    // packets accepted but not yet fully transmitted: (service end, bytes)
    std::deque<std::pair<double, std::size_t>> in_system;
    std::uint64_t backlog = 0;
    double busy_until = -std::numeric_limits<double>::infinity();
    double last_arrival = -std::numeric_limits<double>::infinity();

    for (std::size_t i = 0; i < packets.size(); ++i) {
        const auto& pk = packets[i];
        if (pk.time < last_arrival)
            throw Error(ErrorKind::InvalidArgument, "packet arrival times must be non-decreasing");
        last_arrival = pk.time;
        while (!in_system.empty() && in_system.front().first <= pk.time) {
            backlog -= in_system.front().second;
            in_system.pop_front();
        }
        if (backlog + pk.bytes.size() > spec.queue_bytes) {
            res.dropped.push_back(i);
            continue;
        }
        Delivery d;
        d.index = i;
        d.arrival = pk.time;
        d.bytes = pk.bytes.size();
        d.service_start = std::max(pk.time, busy_until);
        d.service_end = d.service_start + static_cast<double>(pk.bytes.size()) * 8.0 / spec.bitrate;
        d.delivered = d.service_end + spec.latency;
        if (spec.corrupt_probability > 0.0 && !pk.bytes.empty())
            d.corrupted = static_cast<double>(rng() >> 11) * 0x1.0p-53 < spec.corrupt_probability;
        busy_until = d.service_end;
        in_system.emplace_back(d.service_end, pk.bytes.size());
        backlog += pk.bytes.size();
        res.deliveries.push_back(d);
    }
    return res;
}

std::vector<TimedPacket> ChannelResult::delivered_packets(std::span<const TimedPacket> offered_packets) const {
    std::vector<TimedPacket> out;
    out.reserve(deliveries.size());
    for (const auto& d : deliveries) {
        TimedPacket p{d.delivered, offered_packets[d.index].bytes};
        if (d.corrupted) {
            // deterministic bit choice per packet
            const std::size_t bit = (d.index * 2654435761u) % (p.bytes.size() * 8);
            p.bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::size_t size_budget_check(const ChannelSpec& spec, double window_seconds) {
    const double bytes = spec.bitrate * window_seconds / 8.0 - static_cast<double>(kHeaderBytes + kCrcBytes);
    if (!(bytes > 0.0))
        return 0;
    return static_cast<std::size_t>(std::floor(bytes / static_cast<double>(kPointBytes)));
}

double channel_fraction(std::size_t point_count, const ChannelSpec& spec, double window_seconds) {
    if (point_count == 0)
        return 1.0;
    return std::min(1.0, static_cast<double>(size_budget_check(spec, window_seconds)) / static_cast<double>(point_count));
}

void write_capture(const std::filesystem::path& path, std::span<const TimedPacket> packets) {
    std::vector<std::uint8_t> out{'V', 'E', 'C', 'L'};
    for (const auto& p : packets) {
        put(out, std::bit_cast<std::uint64_t>(p.time));
        put(out, static_cast<std::uint32_t>(p.bytes.size()));
        out.insert(out.end(), p.bytes.begin(), p.bytes.end());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size())))
        throw Error(ErrorKind::IoError, "cannot write capture " + path.string());
}

std::vector<TimedPacket> read_capture(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(ErrorKind::IoError, "cannot open capture " + path.string());
    const std::vector<std::uint8_t> in((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (in.size() < 4 || std::memcmp(in.data(), "VECL", 4) != 0)
        throw Error(ErrorKind::FormatError, "not a capture file");
    std::vector<TimedPacket> out;
    std::size_t pos = 4;
    const std::span<const std::uint8_t> s(in);
    while (pos < in.size()) {
        if (in.size() - pos < 12)
            throw Error(ErrorKind::FormatError, "capture record header truncated");
        TimedPacket p;
        p.time = std::bit_cast<double>(get<std::uint64_t>(s, pos));
        const auto len = get<std::uint32_t>(s, pos);
        if (in.size() - pos < len)
            throw Error(ErrorKind::FormatError, "capture record body truncated");
        p.bytes.assign(in.begin() + static_cast<std::ptrdiff_t>(pos), in.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
        out.push_back(std::move(p));
    }
    return out;
}

} // namespace vesseledge::wire
