#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vesseledge/compression.hpp"
#include "vesseledge/core.hpp"

namespace vesseledge::wire {

inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 9;
inline constexpr std::size_t kPointBytes = 18;
inline constexpr std::size_t kCrcBytes = 4;
inline constexpr std::size_t kMaxPoints = 65'535;
inline constexpr std::int64_t kMaxWindowSeconds = 255;

/// Packet layout, little-endian:
///   u8 version | u32 window index | u16 edge id | u16 point count
///   per point: u32 mmsi (30 bits) | u8 seconds since window start |
///              i32 lat 1e-6 deg | i32 lon 1e-6 deg | u16 sog 0.1 kn |
///              u16 cog 0.1 deg (3600 = unavailable) | u8 flags (bit 0 anomaly)
///   u32 CRC-32 over everything before it
constexpr std::size_t packet_size(std::size_t points) { return kHeaderBytes + kPointBytes * points + kCrcBytes; }

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

/// The record as it comes out of decode(encode(...)): coordinates on the 1e-6
/// degree grid, sog/cog on 0.1 steps, heading dropped.
AisRecord quantize(const AisRecord& record);

std::vector<std::uint8_t> encode(std::span<const AisRecord> points, const TimeWindow& window, std::uint16_t edge_id);
std::vector<std::uint8_t> encode(const compression::SelectionResult& selection, const TimeWindow& window,
                                 std::uint16_t edge_id);

struct DecodedPacket {
    TimeWindow window;
    std::uint16_t edge_id = 0;
    std::vector<AisRecord> points;

    friend bool operator==(const DecodedPacket&, const DecodedPacket&) = default;
};

/// Throws Error{TruncatedPacket}, Error{CorruptPacket} or Error{VersionError}.
DecodedPacket decode(std::span<const std::uint8_t> bytes, std::int64_t window_seconds = kDefaultWindowSeconds);

struct ChannelSpec {
    double bitrate = 9600.0;        // bit/s
    double latency = 0.25;          // s
    std::uint64_t queue_bytes = 65'536;
    double corrupt_probability = 0.0;  // per delivered packet, one flipped bit
    std::uint64_t seed = 1;

    void validate() const;
};

struct TimedPacket {
    double time = 0.0;  // arrival at the sender, or delivery at the receiver
    std::vector<std::uint8_t> bytes;

    friend bool operator==(const TimedPacket&, const TimedPacket&) = default;
};

struct Delivery {
    std::size_t index = 0;      // position in the offered stream
    double arrival = 0.0;
    double service_start = 0.0;
    double service_end = 0.0;
    double delivered = 0.0;     // service_end + latency
    std::size_t bytes = 0;
    bool corrupted = false;
};

struct ChannelResult {
    std::vector<Delivery> deliveries;  // FIFO order
    std::vector<std::size_t> dropped;  // indices into the offered stream
    std::size_t offered = 0;

    /// Delivered packets with their (possibly corrupted) payloads.
    std::vector<TimedPacket> delivered_packets(std::span<const TimedPacket> offered) const;
};

/// FIFO single-server link. A packet is dropped when the bytes still in the
/// system (queued plus in service) and the packet itself exceed the queue
/// capacity. Throws Error{InvalidArgument} on decreasing arrival times.
ChannelResult channel_transmit(std::span<const TimedPacket> packets, const ChannelSpec& spec);

/// Points the channel can carry per window: floor((bitrate * duration / 8 - 13) / 18), at least 0.
std::size_t size_budget_check(const ChannelSpec& spec, double window_seconds);

/// Budget fraction that fits a window of `point_count` points on the channel, at most 1.
double channel_fraction(std::size_t point_count, const ChannelSpec& spec, double window_seconds);

/// Capture file: "VECL" then per packet f64 time, u32 length, bytes.
void write_capture(const std::filesystem::path& path, std::span<const TimedPacket> packets);
std::vector<TimedPacket> read_capture(const std::filesystem::path& path);

} // namespace vesseledge::wire
