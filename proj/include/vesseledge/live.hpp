#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>

#include "vesseledge/scenario.hpp"

// Far-edge and near-edge processes talking over TCP. Each packet travels as a
// u32 little-endian length followed by the wire packet.
namespace vesseledge::live {

struct FarEdgeStats {
    std::size_t lines = 0;
    std::size_t records = 0;
    std::size_t late_records = 0;    // arrived after their window had closed
    std::size_t windows = 0;
    std::size_t packets_sent = 0;
    std::size_t packets_dropped = 0; // buffer full while the near edge was unreachable
    std::size_t connects = 0;
    ais::CleanReport report;
};

/// Reads NMEA lines from `input` until EOF, compresses with run
/// `config.live.run` and ships one packet per closed window.
FarEdgeStats run_far_edge(const scenario::ScenarioConfig& config, std::istream& input,
                          const std::atomic<bool>* stop = nullptr);

struct NearEdgeOptions {
    std::size_t max_connections = 0;   // return once this many connections have closed; 0 = never
    double idle_exit_s = 0.0;          // return after this long without traffic; 0 = never
    const std::atomic<bool>* stop = nullptr;
    std::function<void(std::uint16_t port)> on_listening;
};

struct NearEdgeStats {
    std::size_t connections = 0;
    std::size_t packets = 0;
    std::size_t bad_packets = 0;
    std::size_t store_points = 0;
};

/// Serves until an exit condition holds, then writes store_live.csv (fresh)
/// into out_dir. Metric snapshots are appended to near_metrics.csv.
NearEdgeStats run_near_edge(const scenario::ScenarioConfig& config, const NearEdgeOptions& options = {});

inline constexpr std::string_view kLiveStoreFile = "store_live.csv";
inline constexpr std::string_view kNearMetricsFile = "near_metrics.csv";

} // namespace vesseledge::live
