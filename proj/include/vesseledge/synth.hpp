#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <vector>

#include "vesseledge/core.hpp"

// Seeded harbour-day traffic generator. Produces ferries, cargo ships, tugs,
// archipelago boats, anchored ships, fishing boats and Class B leisure craft
// around the Gothenburg approaches, reported at ITU-R M.1371 rates and rounded
// to the precision of the DMA CSV export. Injected anomaly events (overspeed,
// drifting, lane departure, circling) are labelled in AisRecord::anomaly.
namespace vesseledge::synth {

struct HarbourDayConfig {
    std::uint64_t seed = 2018;
    Timestamp start = 1'530'576'000;  // 2018-07-03 00:00:00 UTC
    std::int64_t duration_s = 86'400;
    std::size_t vessels = 94;
    double events_per_vessel = 2.5;   // Poisson mean of injected anomaly events per moving vessel
    double position_noise_m = 3.0;    // per-axis GPS noise, standard deviation
    double reception_loss = 0.1;      // probability that a transmitted report is not received

    void validate() const;
};

struct SyntheticDay {
    std::vector<AisRecord> records;   // ordered by (timestamp, mmsi)
    std::set<VesselId> class_b;       // vessels transmitting Class B reports
    std::size_t injected_events = 0;

    std::size_t injected_records() const;
};

SyntheticDay harbour_day(const HarbourDayConfig& config);

/// DMA "aisdk" CSV (header plus one row per record; the anomaly label is not written).
void write_dma_csv(std::ostream& os, const SyntheticDay& day);
void write_dma_csv(const std::filesystem::path& path, const SyntheticDay& day);

/// Tag-blocked AIVDM sentences, type 1 for Class A and 18 for Class B.
void write_nmea(std::ostream& os, const SyntheticDay& day);
void write_nmea(const std::filesystem::path& path, const SyntheticDay& day);

} // namespace vesseledge::synth
