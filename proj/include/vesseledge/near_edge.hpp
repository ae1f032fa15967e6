#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vesseledge/anomaly.hpp"
#include "vesseledge/core.hpp"
#include "vesseledge/wire.hpp"

namespace vesseledge::near_edge {

/// Where a stored point came from: the coastal AIS feed or a far-edge id.
/// Coastal ranks before every far edge; lower edge ids rank before higher ones.
struct Source {
    static constexpr std::int32_t kCoastal = -1;
    std::int32_t id = kCoastal;

    static Source coastal() { return {}; }
    static Source edge(std::uint16_t e) { return {e}; }
    bool is_coastal() const { return id == kCoastal; }
    std::string to_string() const;
    static Source parse(std::string_view s);

    friend auto operator<=>(const Source&, const Source&) = default;
};

struct StoredPoint {
    AisRecord record;
    Source source;

    friend bool operator==(const StoredPoint&, const StoredPoint&) = default;
};

class ReconstructedStore {
public:
    /// Inserts with the duplicate rule: for one (vessel, timestamp) the
    /// higher-ranked source wins. Returns false when the point was a duplicate.
    bool add(const AisRecord& record, Source source);
    void add_packet(const wire::DecodedPacket& packet);
    void add_coastal(std::span<const AisRecord> records);

    std::size_t size() const;
    std::size_t duplicates() const { return duplicates_; }
    std::size_t anomaly_count() const;
    bool contains(VesselId vessel, Timestamp t) const;

    const std::map<VesselId, std::map<Timestamp, StoredPoint>>& vessels() const { return vessels_; }
    /// Packets received per window and far edge.
    const std::map<std::int64_t, std::map<std::uint16_t, std::size_t>>& receipts() const { return receipts_; }

    std::vector<Trajectory> trajectories() const;
    std::vector<AisRecord> records() const;

    /// Point content only; receipts and duplicate counters are run bookkeeping.
    friend bool operator==(const ReconstructedStore& a, const ReconstructedStore& b) { return a.vessels_ == b.vessels_; }

private:
    std::map<VesselId, std::map<Timestamp, StoredPoint>> vessels_;
    std::map<std::int64_t, std::map<std::uint16_t, std::size_t>> receipts_;
    std::size_t duplicates_ = 0;
};

/// Deterministic for any arrival order of the same packets and coastal records.
ReconstructedStore merge(std::span<const wire::DecodedPacket> packets, std::span<const AisRecord> coastal = {});

/// Copy of the store with every anomaly bit replaced by the detector's verdict.
/// Throws Error{StateError} for an uncalibrated model.
ReconstructedStore redetect(const ReconstructedStore& store, const anomaly::PrototypeModel& model);

struct MetricsRow {
    double fraction = 1.0;
    std::string algorithm;
    double avg_distortion_m = 0.0;
    std::size_t anomalies_retained = 0;
    std::size_t anomalies_redetected = 0;
    std::size_t total_records = 0;
    std::size_t total_anomalies = 0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct EvaluateOptions {
    double fraction = 1.0;
    std::string algorithm = "bwc-dr";
    std::size_t floor = 1;
    /// When set, anomalies are re-detected on the reconstructed points.
    const anomaly::PrototypeModel* model = nullptr;
};

/// `originals` are the cleaned, detector-flagged pre-compression records.
/// Vessels without any stored point are an error when floor >= 1 and are left
/// out of the distortion average when floor = 0.
MetricsRow evaluate(std::span<const AisRecord> originals, const ReconstructedStore& store,
                    const EvaluateOptions& options);

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows);
void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Appends the store to a CSV record log, writing the header when the file is new or empty.
void persist(const ReconstructedStore& store, const std::filesystem::path& path);
/// Replays a record log with the duplicate rule. Throws Error{FormatError}
/// naming the line on malformed rows, Error{IoError} when unreadable.
ReconstructedStore load(const std::filesystem::path& path);

} // namespace vesseledge::near_edge
