#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "vesseledge/anomaly.hpp"
#include "vesseledge/core.hpp"

namespace vesseledge::compression {

/// All records of one tumbling window, one time-ordered trajectory per vessel,
/// vessels in ascending MMSI order.
struct WindowBatch {
    TimeWindow window;
    std::vector<Trajectory> vessels;

    std::size_t point_count() const;
};

/// Groups cleaned records into windows (ascending index). Throws
/// Error{InvalidArgument} on a repeated (vessel, timestamp).
std::vector<WindowBatch> make_batches(std::span<const AisRecord> records,
                                      std::int64_t window_seconds = kDefaultWindowSeconds);

struct BudgetSpec {
    double fraction = 0.1;
    std::size_t floor = 1;
    double boost = 4.0;

    void validate() const;
    /// max(round(fraction * points), vessels * floor), capped at points.
    std::size_t budget(std::size_t points, std::size_t vessels) const;
};

struct PrioritizedPoint {
    AisRecord record;
    double priority = 0.0;
    bool boosted = false;
};

struct SelectionResult {
    std::vector<Trajectory> kept;  // same vessel order as the input, time-ordered
    std::size_t input_count = 0;
    std::size_t budget = 0;
    std::size_t dropped_count = 0;
    double realized_fraction = 1.0;

    std::size_t kept_count() const { return input_count - dropped_count; }
    std::vector<AisRecord> flatten() const;

    friend bool operator==(const SelectionResult&, const SelectionResult&) = default;
};

enum class Algorithm { BwcDr, BwcDrA };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view s);

/// Classic dead reckoning: keep a point when the prediction from the last
/// kept point misses it by more than `threshold_m`.
SelectionResult dr_simplify(const Trajectory& trajectory, double threshold_m);

/// Synchronized deviation of every point from the segment joining its
/// neighbours; endpoints and lone points are +inf.
std::vector<double> base_priority(const Trajectory& trajectory);

/// Priorities with the anomaly boost applied to finite values of boosted vessels.
std::vector<PrioritizedPoint> prioritize(const WindowBatch& batch, const std::set<VesselId>& boosted,
                                         double boost = 4.0);

/// Last point of each vessel already retained in earlier windows. When a vessel
/// has one, its first point in the window is scored against it like an interior
/// point, and its last point by the dead-reckoning miss from its retained
/// predecessor. Vessels without one keep protected (+inf) endpoints.
using Retained = std::map<VesselId, AisRecord>;

/// Distance between `p` and the position dead-reckoned from `from` (sog/cog) to p's time.
double dr_deviation(const AisRecord& from, const AisRecord& p);

SelectionResult bwc_dr(const WindowBatch& batch, const BudgetSpec& budget, const Retained& retained = {});

/// `current_flags` are vessels flagged within this window itself.
SelectionResult bwc_dr_a(const WindowBatch& batch, const BudgetSpec& budget, const anomaly::AnomalyHistory& history,
                         const std::set<VesselId>& current_flags = {}, const Retained& retained = {});

/// Greedy elimination with an explicit boosted-vessel set; bwc_dr and bwc_dr_a
/// are thin wrappers. `scale` multiplies every finite priority.
SelectionResult select(const WindowBatch& batch, const BudgetSpec& budget, const std::set<VesselId>& boosted,
                       double scale = 1.0, const Retained& retained = {});

/// Window-after-window compression as run on a far-edge device: keeps the
/// retained points and the anomaly history between calls. Windows must arrive
/// in increasing index order.
class StreamCompressor {
public:
    StreamCompressor(Algorithm algorithm, BudgetSpec budget, std::size_t history_depth = 3);

    /// `flagged` are the vessels with an anomalous record in this window.
    SelectionResult push(const WindowBatch& batch, const std::set<VesselId>& flagged = {});

    const Retained& retained() const { return retained_; }

private:
    Algorithm algorithm_;
    BudgetSpec budget_;
    anomaly::AnomalyHistory history_;
    Retained retained_;
    std::optional<std::int64_t> last_index_;
};

struct DistortionSum {
    double sum_m = 0.0;
    std::size_t points = 0;
};

/// Per-vessel synchronized distance between an original trajectory and the
/// trajectory rebuilt from `kept`. Kept timestamps must be a subset of the original's.
DistortionSum distortion_sum(const Trajectory& original, const Trajectory& kept);

/// Mean over all original points of all vessels. Every vessel with original
/// points must have at least one kept point.
double distortion_m(std::span<const Trajectory> originals, std::span<const Trajectory> kept);

/// Vessels with at least one anomalous record, per window index.
std::map<std::int64_t, std::set<VesselId>> window_flags(std::span<const AisRecord> records,
                                                        std::int64_t window_seconds = kDefaultWindowSeconds);

/// History as seen by window `index`: flags of the three preceding windows.
anomaly::AnomalyHistory history_before(const std::map<std::int64_t, std::set<VesselId>>& flags, std::int64_t index,
                                       std::size_t depth = 3);

} // namespace vesseledge::compression
