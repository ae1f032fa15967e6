#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "vesseledge/anomaly.hpp"
#include "vesseledge/compression.hpp"

// Hot loops of the batch pipeline in two flavours: a plain serial reference and
// an OpenMP version. Both produce bit-identical results; tests compare them
// and bench/ measures the difference.
namespace vesseledge::kernels {

enum class Exec { Serial, Parallel };

std::vector<double> score_records(std::span<const AisRecord> records, const anomaly::PrototypeModel& model, Exec exec);

/// One byte per record, 1 when flagged. Throws Error{StateError} on an uncalibrated model.
std::vector<std::uint8_t> flag_records(std::span<const AisRecord> records, const anomaly::PrototypeModel& model,
                                       Exec exec);

using WindowFlags = std::map<std::int64_t, std::set<VesselId>>;

/// Streams the windows (ascending index) through one StreamCompressor. For
/// BWC-DR-A the boost of window w uses `flags` of the `history_depth` windows
/// before w and of w itself.
std::vector<compression::SelectionResult> compress_windows(std::span<const compression::WindowBatch> batches,
                                                           const compression::BudgetSpec& budget,
                                                           compression::Algorithm algorithm, const WindowFlags& flags,
                                                           std::size_t history_depth);

struct RunSpec {
    compression::Algorithm algorithm = compression::Algorithm::BwcDr;
    compression::BudgetSpec budget;
};

/// One compress_windows per run; runs are independent and the parallel
/// flavour spreads them over threads.
std::vector<std::vector<compression::SelectionResult>> compress_runs(std::span<const compression::WindowBatch> batches,
                                                                     std::span<const RunSpec> runs,
                                                                     const WindowFlags& flags,
                                                                     std::size_t history_depth, Exec exec);

/// Mean synchronized distortion; per-vessel sums are reduced in vessel order.
double distortion(std::span<const Trajectory> originals, std::span<const Trajectory> kept, Exec exec);

int max_threads();

} // namespace vesseledge::kernels
