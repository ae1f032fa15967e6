#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vesseledge/core.hpp"

namespace vesseledge::anomaly {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using CellId = std::int64_t;

inline constexpr int kFeatureDim = 3;
inline constexpr double kMinScore = std::numeric_limits<double>::lowest();

struct ModelConfig {
    double cell_size_deg = 0.01;
    int components = 3;              // K
    int em_iterations = 100;
    double em_tolerance = 1e-7;      // relative log-likelihood change
    std::uint64_t seed = 42;
    double covariance_floor = 1e-4;  // minimum covariance eigenvalue
    std::size_t min_samples_full = 50;  // below this a cell gets one diagonal component
};

struct Component {
    double weight = 1.0;
    Vec3 mean = Vec3::Zero();
    Mat3 cov = Mat3::Identity();
};

struct CellPrototype {
    std::vector<Component> components;
    std::uint64_t sample_count = 0;
};

/// Movement features: (sog knots, sin cog, cos cog). Unknown course maps to (0, 0).
Vec3 features(const AisRecord& record);

/// Row-major 0.01-degree style grid index over lat/lon.
CellId cell_of(double lat, double lon, double cell_size_deg);

/// Per-cell Gaussian mixtures over movement features.
///
/// Writers (train, update, federate, calibrate_threshold) need exclusive
/// access; score and flag only read, so concurrent readers are fine.
class PrototypeModel {
public:
    PrototypeModel() = default;
    explicit PrototypeModel(ModelConfig config) : config_(config) {}

    const ModelConfig& config() const { return config_; }
    const std::map<CellId, CellPrototype>& cells() const { return cells_; }
    std::map<CellId, CellPrototype>& cells() { return cells_; }
    const CellPrototype* find(CellId id) const;

    std::uint64_t trained_count() const { return trained_count_; }
    void set_trained_count(std::uint64_t n) { trained_count_ = n; }

    std::optional<double> score_threshold() const { return threshold_; }
    void set_score_threshold(std::optional<double> t) { threshold_ = t; }

    bool empty() const { return cells_.empty(); }

private:
    ModelConfig config_;
    std::map<CellId, CellPrototype> cells_;
    std::uint64_t trained_count_ = 0;
    std::optional<double> threshold_;
};

/// Fits one mixture per populated cell with k-means++ seeded EM. Throws
/// Error{EmptyModel} when `records` is empty.
PrototypeModel train(std::span<const AisRecord> records, const ModelConfig& config = {});

/// Online EM step folding one record into its cell.
void update(PrototypeModel& model, const AisRecord& record);

/// Log mixture density of the record's features in its cell; kMinScore for unseen cells.
double score(const PrototypeModel& model, const AisRecord& record);

/// Sets the threshold so that ceil(q% of holdout) scores lie at or below it.
/// Holdout records in cells the model has never seen are left out of the count.
void calibrate_threshold(PrototypeModel& model, std::span<const AisRecord> holdout, double quantile_percent = 1.0);

/// score < threshold. Throws Error{StateError} when the model is uncalibrated.
bool flag(const PrototypeModel& model, const AisRecord& record);

/// Cell-wise union; shared cells are pooled and reduced back to K components by
/// moment-matching the closest pairs. `weights`, when given, are the per-model
/// sample counts used to weight each model's evidence.
PrototypeModel federate(std::span<const PrototypeModel> models, std::span<const double> weights = {});

std::vector<std::uint8_t> serialize(const PrototypeModel& model);
PrototypeModel deserialize(std::span<const std::uint8_t> bytes);

void save(const PrototypeModel& model, const std::filesystem::path& path);
PrototypeModel load(const std::filesystem::path& path);

/// Anomaly flags of the most recent completed windows, per vessel.
class AnomalyHistory {
public:
    explicit AnomalyHistory(std::size_t depth = 3) : depth_(depth) {}

    /// Records the vessels flagged in a completed window.
    void record_window(std::int64_t window_index, const std::set<VesselId>& flagged);

    /// True when `vessel` was flagged in one of the `depth` windows before `current_window`.
    bool flagged_recently(VesselId vessel, std::int64_t current_window) const;

    std::size_t depth() const { return depth_; }

private:
    std::size_t depth_;
    std::map<VesselId, std::deque<std::int64_t>> flagged_windows_;
};

namespace detail {

/// log N(x; mean, cov) via Cholesky.
double log_gaussian(const Vec3& x, const Vec3& mean, const Mat3& cov);

/// Clamps covariance eigenvalues from below and re-symmetrizes.
Mat3 regularize(const Mat3& cov, double floor);

} // namespace detail

} // namespace vesseledge::anomaly
