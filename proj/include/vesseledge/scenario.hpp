#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vesseledge/ais.hpp"
#include "vesseledge/anomaly.hpp"
#include "vesseledge/compression.hpp"
#include "vesseledge/near_edge.hpp"
#include "vesseledge/wire.hpp"

// Experiment configuration and the batch replay / sweep drivers.
namespace vesseledge::scenario {

inline constexpr int kConfigVersion = 1;
inline constexpr std::string_view kVersion = "0.1.0";

struct LiveConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 5151;
    std::size_t queue = 64;              // packets per bounded queue
    std::size_t metrics_every = 120;     // windows between near-edge metric snapshots
    double heartbeat_s = 5.0;
    double connect_timeout_s = 10.0;     // far edge gives up reconnecting after this long
    std::int64_t lateness_s = 600;       // a window closes once input time passes its end by this much
    std::size_t run = 0;                 // index into the (algorithm, fraction) runs used live
};

/// One experiment. Relative paths are resolved against the config file's directory.
struct ScenarioConfig {
    int version = kConfigVersion;

    ais::InputFormat input_format = ais::InputFormat::DmaCsv;
    std::filesystem::path input;
    std::int64_t stale_s = ais::kDefaultStaleSeconds;

    std::vector<std::filesystem::path> train;
    ais::InputFormat train_format = ais::InputFormat::DmaCsv;
    std::filesystem::path holdout;
    std::filesystem::path model;
    double quantile = 1.0;
    double cell_size_deg = 0.01;
    std::size_t components = 3;

    std::int64_t window_s = kDefaultWindowSeconds;
    std::vector<double> fractions{0.1, 0.25, 0.5};
    std::vector<compression::Algorithm> algorithms{compression::Algorithm::BwcDr, compression::Algorithm::BwcDrA};
    double boost = 4.0;
    std::size_t history_depth = 3;
    std::size_t floor = 1;

    wire::ChannelSpec channel;
    std::uint16_t edge_id = 1;

    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 1;

    LiveConfig live;

    /// Throws Error{ConfigError}.
    void validate() const;

    anomaly::ModelConfig model_config() const;
    compression::BudgetSpec budget(double fraction) const;

    /// (algorithm, fraction) pairs in run order: fractions ascending, algorithms as listed.
    struct Run {
        compression::Algorithm algorithm;
        double fraction;
    };
    std::vector<Run> runs() const;
};

/// Parses the INI-style "key = value" text with [sections]. Unknown keys are errors.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Applies one "section.key=value" override.
void apply_override(ScenarioConfig& config, std::string_view assignment, const std::filesystem::path& base_dir = {});

/// Canonical text form; parse_config(to_text(c)) == c up to path resolution.
std::string to_text(const ScenarioConfig& config);

/// A stage failure: which stage, what it had counted so far, and the cause.
class StageError : public Error {
public:
    StageError(std::string stage, ErrorKind cause, const std::string& what, nlohmann::json counts);

    const std::string& stage() const { return stage_; }
    ErrorKind cause() const { return cause_; }
    const nlohmann::json& counts() const { return counts_; }

private:
    std::string stage_;
    ErrorKind cause_;
    nlohmann::json counts_;
};

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitInput = 3,
    kExitPipeline = 4,
    kExitProperty = 5,
};

int exit_code_for(const std::exception& e);

std::string file_crc32(const std::filesystem::path& path);

/// Loads, or trains and calibrates, the detector described by the config.
anomaly::PrototypeModel prepare_model(const ScenarioConfig& config, nlohmann::json* counts = nullptr);

struct RunOutput {
    near_edge::MetricsRow metrics;
    near_edge::ReconstructedStore store;
    std::size_t packets_offered = 0;
    std::size_t packets_dropped = 0;
    std::size_t packets_corrupt = 0;
    std::size_t bytes_offered = 0;
};

struct ReplayResult {
    std::vector<RunOutput> runs;      // in ScenarioConfig::runs() order
    nlohmann::json manifest;
    bool monotonic = true;            // distortion non-increasing in the fraction, per algorithm
    bool strictly_decreasing = true;
};

/// Full pipeline once per (algorithm, fraction) pair. Writes metrics.csv,
/// clean_report.csv, one store log per run and manifest.json into out_dir.
ReplayResult run_replay(const ScenarioConfig& config);

/// run_replay over `fractions` (sorted ascending, duplicates removed) with
/// the monotonicity check recorded in the manifest.
ReplayResult sweep(ScenarioConfig config, std::vector<double> fractions);

std::string store_file_name(compression::Algorithm algorithm, double fraction);

/// Distortion per fraction must not increase (strict: must decrease) for every algorithm.
bool check_monotonic(const std::vector<near_edge::MetricsRow>& rows, bool strict);

} // namespace vesseledge::scenario
