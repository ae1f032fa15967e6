#include "vesseledge/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <cctype>
#include <sstream>

#include <zlib.h>

#include "CLI11.hpp"
#include "vesseledge/csv.hpp"
#include "vesseledge/kernels.hpp"

namespace vesseledge::scenario {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error config_error(const std::string& what) { return Error(ErrorKind::ConfigError, what); }

std::string format_name(ais::InputFormat f) { return f == ais::InputFormat::Nmea ? "nmea" : "dma-csv"; }

ais::InputFormat parse_format(std::string_view s) {
    if (s == "nmea")
        return ais::InputFormat::Nmea;
    if (s == "dma-csv" || s == "dma" || s == "csv")
        return ais::InputFormat::DmaCsv;
    throw config_error("unknown input format '" + std::string(s) + "' (expected dma-csv or nmea)");
}

double to_double(const std::string& key, std::string_view v) {
    try {
        return csv::parse_double(v);
    } catch (const Error&) {
        throw config_error(key + ": not a number: '" + std::string(v) + "'");
    }
}

std::int64_t to_int(const std::string& key, std::string_view v) {
    try {
        return csv::parse_int(v);
    } catch (const Error&) {
        throw config_error(key + ": not an integer: '" + std::string(v) + "'");
    }
}

std::size_t to_size(const std::string& key, std::string_view v) {
    const auto n = to_int(key, v);
    if (n < 0)
        throw config_error(key + " must be non-negative");
    return static_cast<std::size_t>(n);
}

// CLI11 splits list values on blanks; commas are accepted as well.
std::vector<std::string> split_list(const std::vector<std::string>& inputs) {
    std::vector<std::string> out;
    for (const auto& in : inputs) {
        std::string cur;
        for (char c : in) {
            if (c == ',') {
                if (auto t = csv::trim(cur); !t.empty())
                    out.emplace_back(t);
                cur.clear();
            } else {
                cur += c;
            }
        }
        if (auto t = csv::trim(cur); !t.empty())
            out.emplace_back(t);
    }
    return out;
}

fs::path resolve(const fs::path& base, const std::string& v) {
    if (v.empty())
        return {};
    fs::path p(v);
    return p.is_relative() && !base.empty() && v != "-" ? base / p : p;
}

using Setter = std::function<void(ScenarioConfig&, const std::vector<std::string>&, const fs::path&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto scalar = [](const std::string& key, const std::vector<std::string>& in) {
            if (in.size() != 1)
                throw config_error(key + " takes one value (quote values containing blanks)");
            return std::string(csv::trim(in.front()));
        };
        auto add = [&](const std::string& key, std::function<void(ScenarioConfig&, const std::string&, const fs::path&)> f) {
            t[key] = [key, f, scalar](ScenarioConfig& c, const std::vector<std::string>& in, const fs::path& base) {
                f(c, scalar(key, in), base);
            };
        };
        add("version", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.version = static_cast<int>(to_int("version", v));
        });
        add("input.format", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.input_format = parse_format(v); });
        add("input.path", [](ScenarioConfig& c, const std::string& v, const fs::path& b) { c.input = resolve(b, v); });
        add("input.stale_s", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.stale_s = to_int("input.stale_s", v); });
        t["training.train"] = [](ScenarioConfig& c, const std::vector<std::string>& in, const fs::path& b) {
            c.train.clear();
            for (const auto& v : split_list(in))
                c.train.push_back(resolve(b, v));
        };
        add("training.format", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.train_format = parse_format(v); });
        add("training.holdout", [](ScenarioConfig& c, const std::string& v, const fs::path& b) { c.holdout = resolve(b, v); });
        add("training.model", [](ScenarioConfig& c, const std::string& v, const fs::path& b) { c.model = resolve(b, v); });
        add("training.quantile", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.quantile = to_double("training.quantile", v); });
        add("training.cell_size_deg", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.cell_size_deg = to_double("training.cell_size_deg", v);
        });
        add("training.components", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.components = to_size("training.components", v);
        });
        add("compression.window_s", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.window_s = to_int("compression.window_s", v);
        });
        t["compression.fractions"] = [](ScenarioConfig& c, const std::vector<std::string>& in, const fs::path&) {
            c.fractions.clear();
            for (const auto& v : split_list(in))
                c.fractions.push_back(to_double("compression.fractions", v));
        };
        t["compression.algorithms"] = [](ScenarioConfig& c, const std::vector<std::string>& in, const fs::path&) {
            c.algorithms.clear();
            for (const auto& v : split_list(in))
                c.algorithms.push_back(compression::parse_algorithm(v));
        };
        add("compression.boost", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.boost = to_double("compression.boost", v); });
        add("compression.history_depth", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.history_depth = to_size("compression.history_depth", v);
        });
        add("compression.floor", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.floor = to_size("compression.floor", v); });
        add("channel.bitrate", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.channel.bitrate = to_double("channel.bitrate", v);
        });
        add("channel.latency", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.channel.latency = to_double("channel.latency", v);
        });
        add("channel.queue_bytes", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.channel.queue_bytes = to_size("channel.queue_bytes", v);
        });
        add("channel.corrupt_probability", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.channel.corrupt_probability = to_double("channel.corrupt_probability", v);
        });
        add("channel.edge_id", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            const auto id = to_int("channel.edge_id", v);
            if (id < 0 || id > 0xFFFF)
                throw config_error("channel.edge_id must fit in 16 bits");
            c.edge_id = static_cast<std::uint16_t>(id);
        });
        add("output.dir", [](ScenarioConfig& c, const std::string& v, const fs::path& b) { c.out_dir = resolve(b, v); });
        add("run.seed", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.seed = static_cast<std::uint64_t>(to_int("run.seed", v));
        });
        add("live.host", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.live.host = v; });
        add("live.port", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            const auto p = to_int("live.port", v);
            if (p < 0 || p > 0xFFFF)
                throw config_error("live.port out of range");
            c.live.port = static_cast<std::uint16_t>(p);
        });
        add("live.queue", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.live.queue = to_size("live.queue", v); });
        add("live.metrics_every", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.live.metrics_every = to_size("live.metrics_every", v);
        });
        add("live.heartbeat_s", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.live.heartbeat_s = to_double("live.heartbeat_s", v);
        });
        add("live.connect_timeout_s", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.live.connect_timeout_s = to_double("live.connect_timeout_s", v);
        });
        add("live.lateness_s", [](ScenarioConfig& c, const std::string& v, const fs::path&) {
            c.live.lateness_s = to_int("live.lateness_s", v);
        });
        add("live.run", [](ScenarioConfig& c, const std::string& v, const fs::path&) { c.live.run = to_size("live.run", v); });
        return t;
    }();
    return table;
}

void set_key(ScenarioConfig& c, const std::string& key, const std::vector<std::string>& inputs, const fs::path& base) {
    const auto& t = setters();
    auto it = t.find(key);
    if (it == t.end())
        throw config_error("unknown configuration key '" + key + "'");
    it->second(c, inputs, base);
}

std::string join_paths(const std::vector<fs::path>& ps) {
    std::string out;
    for (const auto& p : ps)
        out += (out.empty() ? "" : ", ") + p.string();
    return out;
}

json report_json(const ais::CleanReport& r) {
    json j{{"records_in", r.records_in}, {"records_out", r.records_out}};
    for (std::size_t i = 0; i < ais::kRejectReasons; ++i)
        j["rejected_" + std::string(ais::to_string(static_cast<ais::Reject>(i)))] = r.rejected[i];
    return j;
}

class Stopwatch {
public:
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

template <class F>
auto in_stage(const std::string& name, const json& counts, F&& f) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e.kind(), e.what(), counts);
    }
}

} // namespace

// ---------------------------------------------------------------------------

void ScenarioConfig::validate() const {
    if (version != kConfigVersion)
        throw config_error("unsupported config version " + std::to_string(version));
    if (window_s <= 0 || window_s > wire::kMaxWindowSeconds)
        throw config_error("compression.window_s must be in [1, 255]");
    if (fractions.empty())
        throw config_error("compression.fractions is empty");
    for (double f : fractions)
        if (!(f > 0.0 && f <= 1.0))
            throw config_error("fractions must lie in (0, 1]");
    if (algorithms.empty())
        throw config_error("compression.algorithms is empty");
    if (!(boost > 0.0) || !std::isfinite(boost))
        throw config_error("compression.boost must be positive");
    if (!(quantile >= 0.0 && quantile <= 100.0))
        throw config_error("training.quantile must lie in [0, 100]");
    if (stale_s <= 0)
        throw config_error("input.stale_s must be positive");
    if (live.queue == 0)
        throw config_error("live.queue must be positive");
    if (live.lateness_s < 0)
        throw config_error("live.lateness_s must be non-negative");
    if (!(cell_size_deg > 0.0) || components < 1 || components > 255)
        throw config_error("training.cell_size_deg must be positive and training.components in [1, 255]");
    try {
        channel.validate();
    } catch (const Error& e) {
        throw config_error(e.what());
    }
}

anomaly::ModelConfig ScenarioConfig::model_config() const {
    anomaly::ModelConfig m;
    m.cell_size_deg = cell_size_deg;
    m.components = components;
    m.seed = seed;
    return m;
}

compression::BudgetSpec ScenarioConfig::budget(double fraction) const {
    compression::BudgetSpec b;
    b.fraction = fraction;
    b.floor = floor;
    b.boost = boost;
    return b;
}

std::vector<ScenarioConfig::Run> ScenarioConfig::runs() const {
    auto fs_sorted = fractions;
    std::sort(fs_sorted.begin(), fs_sorted.end());
    fs_sorted.erase(std::unique(fs_sorted.begin(), fs_sorted.end()), fs_sorted.end());
    std::vector<Run> out;
    for (double f : fs_sorted)
        for (auto a : algorithms)
            out.push_back({a, f});
    return out;
}

// Drops "  # note" / "  ; note" tails outside quotes; the INI reader only knows whole-line comments.
std::string strip_inline_comments(std::istream& in) {
    std::string out, line;
    while (std::getline(in, line)) {
        char quote = 0;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char ch = line[i];
            if (quote) {
                quote = ch == quote ? 0 : quote;
            } else if (ch == '"' || ch == '\'') {
                quote = ch;
            } else if ((ch == '#' || ch == ';') && i > 0 && std::isspace(static_cast<unsigned char>(line[i - 1]))) {
                line.resize(i);
                break;
            }
        }
        out += line;
        out += '\n';
    }
    return out;
}

ScenarioConfig parse_config(std::istream& in, const fs::path& base_dir) {
    ScenarioConfig c;
    std::vector<CLI::ConfigItem> items;
    try {
        std::istringstream text(strip_inline_comments(in));
        items = CLI::ConfigINI().from_config(text);
    } catch (const CLI::Error& e) {
        throw config_error(std::string("malformed config: ") + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--")
            continue;
        if (item.parents.size() > 1)
            throw config_error("nested sections are not supported");
        const std::string key = item.parents.empty() ? item.name : item.parents.front() + "." + item.name;
        set_key(c, key, item.inputs, base_dir);
    }
    c.validate();
    return c;
}

ScenarioConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot read config " + path.string());
    return parse_config(in, path.parent_path());
}

void apply_override(ScenarioConfig& config, std::string_view assignment, const fs::path& base_dir) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw config_error("override must look like section.key=value: '" + std::string(assignment) + "'");
    const std::string key(csv::trim(assignment.substr(0, eq)));
    const std::string value(csv::trim(assignment.substr(eq + 1)));
    std::vector<std::string> inputs{value};
    if (key == "compression.fractions" || key == "compression.algorithms" || key == "training.train")
        inputs = split_list({value});
    set_key(config, key, inputs, base_dir);
    config.validate();
}

std::string to_text(const ScenarioConfig& c) {
    std::ostringstream o;
    auto q = [](const fs::path& p) { return "\"" + p.string() + "\""; };
    std::string fr, al;
    for (double f : c.fractions)
        fr += (fr.empty() ? "" : ", ") + csv::format_double(f);
    for (auto a : c.algorithms)
        al += (al.empty() ? "" : ", ") + std::string(compression::to_string(a));
    o << "version = " << c.version << "\n\n"
      << "[input]\nformat = " << format_name(c.input_format) << "\npath = " << q(c.input) << "\nstale_s = " << c.stale_s
      << "\n\n"
      << "[training]\ntrain = \"" << join_paths(c.train) << "\"\nformat = " << format_name(c.train_format)
      << "\nholdout = " << q(c.holdout) << "\nmodel = " << q(c.model) << "\nquantile = " << csv::format_double(c.quantile)
      << "\ncell_size_deg = " << csv::format_double(c.cell_size_deg) << "\ncomponents = " << c.components << "\n\n"
      << "[compression]\nwindow_s = " << c.window_s << "\nfractions = \"" << fr << "\"\nalgorithms = \"" << al
      << "\"\nboost = " << csv::format_double(c.boost) << "\nhistory_depth = " << c.history_depth
      << "\nfloor = " << c.floor << "\n\n"
      << "[channel]\nbitrate = " << csv::format_double(c.channel.bitrate)
      << "\nlatency = " << csv::format_double(c.channel.latency) << "\nqueue_bytes = " << c.channel.queue_bytes
      << "\ncorrupt_probability = " << csv::format_double(c.channel.corrupt_probability) << "\nedge_id = " << c.edge_id
      << "\n\n"
      << "[output]\ndir = " << q(c.out_dir) << "\n\n"
      << "[run]\nseed = " << c.seed << "\n\n"
      << "[live]\nhost = " << c.live.host << "\nport = " << c.live.port << "\nqueue = " << c.live.queue
      << "\nmetrics_every = " << c.live.metrics_every << "\nheartbeat_s = " << csv::format_double(c.live.heartbeat_s)
      << "\nconnect_timeout_s = " << csv::format_double(c.live.connect_timeout_s)
      << "\nlateness_s = " << c.live.lateness_s << "\nrun = " << c.live.run << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------

StageError::StageError(std::string stage, ErrorKind cause, const std::string& what, json counts)
    : Error(cause, "stage '" + stage + "' failed (counts so far: " + counts.dump() + "): " + what),
      stage_(std::move(stage)), cause_(cause), counts_(std::move(counts)) {}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const CLI::Error*>(&e))
        return kExitConfig;
    const auto* err = dynamic_cast<const Error*>(&e);
    if (!err)
        return kExitPipeline;
    if (err->kind() == ErrorKind::ConfigError)
        return kExitConfig;
    std::string stage;
    if (const auto* s = dynamic_cast<const StageError*>(&e))
        stage = s->stage();
    switch (err->kind()) {
    case ErrorKind::IoError:
        return kExitInput;
    case ErrorKind::FormatError:
    case ErrorKind::ParseError:
    case ErrorKind::ChecksumError:
    case ErrorKind::EmptyModel:
        return stage.empty() || stage == "ingest" || stage == "model" ? kExitInput : kExitPipeline;
    default:
        return kExitPipeline;
    }
}

std::string file_crc32(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot read " + path.string());
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        const auto n = in.gcount();
        if (n > 0)
            crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
    }
    char out[9];
    std::snprintf(out, sizeof out, "%08lx", static_cast<unsigned long>(crc));
    return out;
}

anomaly::PrototypeModel prepare_model(const ScenarioConfig& config, json* counts) {
    anomaly::PrototypeModel model;
    if (!config.train.empty()) {
        std::vector<AisRecord> records;
        for (const auto& p : config.train) {
            auto r = ais::ingest_file(p, config.train_format, config.stale_s);
            records.insert(records.end(), r.records.begin(), r.records.end());
        }
        model = anomaly::train(records, config.model_config());
        if (config.holdout.empty()) {
            anomaly::calibrate_threshold(model, records, config.quantile);
        } else {
            const auto h = ais::ingest_file(config.holdout, config.train_format, config.stale_s);
            anomaly::calibrate_threshold(model, h.records, config.quantile);
        }
        if (counts)
            (*counts)["training_records"] = records.size();
    } else if (!config.model.empty()) {
        model = anomaly::load(config.model);
        if (!config.holdout.empty()) {
            const auto h = ais::ingest_file(config.holdout, config.train_format, config.stale_s);
            anomaly::calibrate_threshold(model, h.records, config.quantile);
        }
        if (!model.score_threshold())
            throw config_error("model " + config.model.string() + " carries no threshold and no holdout is configured");
    } else {
        throw config_error("configure training.train or training.model");
    }
    if (counts) {
        (*counts)["model_cells"] = model.cells().size();
        (*counts)["model_trained_records"] = model.trained_count();
    }
    return model;
}

std::string store_file_name(compression::Algorithm algorithm, double fraction) {
    return "store_" + std::string(compression::to_string(algorithm)) + "_" + csv::format_double(fraction) + ".csv";
}

bool check_monotonic(const std::vector<near_edge::MetricsRow>& rows, bool strict) {
    std::map<std::string, std::vector<std::pair<double, double>>> by_alg;
    for (const auto& r : rows)
        by_alg[r.algorithm].emplace_back(r.fraction, r.avg_distortion_m);
    for (auto& [a, v] : by_alg) {
        std::sort(v.begin(), v.end());
        for (std::size_t i = 1; i < v.size(); ++i)
            if (strict ? !(v[i].second < v[i - 1].second) : v[i].second > v[i - 1].second)
                return false;
    }
    return true;
}

ReplayResult run_replay(const ScenarioConfig& config) {
    config.validate();
    ReplayResult result;
    json counts = json::object();
    json timings = json::object();
    Stopwatch clock;

    auto ingest = in_stage("ingest", counts, [&] {
        if (config.input.empty())
            throw config_error("input.path is not set");
        return ais::ingest_file(config.input, config.input_format, config.stale_s);
    });
    counts["ingest"] = report_json(ingest.report);
    timings["ingest"] = clock.lap();
    if (ingest.records.empty())
        throw StageError("ingest", ErrorKind::FormatError, "no usable records in " + config.input.string(), counts);

    json model_counts = json::object();
    const auto model = in_stage("model", counts, [&] { return prepare_model(config, &model_counts); });
    counts["model"] = model_counts;
    timings["model"] = clock.lap();

    auto& records = ingest.records;
    in_stage("detect", counts, [&] {
        const auto flags = kernels::flag_records(records, model, kernels::Exec::Parallel);
        std::set<VesselId> vessels;
        std::size_t flagged = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            records[i].anomaly = flags[i] != 0;
            if (flags[i]) {
                ++flagged;
                vessels.insert(records[i].vessel);
            }
        }
        counts["detect"] = {{"flagged_records", flagged}, {"flagged_vessels", vessels.size()}};
        return 0;
    });
    timings["detect"] = clock.lap();

    const auto batches = in_stage("window", counts, [&] { return compression::make_batches(records, config.window_s); });
    const auto flags = compression::window_flags(records, config.window_s);
    counts["windows"] = batches.size();

    const auto runs = config.runs();
    std::vector<kernels::RunSpec> specs;
    for (const auto& r : runs)
        specs.push_back({r.algorithm, config.budget(r.fraction)});
    const auto selections = in_stage("compress", counts, [&] {
        return kernels::compress_runs(batches, specs, flags, config.history_depth, kernels::Exec::Parallel);
    });
    timings["compress"] = clock.lap();

    wire::ChannelSpec channel = config.channel;
    channel.seed = config.seed;
    json run_counts = json::array();
    const Timestamp origin = batches.front().window.start;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        RunOutput out;
        std::vector<wire::TimedPacket> packets;
        in_stage("link", counts, [&] {
            for (std::size_t i = 0; i < batches.size(); ++i) {
                packets.push_back({static_cast<double>(batches[i].window.end() - origin),
                                   wire::encode(selections[k][i], batches[i].window, config.edge_id)});
                out.bytes_offered += packets.back().bytes.size();
            }
            const auto sent = wire::channel_transmit(packets, channel);
            out.packets_offered = sent.offered;
            out.packets_dropped = sent.dropped.size();
            std::vector<wire::DecodedPacket> decoded;
            for (const auto& p : sent.delivered_packets(packets)) {
                try {
                    decoded.push_back(wire::decode(p.bytes, config.window_s));
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::CorruptPacket && e.kind() != ErrorKind::TruncatedPacket)
                        throw;
                    ++out.packets_corrupt;
                }
            }
            out.store = near_edge::merge(decoded, {});
            return 0;
        });
        out.metrics = in_stage("evaluate", counts, [&] {
            near_edge::EvaluateOptions opts;
            opts.fraction = runs[k].fraction;
            opts.algorithm = std::string(compression::to_string(runs[k].algorithm));
            opts.floor = config.floor;
            opts.model = &model;
            return near_edge::evaluate(records, out.store, opts);
        });
        std::size_t kept = 0;
        for (const auto& s : selections[k])
            kept += s.kept_count();
        run_counts.push_back({{"algorithm", compression::to_string(runs[k].algorithm)},
                              {"fraction", runs[k].fraction},
                              {"kept_points", kept},
                              {"packets_offered", out.packets_offered},
                              {"packets_dropped", out.packets_dropped},
                              {"packets_corrupt", out.packets_corrupt},
                              {"bytes_offered", out.bytes_offered},
                              {"store_points", out.store.size()}});
        result.runs.push_back(std::move(out));
    }
    counts["runs"] = run_counts;
    timings["link_and_evaluate"] = clock.lap();

    std::vector<near_edge::MetricsRow> rows;
    for (const auto& r : result.runs)
        rows.push_back(r.metrics);
    result.monotonic = check_monotonic(rows, false);
    result.strictly_decreasing = check_monotonic(rows, true);

    json outputs = json::array();
    in_stage("write", counts, [&] {
        fs::create_directories(config.out_dir);
        std::vector<fs::path> written;
        const auto metrics = config.out_dir / "metrics.csv";
        near_edge::write_metrics_csv(metrics, rows);
        written.push_back(metrics);
        const auto report = config.out_dir / "clean_report.csv";
        {
            std::ofstream o(report, std::ios::binary);
            ingest.report.write_csv(o);
            if (!o)
                throw Error(ErrorKind::IoError, "write failed for " + report.string());
        }
        written.push_back(report);
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto p = config.out_dir / store_file_name(runs[k].algorithm, runs[k].fraction);
            fs::remove(p);
            near_edge::persist(result.runs[k].store, p);
            written.push_back(p);
        }
        for (const auto& p : written)
            outputs.push_back({{"file", p.filename().string()}, {"crc32", file_crc32(p)}, {"bytes", fs::file_size(p)}});
        return 0;
    });
    timings["write"] = clock.lap();

    json inputs = json::array();
    std::vector<fs::path> in_files{config.input};
    in_files.insert(in_files.end(), config.train.begin(), config.train.end());
    if (!config.holdout.empty())
        in_files.push_back(config.holdout);
    if (config.train.empty() && !config.model.empty())
        in_files.push_back(config.model);
    for (const auto& p : in_files)
        inputs.push_back({{"file", p.string()}, {"crc32", file_crc32(p)}, {"bytes", fs::file_size(p)}});

    result.manifest = {{"tool", "vesseledge"},
                       {"version", kVersion},
                       {"versions", {{"config", kConfigVersion}, {"wire", wire::kVersion}, {"model", "M3FP/1"}}},
                       {"config", to_text(config)},
                       {"seed", config.seed},
                       {"threads", kernels::max_threads()},
                       {"inputs", inputs},
                       {"counts", counts},
                       {"timings_s", timings},
                       {"monotonic", result.monotonic},
                       {"strictly_decreasing", result.strictly_decreasing},
                       {"outputs", outputs}};
    const auto manifest = config.out_dir / "manifest.json";
    std::ofstream m(manifest, std::ios::binary);
    m << result.manifest.dump(2) << '\n';
    if (!m)
        throw StageError("write", ErrorKind::IoError, "write failed for " + manifest.string(), counts);
    return result;
}

ReplayResult sweep(ScenarioConfig config, std::vector<double> fractions) {
    if (fractions.empty())
        throw config_error("sweep needs at least one fraction");
    std::sort(fractions.begin(), fractions.end());
    fractions.erase(std::unique(fractions.begin(), fractions.end()), fractions.end());
    config.fractions = std::move(fractions);
    return run_replay(config);
}

} // namespace vesseledge::scenario
