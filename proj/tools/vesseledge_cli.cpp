// vesseledge: replay, sweep, far-edge / near-edge emulation, model training and
// corpus utilities from one binary.

#include <csignal>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vesseledge/live.hpp"
#include "vesseledge/scenario.hpp"
#include "vesseledge/synth.hpp"

using namespace vesseledge;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;

    void attach(CLI::App* app, bool need_config = true) {
        auto* c = app->add_option("--config", config, "scenario file (INI: key = value with [sections])");
        if (need_config)
            c->required()->check(CLI::ExistingFile);
        app->add_option("--set", overrides, "override one key, e.g. --set compression.floor=0")->take_all();
        app->add_option("--seed", seed, "run seed");
        app->add_option("--out", out, "output directory");
    }

    scenario::ScenarioConfig load() const {
        auto c = config.empty() ? scenario::ScenarioConfig{} : scenario::load_config(config);
        for (const auto& o : overrides)
            scenario::apply_override(c, o, fs::current_path());
        if (seed)
            c.seed = *seed;
        if (!out.empty())
            c.out_dir = out;
        c.validate();
        return c;
    }
};

void print_rows(const scenario::ReplayResult& r) {
    std::cout << "fraction,algorithm,avg_distortion_m,anomalies_retained,anomalies_redetected,total_anomalies\n";
    for (const auto& run : r.runs) {
        const auto& m = run.metrics;
        std::cout << m.fraction << ',' << m.algorithm << ',' << m.avg_distortion_m << ',' << m.anomalies_retained << ','
                  << m.anomalies_redetected << ',' << m.total_anomalies << '\n';
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"VesselEdge AIS pipeline: detection, bandwidth-constrained compression, link and reconstruction"};
    app.require_subcommand(1);

    Common replay_opts;
    auto* replay = app.add_subcommand("replay", "run the batch pipeline once per (algorithm, fraction)");
    replay_opts.attach(replay);

    Common sweep_opts;
    std::vector<double> sweep_fractions;
    auto* sweep = app.add_subcommand("sweep", "replay over a list of fractions and check distortion monotonicity");
    sweep_opts.attach(sweep);
    sweep->add_option("--fractions", sweep_fractions, "budget fractions")->delimiter(',');

    Common far_opts;
    std::string far_input;
    auto* far = app.add_subcommand("far-edge", "consume NMEA and ship compressed windows to the near edge");
    far_opts.attach(far);
    far->add_option("--input", far_input, "NMEA file, '-' for stdin (default: input.path)");

    Common near_opts;
    bool near_once = false;
    double near_idle = 0.0;
    auto* near = app.add_subcommand("near-edge", "receive packets, maintain the reconstructed store");
    near_opts.attach(near);
    near->add_flag("--once", near_once, "exit after the first far-edge connection closes");
    near->add_option("--idle-exit", near_idle, "exit after this many seconds without traffic");

    Common train_opts;
    std::string model_out;
    auto* train = app.add_subcommand("train-model", "train and calibrate the detector, write a model file");
    train_opts.attach(train);
    train->add_option("--model-out", model_out, "model file to write")->required();

    std::vector<std::string> federate_inputs;
    std::string federate_out;
    auto* federate = app.add_subcommand("federate", "merge model files cell by cell");
    federate->add_option("models", federate_inputs, "model files")->required()->check(CLI::ExistingFile);
    federate->add_option("--model-out", federate_out, "merged model file")->required();

    std::string decode_in, decode_out, decode_report;
    auto* decode = app.add_subcommand("decode-nmea", "decode and clean AIVDM sentences to NDJSON");
    decode->add_option("input", decode_in, "NMEA file")->required()->check(CLI::ExistingFile);
    decode->add_option("--output", decode_out, "NDJSON file (default stdout)");
    decode->add_option("--report", decode_report, "cleaning report CSV");

    synth::HarbourDayConfig synth_cfg;
    std::string synth_out, synth_format = "dma-csv";
    auto* syn = app.add_subcommand("synth", "write a synthetic harbour day");
    syn->add_option("--seed", synth_cfg.seed, "generator seed");
    syn->add_option("--vessels", synth_cfg.vessels, "fleet size");
    syn->add_option("--events", synth_cfg.events_per_vessel, "mean injected anomaly events per moving vessel");
    syn->add_option("--start", synth_cfg.start, "day start, unix seconds");
    syn->add_option("--duration", synth_cfg.duration_s, "seconds");
    syn->add_option("--format", synth_format, "dma-csv or nmea")->check(CLI::IsMember({"dma-csv", "nmea"}));
    syn->add_option("--output", synth_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? scenario::kExitOk : scenario::kExitConfig;
    }

    if (replay->parsed()) {
        const auto r = scenario::run_replay(replay_opts.load());
        print_rows(r);
        return scenario::kExitOk;
    }
    if (sweep->parsed()) {
        auto cfg = sweep_opts.load();
        const auto r = scenario::sweep(cfg, sweep_fractions.empty() ? cfg.fractions : sweep_fractions);
        print_rows(r);
        if (!r.monotonic) {
            std::cerr << "sweep: distortion increases with the budget fraction (see manifest.json)\n";
            return scenario::kExitProperty;
        }
        return scenario::kExitOk;
    }
    if (far->parsed()) {
        const auto cfg = far_opts.load();
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        const std::string path = far_input.empty() ? cfg.input.string() : far_input;
        live::FarEdgeStats s;
        if (path == "-") {
            s = live::run_far_edge(cfg, std::cin, &g_stop);
        } else {
            std::ifstream in(path);
            if (!in)
                throw Error(ErrorKind::IoError, "cannot open " + path);
            s = live::run_far_edge(cfg, in, &g_stop);
        }
        std::cout << "far-edge: lines=" << s.lines << " records=" << s.records << " late=" << s.late_records
                  << " windows=" << s.windows << " sent=" << s.packets_sent << " dropped=" << s.packets_dropped
                  << " connects=" << s.connects << '\n';
        return scenario::kExitOk;
    }
    if (near->parsed()) {
        const auto cfg = near_opts.load();
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        live::NearEdgeOptions o;
        o.max_connections = near_once ? 1 : 0;
        o.idle_exit_s = near_idle;
        o.stop = &g_stop;
        o.on_listening = [](std::uint16_t port) { std::cout << "near-edge: listening on port " << port << std::endl; };
        const auto s = live::run_near_edge(cfg, o);
        std::cout << "near-edge: connections=" << s.connections << " packets=" << s.packets
                  << " bad=" << s.bad_packets << " store=" << s.store_points << '\n';
        return scenario::kExitOk;
    }
    if (train->parsed()) {
        const auto cfg = train_opts.load();
        nlohmann::json counts;
        const auto m = scenario::prepare_model(cfg, &counts);
        anomaly::save(m, model_out);
        std::cout << "train-model: " << counts.dump() << " -> " << model_out << '\n';
        return scenario::kExitOk;
    }
    if (federate->parsed()) {
        std::vector<anomaly::PrototypeModel> models;
        for (const auto& p : federate_inputs)
            models.push_back(anomaly::load(p));
        const auto m = anomaly::federate(models);
        anomaly::save(m, federate_out);
        std::cout << "federate: " << models.size() << " models, " << m.cells().size() << " cells -> " << federate_out
                  << '\n';
        return scenario::kExitOk;
    }
    if (decode->parsed()) {
        const auto r = ais::ingest_file(decode_in, ais::InputFormat::Nmea);
        if (decode_out.empty()) {
            ais::write_ndjson(std::cout, r.records);
        } else {
            std::ofstream o(decode_out, std::ios::binary);
            ais::write_ndjson(o, r.records);
            if (!o)
                throw Error(ErrorKind::IoError, "write failed for " + decode_out);
        }
        if (!decode_report.empty()) {
            std::ofstream o(decode_report, std::ios::binary);
            r.report.write_csv(o);
        }
        std::cerr << "decode-nmea: " << r.report.records_out << " of " << r.report.records_in << " records kept\n";
        return scenario::kExitOk;
    }
    if (syn->parsed()) {
        const auto day = synth::harbour_day(synth_cfg);
        if (synth_format == "nmea")
            synth::write_nmea(synth_out, day);
        else
            synth::write_dma_csv(synth_out, day);
        std::cout << "synth: " << day.records.size() << " records, " << day.injected_records()
                  << " injected anomalous records in " << day.injected_events << " events -> " << synth_out << '\n';
        return scenario::kExitOk;
    }
    return scenario::kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return scenario::exit_code_for(e);
    }
}
