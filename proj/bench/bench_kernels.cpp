// Serial reference vs OpenMP kernels on one synthetic harbour day.

#include <benchmark/benchmark.h>

#include "vesseledge/ais.hpp"
#include "vesseledge/kernels.hpp"
#include "vesseledge/synth.hpp"

using namespace vesseledge;
using kernels::Exec;

namespace {

struct Day {
    std::vector<AisRecord> records;
    anomaly::PrototypeModel model;
    std::vector<compression::WindowBatch> batches;
    kernels::WindowFlags flags;
    std::vector<Trajectory> originals, kept;

    Day() {
        synth::HarbourDayConfig c;
        records = ais::clean(synth::harbour_day(c).records).first;
        c.seed = 7;
        c.events_per_vessel = 0.3;
        model = anomaly::train(ais::clean(synth::harbour_day(c).records).first);
        anomaly::calibrate_threshold(model, records, 1.0);
        const auto f = kernels::flag_records(records, model, Exec::Serial);
        for (std::size_t i = 0; i < records.size(); ++i)
            records[i].anomaly = f[i] != 0;
        batches = compression::make_batches(records);
        flags = compression::window_flags(records);

        // whole-day trajectories and a 25 % selection of them
        std::map<VesselId, Trajectory> by;
        for (const auto& r : records)
            by.try_emplace(r.vessel, Trajectory{r.vessel, {}}).first->second.points.push_back(r);
        for (auto& [v, t] : by) {
            std::sort(t.points.begin(), t.points.end(),
                      [](const AisRecord& a, const AisRecord& b) { return a.timestamp < b.timestamp; });
            Trajectory k{v, {}};
            for (std::size_t i = 0; i < t.points.size(); ++i)
                if (i % 4 == 0 || i + 1 == t.points.size())
                    k.points.push_back(t.points[i]);
            originals.push_back(std::move(t));
            kept.push_back(std::move(k));
        }
    }
};

const Day& day() {
    static const Day d;
    return d;
}

Exec exec_of(const benchmark::State& s) { return s.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_ScoreRecords(benchmark::State& state) {
    const auto& d = day();
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::score_records(d.records, d.model, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.records.size()));
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_Distortion(benchmark::State& state) {
    const auto& d = day();
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::distortion(d.originals, d.kept, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.records.size()));
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

void BM_CompressRuns(benchmark::State& state) {
    const auto& d = day();
    std::vector<kernels::RunSpec> runs;
    for (double f : {0.1, 0.25, 0.5})
        for (auto a : {compression::Algorithm::BwcDr, compression::Algorithm::BwcDrA})
            runs.push_back({a, {f, 0, 4.0}});
    for (auto _ : state)
        benchmark::DoNotOptimize(kernels::compress_runs(d.batches, runs, d.flags, 3, exec_of(state)));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.records.size() * runs.size()));
    state.SetLabel(state.range(0) ? "openmp" : "serial");
}

} // namespace

BENCHMARK(BM_ScoreRecords)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distortion)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CompressRuns)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
