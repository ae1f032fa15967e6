#include "vesseledge/kernels.hpp"

#include <exception>

#include <omp.h>

namespace vesseledge::kernels {

std::vector<double> score_records(std::span<const AisRecord> records, const anomaly::PrototypeModel& model, Exec exec) {
    std::vector<double> out(records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[i] = anomaly::score(model, records[i]);
    } else {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[i] = anomaly::score(model, records[i]);
    }
    return out;
}

std::vector<std::uint8_t> flag_records(std::span<const AisRecord> records, const anomaly::PrototypeModel& model,
                                       Exec exec) {
    const auto threshold = model.score_threshold();
    if (!threshold)
        throw Error(ErrorKind::StateError, "model has no calibrated threshold");
    const auto scores = score_records(records, model, exec);
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i)
        out[i] = scores[i] < *threshold;
    return out;
}

std::vector<compression::SelectionResult> compress_windows(std::span<const compression::WindowBatch> batches,
                                                           const compression::BudgetSpec& budget,
                                                           compression::Algorithm algorithm, const WindowFlags& flags,
                                                           std::size_t history_depth) {
    static const std::set<VesselId> none;
    compression::StreamCompressor compressor(algorithm, budget, history_depth);
    std::vector<compression::SelectionResult> out;
    out.reserve(batches.size());
    for (const auto& b : batches) {
        auto it = flags.find(b.window.index);
        out.push_back(compressor.push(b, it == flags.end() ? none : it->second));
    }
    return out;
}

std::vector<std::vector<compression::SelectionResult>> compress_runs(std::span<const compression::WindowBatch> batches,
                                                                     std::span<const RunSpec> runs,
                                                                     const WindowFlags& flags,
                                                                     std::size_t history_depth, Exec exec) {
    for (const auto& r : runs)
        r.budget.validate();
    std::vector<std::vector<compression::SelectionResult>> out(runs.size());
    const auto n = static_cast<std::ptrdiff_t>(runs.size());
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[i] = compress_windows(batches, runs[i].budget, runs[i].algorithm, flags, history_depth);
        return out;
    }
    std::vector<std::exception_ptr> errors(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = compress_windows(batches, runs[i].budget, runs[i].algorithm, flags, history_depth);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

double distortion(std::span<const Trajectory> originals, std::span<const Trajectory> kept, Exec exec) {
    std::map<VesselId, const Trajectory*> by_vessel;
    for (const auto& t : kept) {
        if (by_vessel.contains(t.vessel))
            throw Error(ErrorKind::InvalidArgument, "vessel appears twice in kept set");
        by_vessel[t.vessel] = &t;
    }
    std::vector<const Trajectory*> match(originals.size(), nullptr);
    for (std::size_t i = 0; i < originals.size(); ++i) {
        if (originals[i].points.empty())
            continue;
        auto it = by_vessel.find(originals[i].vessel);
        if (it == by_vessel.end())
            throw Error(ErrorKind::InvalidArgument,
                        "no kept points for vessel " + std::to_string(originals[i].vessel.value()));
        match[i] = it->second;
    }

    std::vector<compression::DistortionSum> sums(originals.size());
    const auto n = static_cast<std::ptrdiff_t>(originals.size());
    if (exec == Exec::Serial) {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            if (match[i])
                sums[i] = compression::distortion_sum(originals[i], *match[i]);
    } else {
        // exceptions must not escape an OpenMP region
        std::vector<std::exception_ptr> errors(originals.size());
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            if (!match[i])
                continue;
            try {
                sums[i] = compression::distortion_sum(originals[i], *match[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e)
                std::rethrow_exception(e);
    }
    double total = 0.0;
    std::size_t points = 0;
    for (const auto& s : sums) {
        total += s.sum_m;
        points += s.points;
    }
    return points == 0 ? 0.0 : total / static_cast<double>(points);
}

int max_threads() { return omp_get_max_threads(); }

} // namespace vesseledge::kernels
