#include "vesseledge/compression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace vesseledge::compression {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sed(const AisRecord& a, const AisRecord& p, const AisRecord& b) {
    return haversine_m(p.position(), interpolate_at(a, b, p.timestamp));
}

SelectionResult finish(std::vector<Trajectory> kept, std::size_t input, std::size_t budget) {
    SelectionResult r;
    std::size_t n = 0;
    for (const auto& t : kept)
        n += t.points.size();
    std::erase_if(kept, [](const Trajectory& t) { return t.points.empty(); });
    r.kept = std::move(kept);
    r.input_count = input;
    r.budget = budget;
    r.dropped_count = input - n;
    r.realized_fraction = input == 0 ? 1.0 : static_cast<double>(n) / static_cast<double>(input);
    return r;
}

} // namespace

std::size_t WindowBatch::point_count() const {
    std::size_t n = 0;
    for (const auto& v : vessels)
        n += v.points.size();
    return n;
}

std::vector<WindowBatch> make_batches(std::span<const AisRecord> records, std::int64_t window_seconds) {
    std::vector<AisRecord> sorted(records.begin(), records.end());
    auto key = [&](const AisRecord& r) {
        return std::make_tuple(window_of(r.timestamp, window_seconds).index, r.vessel, r.timestamp);
    };
    std::stable_sort(sorted.begin(), sorted.end(), [&](const AisRecord& a, const AisRecord& b) { return key(a) < key(b); });

    std::vector<WindowBatch> out;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& r = sorted[i];
        const auto w = window_of(r.timestamp, window_seconds);
        if (out.empty() || out.back().window.index != w.index)
            out.push_back({w, {}});
        auto& vessels = out.back().vessels;
        if (vessels.empty() || vessels.back().vessel != r.vessel)
            vessels.push_back({r.vessel, {}});
        auto& pts = vessels.back().points;
        if (!pts.empty() && pts.back().timestamp == r.timestamp)
            throw Error(ErrorKind::InvalidArgument, "duplicate (vessel, timestamp) in batch input");
        pts.push_back(r);
    }
    return out;
}

void BudgetSpec::validate() const {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw Error(ErrorKind::InvalidArgument, "budget fraction must lie in (0, 1]");
    if (!(boost > 0.0) || !std::isfinite(boost))
        throw Error(ErrorKind::InvalidArgument, "boost factor must be positive");
}

std::size_t BudgetSpec::budget(std::size_t points, std::size_t vessels) const {
    const auto share = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(points)));
    return std::min(points, std::max(share, vessels * floor));
}

std::vector<AisRecord> SelectionResult::flatten() const {
    std::vector<AisRecord> out;
    for (const auto& t : kept)
        out.insert(out.end(), t.points.begin(), t.points.end());
    return out;
}

std::string_view to_string(Algorithm a) { return a == Algorithm::BwcDr ? "bwc-dr" : "bwc-dr-a"; }

Algorithm parse_algorithm(std::string_view s) {
    if (s == "bwc-dr" || s == "bwc_dr")
        return Algorithm::BwcDr;
    if (s == "bwc-dr-a" || s == "bwc_dr_a")
        return Algorithm::BwcDrA;
    throw Error(ErrorKind::ConfigError, "unknown algorithm '" + std::string(s) + "'");
}

SelectionResult dr_simplify(const Trajectory& trajectory, double threshold_m) {
    if (!(threshold_m > 0.0))
        throw Error(ErrorKind::InvalidArgument, "dead reckoning threshold must be positive");
    const auto& pts = trajectory.points;
    Trajectory kept{trajectory.vessel, {}};
    if (!pts.empty()) {
        kept.points.push_back(pts.front());
        for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
            const auto& last = kept.points.back();
            const double dt = static_cast<double>(pts[i].timestamp - last.timestamp);
            const LatLon predicted = last.has_course()
                                         ? destination(last.position(), last.cog, last.sog * kMetersPerSecondPerKnot * dt)
                                         : last.position();
            if (haversine_m(predicted, pts[i].position()) > threshold_m)
                kept.points.push_back(pts[i]);
        }
        if (pts.size() > 1)
            kept.points.push_back(pts.back());
    }
    std::vector<Trajectory> out;
    out.push_back(std::move(kept));
    return finish(std::move(out), pts.size(), pts.size());
}

std::vector<double> base_priority(const Trajectory& trajectory) {
    const auto& pts = trajectory.points;
    std::vector<double> pr(pts.size(), kInf);
    for (std::size_t i = 1; i + 1 < pts.size(); ++i)
        pr[i] = sed(pts[i - 1], pts[i], pts[i + 1]);
    return pr;
}

std::vector<PrioritizedPoint> prioritize(const WindowBatch& batch, const std::set<VesselId>& boosted, double boost) {
    std::vector<PrioritizedPoint> out;
    for (const auto& v : batch.vessels) {
        const bool b = boosted.contains(v.vessel);
        const auto pr = base_priority(v);
        for (std::size_t i = 0; i < pr.size(); ++i)
            out.push_back({v.points[i], b && std::isfinite(pr[i]) ? pr[i] * boost : pr[i], b});
    }
    return out;
}

double dr_deviation(const AisRecord& from, const AisRecord& p) {
    const double dt = static_cast<double>(p.timestamp - from.timestamp);
    const LatLon predicted = from.has_course()
                                 ? destination(from.position(), from.cog, from.sog * kMetersPerSecondPerKnot * dt)
                                 : from.position();
    return haversine_m(predicted, p.position());
}

SelectionResult select(const WindowBatch& batch, const BudgetSpec& spec, const std::set<VesselId>& boosted,
                       double scale, const Retained& retained) {
    spec.validate();
    const std::size_t total = batch.point_count();
    std::size_t present = 0;
    for (const auto& v : batch.vessels)
        present += !v.points.empty();
    const std::size_t budget = spec.budget(total, present);

    struct Node {
        std::ptrdiff_t prev = -1;
        std::ptrdiff_t next = -1;
        bool alive = true;
        double key = 0.0;
    };
    // (effective priority, timestamp, mmsi, vessel slot, point index)
    using Key = std::tuple<double, Timestamp, std::uint32_t, std::size_t, std::size_t>;

    const auto nv = batch.vessels.size();
    std::vector<std::vector<Node>> nodes(nv);
    std::vector<std::size_t> alive(nv);
    std::vector<double> factor(nv);
    std::vector<const AisRecord*> before(nv, nullptr);
    std::set<Key> queue;

    auto priority = [&](std::size_t v, std::size_t i) {
        const auto& n = nodes[v][i];
        const auto& pts = batch.vessels[v].points;
        const AisRecord* prev = n.prev >= 0 ? &pts[static_cast<std::size_t>(n.prev)] : before[v];
        if (!prev || (n.next < 0 && !before[v]))
            return kInf;
        if (n.next < 0)
            return dr_deviation(*prev, pts[i]) * factor[v];
        return sed(*prev, pts[i], pts[static_cast<std::size_t>(n.next)]) * factor[v];
    };
    auto key_of = [&](std::size_t v, std::size_t i) {
        return Key{nodes[v][i].key, batch.vessels[v].points[i].timestamp, batch.vessels[v].vessel.value(), v, i};
    };

    for (std::size_t v = 0; v < nv; ++v) {
        const auto& pts = batch.vessels[v].points;
        factor[v] = scale * (boosted.contains(batch.vessels[v].vessel) ? spec.boost : 1.0);
        if (auto it = retained.find(batch.vessels[v].vessel); it != retained.end()) {
            if (!pts.empty() && it->second.timestamp >= pts.front().timestamp)
                throw Error(ErrorKind::InvalidArgument, "retained point is not older than the window");
            before[v] = &it->second;
        }
        nodes[v].resize(pts.size());
        alive[v] = pts.size();
        for (std::size_t i = 0; i < pts.size(); ++i) {
            nodes[v][i].prev = static_cast<std::ptrdiff_t>(i) - 1;
            nodes[v][i].next = i + 1 < pts.size() ? static_cast<std::ptrdiff_t>(i + 1) : -1;
        }
        for (std::size_t i = 0; i < pts.size(); ++i)
            nodes[v][i].key = priority(v, i);
        if (alive[v] > spec.floor)
            for (std::size_t i = 0; i < pts.size(); ++i)
                queue.insert(key_of(v, i));
    }

    std::size_t kept = total;
    while (kept > budget && !queue.empty()) {
        const auto [pr, ts, mmsi, v, i] = *queue.begin();
        queue.erase(queue.begin());
        auto& n = nodes[v][i];
        n.alive = false;
        if (n.prev >= 0)
            nodes[v][static_cast<std::size_t>(n.prev)].next = n.next;
        if (n.next >= 0)
            nodes[v][static_cast<std::size_t>(n.next)].prev = n.prev;
        --kept;
        if (--alive[v] <= spec.floor) {
            for (std::size_t j = 0; j < nodes[v].size(); ++j)
                if (nodes[v][j].alive)
                    queue.erase(key_of(v, j));
            continue;
        }
        for (auto nb : {n.prev, n.next}) {
            if (nb < 0)
                continue;
            const auto j = static_cast<std::size_t>(nb);
            queue.erase(key_of(v, j));
            nodes[v][j].key = priority(v, j);
            queue.insert(key_of(v, j));
        }
    }

    std::vector<Trajectory> out;
    out.reserve(nv);
    for (std::size_t v = 0; v < nv; ++v) {
        Trajectory t{batch.vessels[v].vessel, {}};
        for (std::size_t i = 0; i < nodes[v].size(); ++i)
            if (nodes[v][i].alive)
                t.points.push_back(batch.vessels[v].points[i]);
        out.push_back(std::move(t));
    }
    return finish(std::move(out), total, budget);
}

SelectionResult bwc_dr(const WindowBatch& batch, const BudgetSpec& budget, const Retained& retained) {
    return select(batch, budget, {}, 1.0, retained);
}

SelectionResult bwc_dr_a(const WindowBatch& batch, const BudgetSpec& budget, const anomaly::AnomalyHistory& history,
                         const std::set<VesselId>& current_flags, const Retained& retained) {
    std::set<VesselId> boosted;
    for (const auto& v : batch.vessels)
        if (current_flags.contains(v.vessel) || history.flagged_recently(v.vessel, batch.window.index))
            boosted.insert(v.vessel);
    return select(batch, budget, boosted, 1.0, retained);
}

StreamCompressor::StreamCompressor(Algorithm algorithm, BudgetSpec budget, std::size_t history_depth)
    : algorithm_(algorithm), budget_(budget), history_(history_depth) {
    budget_.validate();
}

SelectionResult StreamCompressor::push(const WindowBatch& batch, const std::set<VesselId>& flagged) {
    if (last_index_ && batch.window.index <= *last_index_)
        throw Error(ErrorKind::StateError, "windows must be compressed in increasing order");
    last_index_ = batch.window.index;
    auto out = algorithm_ == Algorithm::BwcDr ? bwc_dr(batch, budget_, retained_)
                                              : bwc_dr_a(batch, budget_, history_, flagged, retained_);
    history_.record_window(batch.window.index, flagged);
    for (const auto& t : out.kept)
        if (!t.points.empty())
            retained_[t.vessel] = t.points.back();
    return out;
}

DistortionSum distortion_sum(const Trajectory& original, const Trajectory& kept) {
    const auto& o = original.points;
    const auto& k = kept.points;
    if (o.empty())
        return {};
    if (k.empty())
        throw Error(ErrorKind::InvalidArgument, "no kept points for a vessel with original points");
    if (original.vessel != kept.vessel)
        throw Error(ErrorKind::InvalidArgument, "distortion between different vessels");

    DistortionSum s;
    std::size_t j = 0;   // last kept index with timestamp <= current original timestamp
    std::size_t matched = 0;
    for (const auto& p : o) {
        while (j + 1 < k.size() && k[j + 1].timestamp <= p.timestamp)
            ++j;
        double d;
        if (p.timestamp <= k[j].timestamp || j + 1 == k.size()) {
            // on a kept point, or before the first / after the last kept point
            d = haversine_m(p.position(), k[j].position());
            if (p.timestamp == k[j].timestamp)
                ++matched;
        } else {
            d = haversine_m(p.position(), interpolate_at(k[j], k[j + 1], p.timestamp));
        }
        s.sum_m += d;
        ++s.points;
    }
    if (matched != k.size())
        throw Error(ErrorKind::InvalidArgument, "kept points are not a subset of the original trajectory");
    return s;
}

double distortion_m(std::span<const Trajectory> originals, std::span<const Trajectory> kept) {
    std::map<VesselId, const Trajectory*> by_vessel;
    for (const auto& t : kept) {
        if (by_vessel.contains(t.vessel))
            throw Error(ErrorKind::InvalidArgument, "vessel appears twice in kept set");
        by_vessel[t.vessel] = &t;
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& orig : originals) {
        if (orig.points.empty())
            continue;
        auto it = by_vessel.find(orig.vessel);
        if (it == by_vessel.end())
            throw Error(ErrorKind::InvalidArgument, "no kept points for vessel " + std::to_string(orig.vessel.value()));
        const auto s = distortion_sum(orig, *it->second);
        sum += s.sum_m;
        n += s.points;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::map<std::int64_t, std::set<VesselId>> window_flags(std::span<const AisRecord> records,
                                                        std::int64_t window_seconds) {
    std::map<std::int64_t, std::set<VesselId>> flags;
    for (const auto& r : records)
        if (r.anomaly)
            flags[window_of(r.timestamp, window_seconds).index].insert(r.vessel);
    return flags;
}

anomaly::AnomalyHistory history_before(const std::map<std::int64_t, std::set<VesselId>>& flags, std::int64_t index,
                                       std::size_t depth) {
    anomaly::AnomalyHistory h(depth);
    for (auto it = flags.lower_bound(index - static_cast<std::int64_t>(depth)); it != flags.end() && it->first < index;
         ++it)
        h.record_window(it->first, it->second);
    return h;
}

} // namespace vesseledge::compression
