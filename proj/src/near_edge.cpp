#include "vesseledge/near_edge.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "vesseledge/csv.hpp"
#include "vesseledge/kernels.hpp"

namespace vesseledge::near_edge {

namespace {

constexpr std::string_view kStoreHeader = "vessel,timestamp,lat,lon,sog,cog,anomaly,source";
constexpr std::string_view kMetricsHeader =
    "fraction,algorithm,avg_distortion_m,anomalies_retained,anomalies_redetected,total_records,total_anomalies";

auto content_key(const AisRecord& r) { return std::make_tuple(r.lat, r.lon, r.sog, r.cog, r.anomaly, r.heading); }

} // namespace

std::string Source::to_string() const { return is_coastal() ? "coastal" : std::to_string(id); }

Source Source::parse(std::string_view s) {
    if (s == "coastal")
        return coastal();
    const auto v = csv::parse_int(s);
    if (v < 0 || v > 0xFFFF)
        throw Error(ErrorKind::FormatError, "source must be 'coastal' or an edge id");
    return edge(static_cast<std::uint16_t>(v));
}

bool ReconstructedStore::add(const AisRecord& record, Source source) {
    auto& track = vessels_[record.vessel];
    auto [it, inserted] = track.try_emplace(record.timestamp, StoredPoint{record, source});
    if (inserted)
        return true;
    ++duplicates_;
    auto& cur = it->second;
    // same source twice: keep the smaller content so the outcome is order-free
    if (source < cur.source || (source == cur.source && content_key(record) < content_key(cur.record)))
        cur = {record, source};
    return false;
}

void ReconstructedStore::add_packet(const wire::DecodedPacket& packet) {
    ++receipts_[packet.window.index][packet.edge_id];
    for (const auto& p : packet.points)
        add(p, Source::edge(packet.edge_id));
}

void ReconstructedStore::add_coastal(std::span<const AisRecord> records) {
    for (const auto& r : records)
        add(r, Source::coastal());
}

std::size_t ReconstructedStore::size() const {
    std::size_t n = 0;
    for (const auto& [v, track] : vessels_)
        n += track.size();
    return n;
}

std::size_t ReconstructedStore::anomaly_count() const {
    std::size_t n = 0;
    for (const auto& [v, track] : vessels_)
        for (const auto& [t, p] : track)
            n += p.record.anomaly;
    return n;
}

bool ReconstructedStore::contains(VesselId vessel, Timestamp t) const {
    auto it = vessels_.find(vessel);
    return it != vessels_.end() && it->second.contains(t);
}

std::vector<Trajectory> ReconstructedStore::trajectories() const {
    std::vector<Trajectory> out;
    out.reserve(vessels_.size());
    for (const auto& [v, track] : vessels_) {
        Trajectory t{v, {}};
        t.points.reserve(track.size());
        for (const auto& [ts, p] : track)
            t.points.push_back(p.record);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<AisRecord> ReconstructedStore::records() const {
    std::vector<AisRecord> out;
    out.reserve(size());
    for (const auto& [v, track] : vessels_)
        for (const auto& [ts, p] : track)
            out.push_back(p.record);
    return out;
}

ReconstructedStore merge(std::span<const wire::DecodedPacket> packets, std::span<const AisRecord> coastal) {
    ReconstructedStore store;
    store.add_coastal(coastal);
    for (const auto& p : packets)
        store.add_packet(p);
    return store;
}

ReconstructedStore redetect(const ReconstructedStore& store, const anomaly::PrototypeModel& model) {
    std::vector<const StoredPoint*> points;
    points.reserve(store.size());
    std::vector<AisRecord> records;
    records.reserve(store.size());
    for (const auto& [v, track] : store.vessels())
        for (const auto& [t, p] : track) {
            points.push_back(&p);
            records.push_back(p.record);
        }
    const auto flags = kernels::flag_records(records, model, kernels::Exec::Parallel);
    ReconstructedStore out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        AisRecord r = points[i]->record;
        r.anomaly = flags[i] != 0;
        out.add(r, points[i]->source);
    }
    return out;
}

MetricsRow evaluate(std::span<const AisRecord> originals, const ReconstructedStore& store,
                    const EvaluateOptions& options) {
    if (originals.empty())
        throw Error(ErrorKind::InvalidArgument, "no original records to evaluate against");

    std::vector<AisRecord> sorted(originals.begin(), originals.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const AisRecord& a, const AisRecord& b) {
        return std::tie(a.vessel, a.timestamp) < std::tie(b.vessel, b.timestamp);
    });
    std::vector<Trajectory> orig;
    for (const auto& r : sorted) {
        if (orig.empty() || orig.back().vessel != r.vessel) {
            if (!store.vessels().contains(r.vessel) && options.floor >= 1)
                throw Error(ErrorKind::StateError, "vessel " + std::to_string(r.vessel.value()) +
                                                       " has no reconstructed points although a floor is configured");
            orig.push_back({r.vessel, {}});
        }
        orig.back().points.push_back(r);
    }
    std::erase_if(orig, [&](const Trajectory& t) { return !store.vessels().contains(t.vessel); });

    MetricsRow row;
    row.fraction = options.fraction;
    row.algorithm = options.algorithm;
    row.avg_distortion_m = kernels::distortion(orig, store.trajectories(), kernels::Exec::Parallel);
    row.total_records = originals.size();
    for (const auto& r : originals) {
        if (!r.anomaly)
            continue;
        ++row.total_anomalies;
        row.anomalies_retained += store.contains(r.vessel, r.timestamp);
    }
    if (options.model)
        row.anomalies_redetected = redetect(store, *options.model).anomaly_count();
    return row;
}

void write_metrics_csv(std::ostream& out, std::span<const MetricsRow> rows) {
    out << kMetricsHeader << '\n';
    for (const auto& r : rows)
        out << csv::format_double(r.fraction) << ',' << csv::quote_if_needed(r.algorithm) << ','
            << csv::format_double(r.avg_distortion_m) << ',' << r.anomalies_retained << ',' << r.anomalies_redetected
            << ',' << r.total_records << ',' << r.total_anomalies << '\n';
}

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricsRow> rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    write_metrics_csv(out, rows);
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || csv::trim(line) != kMetricsHeader)
        throw Error(ErrorKind::FormatError, path.string() + ": not a metrics file");
    std::vector<MetricsRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (csv::trim(line).empty())
            continue;
        try {
            const auto f = csv::split_line(csv::trim(line));
            if (f.size() != 7)
                throw Error(ErrorKind::FormatError, "expected 7 fields");
            rows.push_back({csv::parse_double(f[0]), f[1], csv::parse_double(f[2]),
                            static_cast<std::size_t>(csv::parse_int(f[3])), static_cast<std::size_t>(csv::parse_int(f[4])),
                            static_cast<std::size_t>(csv::parse_int(f[5])), static_cast<std::size_t>(csv::parse_int(f[6]))});
        } catch (const Error& e) {
            throw Error(ErrorKind::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void persist(const ReconstructedStore& store, const std::filesystem::path& path) {
    std::error_code ec;
    const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out)
        throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for appending");
    if (fresh)
        out << kStoreHeader << '\n';
    for (const auto& [v, track] : store.vessels())
        for (const auto& [t, p] : track) {
            const auto& r = p.record;
            out << v.value() << ',' << t << ',' << csv::format_double(r.lat) << ',' << csv::format_double(r.lon) << ','
                << csv::format_double(r.sog) << ',' << csv::format_double(r.cog) << ',' << (r.anomaly ? 1 : 0) << ','
                << p.source.to_string() << '\n';
        }
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

ReconstructedStore load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    ReconstructedStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = csv::trim(line);
        if (text.empty())
            continue;
        if (text == kStoreHeader)
            continue;
        if (store.size() == 0 && lineno == 1)
            throw Error(ErrorKind::FormatError, path.string() + ":1: missing store log header");
        try {
            const auto f = csv::split_line(text);
            if (f.size() != 8)
                throw Error(ErrorKind::FormatError, "expected 8 fields, got " + std::to_string(f.size()));
            AisRecord r;
            r.vessel = VesselId(csv::parse_int(f[0]));
            r.timestamp = csv::parse_int(f[1]);
            r.lat = csv::parse_double(f[2]);
            r.lon = csv::parse_double(f[3]);
            r.sog = csv::parse_double(f[4]);
            r.cog = csv::parse_double(f[5]);
            if (f[6] != "0" && f[6] != "1")
                throw Error(ErrorKind::FormatError, "anomaly must be 0 or 1");
            r.anomaly = f[6] == "1";
            if (!position_valid(r.lat, r.lon))
                throw Error(ErrorKind::FormatError, "invalid position");
            store.add(r, Source::parse(f[7]));
        } catch (const Error& e) {
            throw Error(ErrorKind::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (lineno == 0)
        throw Error(ErrorKind::FormatError, path.string() + ": empty store log (missing header)");
    return store;
}

} // namespace vesseledge::near_edge
