#include "vesseledge/anomaly.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <tuple>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace vesseledge::anomaly {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log_sum_exp(const std::vector<double>& v) {
    double m = kMinScore;
    for (double x : v)
        m = std::max(m, x);
    if (m == kMinScore || !std::isfinite(m))
        return m;
    double s = 0.0;
    for (double x : v)
        s += std::exp(x - m);
    return m + std::log(s);
}

// Uniform double in [0, 1) from raw engine output; engine output is specified
// by the standard, distributions are not.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 cell_rng(std::uint64_t seed, CellId cell) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(cell), static_cast<std::uint32_t>(static_cast<std::uint64_t>(cell) >> 32)};
    return std::mt19937_64(seq);
}

void normalize_weights(std::vector<Component>& comps) {
    double total = 0.0;
    for (const auto& c : comps)
        total += c.weight;
    for (auto& c : comps)
        c.weight /= total;
}

CellPrototype fit_diagonal(const std::vector<Vec3>& xs, double floor) {
    Vec3 mean = Vec3::Zero();
    for (const auto& x : xs)
        mean += x;
    mean /= static_cast<double>(xs.size());
    Vec3 var = Vec3::Zero();
    for (const auto& x : xs)
        var += (x - mean).cwiseAbs2();
    var /= static_cast<double>(xs.size());
    Component c;
    c.weight = 1.0;
    c.mean = mean;
    c.cov = var.cwiseMax(floor).asDiagonal();
    return {{c}, xs.size()};
}

std::vector<Vec3> kmeanspp(const std::vector<Vec3>& xs, int k, std::mt19937_64& rng) {
    std::vector<Vec3> centers;
    centers.push_back(xs[static_cast<std::size_t>(rng() % xs.size())]);
    std::vector<double> d2(xs.size());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers)
                best = std::min(best, (xs[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0)
            break;  // every sample coincides with a center
        double target = unit(rng) * total;
        std::size_t pick = xs.size() - 1;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            target -= d2[i];
            if (target < 0.0) {
                pick = i;
                break;
            }
        }
        centers.push_back(xs[pick]);
    }
    return centers;
}

// M-step from responsibilities (n x k, row-major).
std::vector<Component> m_step(const std::vector<Vec3>& xs, const std::vector<double>& resp, std::size_t k,
                              double floor) {
    std::vector<Component> comps;
    const double n = static_cast<double>(xs.size());
    for (std::size_t j = 0; j < k; ++j) {
        double nk = 0.0;
        Vec3 mean = Vec3::Zero();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            nk += resp[i * k + j];
            mean += resp[i * k + j] * xs[i];
        }
        if (nk < 1e-9 * n)
            continue;  // collapsed component
        mean /= nk;
        Mat3 cov = Mat3::Zero();
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const Vec3 d = xs[i] - mean;
            cov += resp[i * k + j] * (d * d.transpose());
        }
        cov /= nk;
        comps.push_back({nk / n, mean, detail::regularize(cov, floor)});
    }
    normalize_weights(comps);
    return comps;
}

CellPrototype fit_em(const std::vector<Vec3>& xs, const ModelConfig& cfg, CellId cell) {
    auto rng = cell_rng(cfg.seed, cell);
    const auto centers = kmeanspp(xs, cfg.components, rng);
    std::size_t k = centers.size();

    // hard assignment to the nearest seed gives the initial responsibilities
    std::vector<double> resp(xs.size() * k, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j)
            if ((xs[i] - centers[j]).squaredNorm() < (xs[i] - centers[best]).squaredNorm())
                best = j;
        resp[i * k + best] = 1.0;
    }
    auto comps = m_step(xs, resp, k, cfg.covariance_floor);

    double prev_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> logp;
    for (int iter = 0; iter < cfg.em_iterations; ++iter) {
        k = comps.size();
        resp.assign(xs.size() * k, 0.0);
        double ll = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            logp.resize(k);
            for (std::size_t j = 0; j < k; ++j)
                logp[j] = std::log(comps[j].weight) + detail::log_gaussian(xs[i], comps[j].mean, comps[j].cov);
            const double lse = log_sum_exp(logp);
            ll += lse;
            for (std::size_t j = 0; j < k; ++j)
                resp[i * k + j] = std::exp(logp[j] - lse);
        }
        comps = m_step(xs, resp, k, cfg.covariance_floor);
        if (std::abs(ll - prev_ll) <= cfg.em_tolerance * std::abs(ll))
            break;
        prev_ll = ll;
    }
    return {std::move(comps), xs.size()};
}

bool record_valid(const AisRecord& r) {
    return position_valid(r.lat, r.lon) && std::isfinite(r.sog) && r.sog >= 0.0 && r.sog < kSpeedUnavailable;
}

} // namespace

namespace detail {

double log_gaussian(const Vec3& x, const Vec3& mean, const Mat3& cov) {
    const Eigen::LLT<Mat3> llt(cov);
    const Mat3 L = llt.matrixL();
    const Vec3 z = llt.matrixL().solve(x - mean);
    double log_det = 0.0;
    for (int i = 0; i < kFeatureDim; ++i)
        log_det += 2.0 * std::log(L(i, i));
    return -0.5 * (kFeatureDim * kLog2Pi + log_det + z.squaredNorm());
}

Mat3 regularize(const Mat3& cov, double floor) {
    const Mat3 sym = 0.5 * (cov + cov.transpose());
    const Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
    if (es.eigenvalues().minCoeff() >= floor)
        return sym;
    const Vec3 clamped = es.eigenvalues().cwiseMax(floor);
    const Mat3 out = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

} // namespace detail

Vec3 features(const AisRecord& r) {
    if (!r.has_course())
        return {r.sog, 0.0, 0.0};
    const double rad = r.cog * std::numbers::pi / 180.0;
    return {r.sog, std::sin(rad), std::cos(rad)};
}

CellId cell_of(double lat, double lon, double cell_size_deg) {
    const auto lon_cells = static_cast<CellId>(std::ceil(360.0 / cell_size_deg));
    const auto row = static_cast<CellId>(std::floor((lat + 90.0) / cell_size_deg));
    const auto col = static_cast<CellId>(std::floor((lon + 180.0) / cell_size_deg));
    return row * lon_cells + col;
}

const CellPrototype* PrototypeModel::find(CellId id) const {
    auto it = cells_.find(id);
    return it == cells_.end() ? nullptr : &it->second;
}

PrototypeModel train(std::span<const AisRecord> records, const ModelConfig& config) {
    if (records.empty())
        throw Error(ErrorKind::EmptyModel, "no training records");
    if (config.cell_size_deg <= 0.0 || config.components < 1 || config.components > 255)
        throw Error(ErrorKind::ConfigError, "cell size must be positive and K in [1, 255]");

    std::map<CellId, std::vector<Vec3>> grouped;
    for (const auto& r : records) {
        if (!record_valid(r))
            throw Error(ErrorKind::InvalidArgument, "training record has invalid position or speed");
        grouped[cell_of(r.lat, r.lon, config.cell_size_deg)].push_back(features(r));
    }

    PrototypeModel model(config);
    std::vector<std::pair<CellId, const std::vector<Vec3>*>> jobs;
    jobs.reserve(grouped.size());
    for (const auto& [id, xs] : grouped)
        jobs.emplace_back(id, &xs);
    std::vector<CellPrototype> fitted(jobs.size());

    // cells are independent and each has its own seeded generator
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& xs = *jobs[i].second;
        fitted[i] = xs.size() < config.min_samples_full ? fit_diagonal(xs, config.covariance_floor)
                                                         : fit_em(xs, config, jobs[i].first);
    }
    for (std::size_t i = 0; i < jobs.size(); ++i)
        model.cells().emplace(jobs[i].first, std::move(fitted[i]));
    model.set_trained_count(records.size());
    return model;
}

void update(PrototypeModel& model, const AisRecord& record) {
    if (!record_valid(record))
        throw Error(ErrorKind::InvalidArgument, "record has invalid position or speed");
    const auto& cfg = model.config();
    const Vec3 x = features(record);
    auto& cell = model.cells()[cell_of(record.lat, record.lon, cfg.cell_size_deg)];
    model.set_trained_count(model.trained_count() + 1);

    if (cell.components.empty()) {
        Component c;
        c.mean = x;
        c.cov = Mat3::Identity() * cfg.covariance_floor;
        cell.components.push_back(c);
        cell.sample_count = 1;
        return;
    }

    const double n = static_cast<double>(cell.sample_count);
    const std::size_t k = cell.components.size();
    std::vector<double> logp(k);
    for (std::size_t j = 0; j < k; ++j)
        logp[j] = std::log(cell.components[j].weight) +
                  detail::log_gaussian(x, cell.components[j].mean, cell.components[j].cov);
    const double lse = log_sum_exp(logp);

    for (std::size_t j = 0; j < k; ++j) {
        auto& c = cell.components[j];
        const double r = std::exp(logp[j] - lse);
        const double nk = c.weight * n + r;
        if (r > 0.0) {
            // weighted Welford step; eta = 1/sample_count for a single component
            const double eta = r / nk;
            const Vec3 d = x - c.mean;
            c.mean += eta * d;
            c.cov = detail::regularize(c.cov + eta * ((1.0 - eta) * (d * d.transpose()) - c.cov),
                                       cfg.covariance_floor);
        }
        c.weight = nk / (n + 1.0);
    }
    normalize_weights(cell.components);
    cell.sample_count += 1;
}

double score(const PrototypeModel& model, const AisRecord& record) {
    if (!position_valid(record.lat, record.lon))
        return kMinScore;
    const auto* cell = model.find(cell_of(record.lat, record.lon, model.config().cell_size_deg));
    if (!cell || cell->components.empty())
        return kMinScore;
    const Vec3 x = features(record);
    std::vector<double> logp;
    logp.reserve(cell->components.size());
    for (const auto& c : cell->components)
        logp.push_back(std::log(c.weight) + detail::log_gaussian(x, c.mean, c.cov));
    return std::max(log_sum_exp(logp), kMinScore);
}

void calibrate_threshold(PrototypeModel& model, std::span<const AisRecord> holdout, double q) {
    if (holdout.empty())
        throw Error(ErrorKind::InvalidArgument, "empty holdout");
    if (!(q >= 0.0 && q <= 100.0))
        throw Error(ErrorKind::InvalidArgument, "quantile must be within [0, 100]");
    // records in unmodelled cells are excluded: they sit at kMinScore and would
    // pin the threshold there, after which nothing could ever be flagged
    std::vector<double> scores;
    scores.reserve(holdout.size());
    for (const auto& r : holdout)
        if (const double s = score(model, r); s != kMinScore)
            scores.push_back(s);
    if (scores.empty())
        throw Error(ErrorKind::InvalidArgument, "no holdout record falls in a modelled cell");
    std::sort(scores.begin(), scores.end());
    const auto n = scores.size();
    if (q >= 100.0) {
        model.set_score_threshold(std::nextafter(scores.back(), std::numeric_limits<double>::infinity()));
        return;
    }
    // ceil(q% of n) scores at or below the threshold (at least the minimum)
    auto m = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(n) - 1e-9));
    m = std::clamp<std::size_t>(m, 1, n);
    model.set_score_threshold(scores[m - 1]);
}

bool flag(const PrototypeModel& model, const AisRecord& record) {
    const auto threshold = model.score_threshold();
    if (!threshold)
        throw Error(ErrorKind::StateError, "model has no calibrated threshold");
    return score(model, record) < *threshold;
}

// ---------------------------------------------------------------------------
// Federation
// ---------------------------------------------------------------------------

namespace {

struct Weighted {
    double mass;
    Vec3 mean;
    Mat3 cov;
};

auto sort_key(const Weighted& w) {
    return std::make_tuple(w.mean(0), w.mean(1), w.mean(2), w.cov(0, 0), w.cov(1, 1), w.cov(2, 2), w.cov(0, 1),
                           w.cov(0, 2), w.cov(1, 2), w.mass);
}

void canonical_sort(std::vector<Weighted>& v) {
    std::sort(v.begin(), v.end(), [](const Weighted& a, const Weighted& b) { return sort_key(a) < sort_key(b); });
}

double merge_distance(const Weighted& a, const Weighted& b) {
    const double pooled = (a.mass * a.cov.trace() + b.mass * b.cov.trace()) / (a.mass + b.mass) / kFeatureDim;
    return (a.mean - b.mean).squaredNorm() / pooled;
}

Weighted moment_match(const Weighted& a, const Weighted& b) {
    Weighted m;
    m.mass = a.mass + b.mass;
    m.mean = (a.mass * a.mean + b.mass * b.mean) / m.mass;
    const Vec3 da = a.mean - m.mean;
    const Vec3 db = b.mean - m.mean;
    m.cov = (a.mass * (a.cov + da * da.transpose()) + b.mass * (b.cov + db * db.transpose())) / m.mass;
    m.cov = 0.5 * (m.cov + m.cov.transpose());
    return m;
}

std::vector<Weighted> reduce(std::vector<Weighted> pool, std::size_t k, double floor) {
    canonical_sort(pool);
    for (;;) {
        if (pool.size() <= 1)
            break;
        std::size_t bi = 0, bj = 1;
        double best = std::numeric_limits<double>::infinity();
        bool identical = false;
        for (std::size_t i = 0; i < pool.size(); ++i)
            for (std::size_t j = i + 1; j < pool.size(); ++j) {
                const bool same = pool[i].mean == pool[j].mean && pool[i].cov == pool[j].cov;
                const double d = same ? 0.0 : merge_distance(pool[i], pool[j]);
                if (d < best || (same && !identical)) {
                    best = d;
                    bi = i;
                    bj = j;
                    identical = identical || same;
                }
            }
        // identical components are always folded, otherwise only while above K
        if (!identical && pool.size() <= k)
            break;
        Weighted merged = moment_match(pool[bi], pool[bj]);
        if (identical)
            merged.mean = pool[bi].mean, merged.cov = pool[bi].cov;
        merged.cov = detail::regularize(merged.cov, floor);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bj));
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(bi));
        pool.push_back(merged);
        canonical_sort(pool);
    }
    return pool;
}

} // namespace

PrototypeModel federate(std::span<const PrototypeModel> models, std::span<const double> weights) {
    if (models.empty())
        throw Error(ErrorKind::InvalidArgument, "nothing to federate");
    if (!weights.empty() && weights.size() != models.size())
        throw Error(ErrorKind::InvalidArgument, "one weight per model required");
    const auto& cfg = models.front().config();
    for (const auto& m : models)
        if (m.config().cell_size_deg != cfg.cell_size_deg || m.config().components != cfg.components)
            throw Error(ErrorKind::ConfigError, "models disagree on cell size or component count");

    std::vector<double> scale(models.size(), 1.0);
    if (!weights.empty())
        for (std::size_t i = 0; i < models.size(); ++i) {
            if (!(weights[i] > 0.0))
                throw Error(ErrorKind::InvalidArgument, "federation weights must be positive");
            if (models[i].trained_count() > 0)
                scale[i] = weights[i] / static_cast<double>(models[i].trained_count());
        }

    struct Contribution {
        double scale;
        const CellPrototype* cell;
    };
    std::map<CellId, std::vector<Contribution>> by_cell;
    for (std::size_t i = 0; i < models.size(); ++i)
        for (const auto& [id, cell] : models[i].cells())
            by_cell[id].push_back({scale[i], &cell});

    PrototypeModel out(cfg);
    std::uint64_t trained = 0;
    for (const auto& m : models)
        trained += m.trained_count();
    out.set_trained_count(trained);

    for (const auto& [id, contribs] : by_cell) {
        if (contribs.size() == 1) {
            CellPrototype cell = *contribs[0].cell;
            cell.sample_count = static_cast<std::uint64_t>(std::llround(static_cast<double>(cell.sample_count) * contribs[0].scale));
            out.cells().emplace(id, std::move(cell));
            continue;
        }
        std::vector<Weighted> pool;
        std::vector<double> counts;
        for (const auto& c : contribs) {
            const double n = static_cast<double>(c.cell->sample_count) * c.scale;
            counts.push_back(n);
            for (const auto& comp : c.cell->components)
                pool.push_back({comp.weight * n, comp.mean, comp.cov});
        }
        std::sort(counts.begin(), counts.end());
        double total_count = 0.0;
        for (double n : counts)
            total_count += n;

        auto reduced = reduce(std::move(pool), static_cast<std::size_t>(cfg.components), cfg.covariance_floor);
        double mass = 0.0;
        for (const auto& w : reduced)
            mass += w.mass;
        CellPrototype cell;
        cell.sample_count = static_cast<std::uint64_t>(std::llround(total_count));
        for (const auto& w : reduced)
            cell.components.push_back({w.mass / mass, w.mean, w.cov});
        out.cells().emplace(id, std::move(cell));
    }

    std::optional<double> threshold = models.front().score_threshold();
    for (const auto& m : models)
        if (m.score_threshold() != threshold)
            threshold.reset();
    out.set_score_threshold(threshold);
    return out;
}

// ---------------------------------------------------------------------------
// Binary model file
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'M', '3', 'F', 'P'};
constexpr std::uint16_t kVersion = 1;

class Writer {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(raw, raw + sizeof(T));
        bytes.insert(bytes.end(), raw, raw + sizeof(T));
    }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
    template <typename T>
    T get() {
        if (pos_ + sizeof(T) > bytes_.size())
            throw Error(ErrorKind::FormatError, "model file truncated");
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
            std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, raw, sizeof(T));
        return v;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

} // namespace

// Layout: magic, version u16, cell size f64, K u16, cell count u32, cells
// (id i64, count u8, components of weight f64 + mean 3 f64 + upper-triangular
// covariance 6 f64). A trailer follows with covariance floor f64, trained
// count u64, threshold f64 (NaN when uncalibrated) and one sample count u64
// per cell in cell order.
std::vector<std::uint8_t> serialize(const PrototypeModel& model) {
    Writer w;
    for (char c : kMagic)
        w.put(static_cast<std::uint8_t>(c));
    w.put(kVersion);
    w.put(model.config().cell_size_deg);
    w.put(static_cast<std::uint16_t>(model.config().components));
    w.put(static_cast<std::uint32_t>(model.cells().size()));
    for (const auto& [id, cell] : model.cells()) {
        w.put(static_cast<std::int64_t>(id));
        w.put(static_cast<std::uint8_t>(cell.components.size()));
        for (const auto& c : cell.components) {
            w.put(c.weight);
            for (int i = 0; i < 3; ++i)
                w.put(c.mean(i));
            for (int i = 0; i < 3; ++i)
                for (int j = i; j < 3; ++j)
                    w.put(c.cov(i, j));
        }
    }
    w.put(model.config().covariance_floor);
    w.put(static_cast<std::uint64_t>(model.trained_count()));
    w.put(model.score_threshold().value_or(std::numeric_limits<double>::quiet_NaN()));
    for (const auto& [id, cell] : model.cells())
        w.put(static_cast<std::uint64_t>(cell.sample_count));
    return std::move(w.bytes);
}

PrototypeModel deserialize(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    for (char c : kMagic)
        if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(c))
            throw Error(ErrorKind::FormatError, "bad model magic");
    if (const auto v = r.get<std::uint16_t>(); v != kVersion)
        throw Error(ErrorKind::FormatError, "unsupported model version " + std::to_string(v));
    ModelConfig cfg;
    cfg.cell_size_deg = r.get<double>();
    cfg.components = r.get<std::uint16_t>();
    if (!(cfg.cell_size_deg > 0.0) || cfg.components < 1)
        throw Error(ErrorKind::FormatError, "bad model header");
    const auto ncells = r.get<std::uint32_t>();

    std::vector<std::pair<CellId, CellPrototype>> cells;
    cells.reserve(ncells);
    for (std::uint32_t n = 0; n < ncells; ++n) {
        const auto id = r.get<std::int64_t>();
        const auto ncomp = r.get<std::uint8_t>();
        if (ncomp < 1 || ncomp > cfg.components)
            throw Error(ErrorKind::FormatError, "bad component count");
        CellPrototype cell;
        double wsum = 0.0;
        for (int k = 0; k < ncomp; ++k) {
            Component c;
            c.weight = r.get<double>();
            for (int i = 0; i < 3; ++i)
                c.mean(i) = r.get<double>();
            for (int i = 0; i < 3; ++i)
                for (int j = i; j < 3; ++j)
                    c.cov(i, j) = c.cov(j, i) = r.get<double>();
            if (!(c.weight > 0.0) || !c.mean.allFinite() || !c.cov.allFinite() ||
                Eigen::LLT<Mat3>(c.cov).info() != Eigen::Success)
                throw Error(ErrorKind::FormatError, "invalid mixture component");
            wsum += c.weight;
            cell.components.push_back(c);
        }
        if (std::abs(wsum - 1.0) > 1e-6)
            throw Error(ErrorKind::FormatError, "mixture weights do not sum to one");
        if (!cells.empty() && id <= cells.back().first)
            throw Error(ErrorKind::FormatError, "cells out of order");
        cells.emplace_back(id, std::move(cell));
    }
    cfg.covariance_floor = r.get<double>();
    const auto trained = r.get<std::uint64_t>();
    const double threshold = r.get<double>();
    for (auto& [id, cell] : cells)
        cell.sample_count = r.get<std::uint64_t>();
    if (!r.done())
        throw Error(ErrorKind::FormatError, "trailing bytes in model file");

    PrototypeModel model(cfg);
    for (auto& [id, cell] : cells)
        model.cells().emplace_hint(model.cells().end(), id, std::move(cell));
    model.set_trained_count(trained);
    if (!std::isnan(threshold))
        model.set_score_threshold(threshold);
    return model;
}

void save(const PrototypeModel& model, const std::filesystem::path& path) {
    const auto bytes = serialize(model);
    std::ofstream out(path, std::ios::binary);
    if (!out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size())))
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
}

PrototypeModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

// ---------------------------------------------------------------------------

void AnomalyHistory::record_window(std::int64_t window_index, const std::set<VesselId>& flagged) {
    for (VesselId v : flagged) {
        auto& q = flagged_windows_[v];
        if (q.empty() || q.back() < window_index)
            q.push_back(window_index);
        while (q.size() > depth_)
            q.pop_front();
    }
}

bool AnomalyHistory::flagged_recently(VesselId vessel, std::int64_t current_window) const {
    auto it = flagged_windows_.find(vessel);
    if (it == flagged_windows_.end())
        return false;
    const auto horizon = current_window - static_cast<std::int64_t>(depth_);
    for (auto w : it->second)
        if (w >= horizon && w < current_window)
            return true;
    return false;
}

} // namespace vesseledge::anomaly
