#include "vesseledge/live.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

namespace vesseledge::live {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

template <class T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

    /// Blocks while full. False once closed.
    bool push(T value) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_)
            return false;
        items_.push_back(std::move(value));
        not_empty_.notify_one();
        return true;
    }

    /// Blocks until an item arrives or the queue is closed and drained.
    std::optional<T> pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        return take(lock);
    }

    enum class Status { Item, Empty, Finished };

    Status try_pop(T& out) {
        std::unique_lock lock(mu_);
        if (items_.empty())
            return closed_ ? Status::Finished : Status::Empty;
        out = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return Status::Item;
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

private:
    std::optional<T> take(std::unique_lock<std::mutex>&) {
        if (items_.empty())
            return std::nullopt;
        T v = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return v;
    }

    std::size_t capacity_;
    std::mutex mu_;
    std::condition_variable not_empty_, not_full_;
    std::deque<T> items_;
    bool closed_ = false;
};

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Socket() { reset(); }

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

Socket connect_to(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        return {};
    Socket s;
    for (auto* a = res; a; a = a->ai_next) {
        Socket c(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
        if (!c.valid())
            continue;
        timeval tv{2, 0};
        ::setsockopt(c.fd(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
        if (::connect(c.fd(), a->ai_addr, a->ai_addrlen) == 0) {
            s = std::move(c);
            break;
        }
    }
    ::freeaddrinfo(res);
    return s;
}

bool send_all(int fd, const std::uint8_t* data, std::size_t n) {
    while (n > 0) {
        const auto k = ::send(fd, data, n, MSG_NOSIGNAL);
        if (k <= 0)
            return false;
        data += k;
        n -= static_cast<std::size_t>(k);
    }
    return true;
}

bool send_frame(int fd, const std::vector<std::uint8_t>& packet) {
    const auto n = static_cast<std::uint32_t>(packet.size());
    const std::uint8_t len[4] = {static_cast<std::uint8_t>(n), static_cast<std::uint8_t>(n >> 8),
                                 static_cast<std::uint8_t>(n >> 16), static_cast<std::uint8_t>(n >> 24)};
    return send_all(fd, len, 4) && send_all(fd, packet.data(), packet.size());
}

// Half-close and wait for the peer to finish reading, so a clean return means delivered.
void finish_connection(Socket& s) {
    ::shutdown(s.fd(), SHUT_WR);
    pollfd p{s.fd(), POLLIN, 0};
    char buf[256];
    const auto start = Clock::now();
    while (seconds_since(start) < 5.0 && ::poll(&p, 1, 200) >= 0) {
        if (p.revents & (POLLIN | POLLHUP | POLLERR)) {
            if (::recv(s.fd(), buf, sizeof buf, 0) <= 0)
                break;
        }
    }
    s.reset();
}

struct ClosedWindow {
    compression::WindowBatch batch;
    std::set<VesselId> flagged;
};

} // namespace

FarEdgeStats run_far_edge(const scenario::ScenarioConfig& config, std::istream& input, const std::atomic<bool>* stop) {
    config.validate();
    const auto runs = config.runs();
    if (config.live.run >= runs.size())
        throw Error(ErrorKind::ConfigError, "live.run indexes past the configured runs");
    const auto run = runs[config.live.run];
    const auto model = scenario::prepare_model(config);

    FarEdgeStats stats;
    BoundedQueue<ClosedWindow> windows(config.live.queue);
    BoundedQueue<std::vector<std::uint8_t>> packets(config.live.queue);
    std::exception_ptr compress_error;
    std::atomic<std::size_t> sent{0}, dropped{0}, connects{0};

    std::thread compressor([&] {
        try {
            compression::StreamCompressor sc(run.algorithm, config.budget(run.fraction), config.history_depth);
            while (auto w = windows.pop())
                packets.push(wire::encode(sc.push(w->batch, w->flagged), w->batch.window, config.edge_id));
        } catch (...) {
            compress_error = std::current_exception();
            windows.close();
        }
        packets.close();
    });

    std::thread sender([&] {
        std::deque<std::vector<std::uint8_t>> pending;
        Socket sock;
        double backoff = 0.05;
        std::optional<Clock::time_point> failing_since;
        bool input_done = false;
        for (;;) {
            if (pending.empty() && !input_done) {
                if (sock.valid() || !failing_since) {
                    if (auto p = packets.pop())
                        pending.push_back(std::move(*p));
                    else
                        input_done = true;
                }
            }
            if (pending.empty() && input_done)
                break;
            if (!sock.valid()) {
                sock = connect_to(config.live.host, config.live.port);
                if (sock.valid()) {
                    ++connects;
                    failing_since.reset();
                    backoff = 0.05;
                } else {
                    if (!failing_since)
                        failing_since = Clock::now();
                    // keep the pipeline moving: buffer what fits, drop the rest
                    std::vector<std::uint8_t> p;
                    for (;;) {
                        const auto st = packets.try_pop(p);
                        if (st == BoundedQueue<std::vector<std::uint8_t>>::Status::Finished) {
                            input_done = true;
                            break;
                        }
                        if (st == BoundedQueue<std::vector<std::uint8_t>>::Status::Empty)
                            break;
                        if (pending.size() < config.live.queue)
                            pending.push_back(std::move(p));
                        else
                            ++dropped;
                    }
                    if (input_done && seconds_since(*failing_since) >= config.live.connect_timeout_s) {
                        dropped += pending.size();
                        pending.clear();
                        break;
                    }
                    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
                    backoff = std::min(backoff * 2.0, 1.0);
                    continue;
                }
            }
            if (pending.empty())
                continue;
            if (send_frame(sock.fd(), pending.front())) {
                pending.pop_front();
                ++sent;
            } else {
                sock.reset();
            }
        }
        if (sock.valid())
            finish_connection(sock);
    });

    ais::NmeaDecoder decoder;
    ais::Cleaner cleaner(config.stale_s);
    std::map<std::int64_t, std::vector<AisRecord>> open;
    std::optional<std::int64_t> closed_upto;
    Timestamp watermark = std::numeric_limits<Timestamp>::min();

    auto close_windows = [&](bool all) {
        while (!open.empty()) {
            auto it = open.begin();
            const auto w = window_at(it->first, config.window_s);
            if (!all && w.end() + config.live.lateness_s > watermark)
                break;
            auto batches = compression::make_batches(it->second, config.window_s);
            std::set<VesselId> flagged;
            for (const auto& r : it->second)
                if (r.anomaly)
                    flagged.insert(r.vessel);
            closed_upto = it->first;
            open.erase(it);
            ++stats.windows;
            if (!windows.push({std::move(batches.front()), std::move(flagged)}))
                break;
        }
    };

    try {
        std::string line;
        while (std::getline(input, line)) {
            if (stop && stop->load())
                break;
            ++stats.lines;
            auto rec = decoder.feed(line);
            if (!rec)
                continue;
            auto ok = cleaner.accept(*rec);
            if (!ok)
                continue;
            AisRecord r = *ok;
            r.anomaly = anomaly::flag(model, r);
            const auto idx = window_of(r.timestamp, config.window_s).index;
            if (closed_upto && idx <= *closed_upto) {
                ++stats.late_records;
                continue;
            }
            open[idx].push_back(r);
            ++stats.records;
            watermark = std::max(watermark, r.timestamp);
            close_windows(false);
        }
        decoder.finish();
        close_windows(true);
    } catch (...) {
        windows.close();
        compressor.join();
        sender.join();
        throw;
    }
    windows.close();
    compressor.join();
    sender.join();
    if (compress_error)
        std::rethrow_exception(compress_error);

    stats.packets_sent = sent;
    stats.packets_dropped = dropped;
    stats.connects = connects;
    stats.report = cleaner.report();
    stats.report.absorb_upstream(decoder.report());
    return stats;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kNearMetricsHeader = "packets,bad_packets,store_points,anomalies,duplicates";

Socket listen_on(const std::string& host, std::uint16_t port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw Error(ErrorKind::IoError, "cannot resolve " + host);
    Socket s;
    for (auto* a = res; a; a = a->ai_next) {
        Socket c(::socket(a->ai_family, a->ai_socktype, a->ai_protocol));
        if (!c.valid())
            continue;
        int one = 1;
        ::setsockopt(c.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        if (::bind(c.fd(), a->ai_addr, a->ai_addrlen) == 0 && ::listen(c.fd(), 8) == 0) {
            s = std::move(c);
            break;
        }
    }
    ::freeaddrinfo(res);
    if (!s.valid())
        throw Error(ErrorKind::IoError, "cannot listen on " + host + ":" + std::to_string(port) + ": " + std::strerror(errno));
    return s;
}

std::uint16_t bound_port(const Socket& s) {
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    if (addr.ss_family == AF_INET6)
        return ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
    return ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
}

void append_snapshot(const fs::path& path, const NearEdgeStats& s, const near_edge::ReconstructedStore& store) {
    std::error_code ec;
    const bool fresh = !fs::exists(path, ec) || fs::file_size(path, ec) == 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (fresh)
        out << kNearMetricsHeader << '\n';
    out << s.packets << ',' << s.bad_packets << ',' << store.size() << ',' << store.anomaly_count() << ','
        << store.duplicates() << '\n';
    if (!out)
        throw Error(ErrorKind::IoError, "write failed for " + path.string());
}

struct Connection {
    Socket sock;
    std::vector<std::uint8_t> buffer;
};

} // namespace

NearEdgeStats run_near_edge(const scenario::ScenarioConfig& config, const NearEdgeOptions& options) {
    config.validate();
    fs::create_directories(config.out_dir);
    const auto metrics_path = config.out_dir / kNearMetricsFile;
    const auto store_path = config.out_dir / kLiveStoreFile;

    Socket listener = listen_on(config.live.host, config.live.port);
    if (options.on_listening)
        options.on_listening(bound_port(listener));

    NearEdgeStats stats;
    near_edge::ReconstructedStore store;
    std::vector<Connection> conns;
    std::size_t closed = 0;
    auto last_traffic = Clock::now();
    auto last_heartbeat = Clock::now();
    constexpr std::size_t kMaxFrame = wire::packet_size(wire::kMaxPoints);

    auto handle_packet = [&](std::span<const std::uint8_t> bytes) {
        try {
            store.add_packet(wire::decode(bytes, config.window_s));
            ++stats.packets;
        } catch (const Error&) {
            ++stats.bad_packets;
        }
        if (config.live.metrics_every > 0 && (stats.packets + stats.bad_packets) % config.live.metrics_every == 0)
            append_snapshot(metrics_path, stats, store);
    };

    for (;;) {
        if (options.stop && options.stop->load())
            break;
        if (options.max_connections > 0 && closed >= options.max_connections)
            break;
        if (options.idle_exit_s > 0 && seconds_since(last_traffic) >= options.idle_exit_s)
            break;
        if (config.live.heartbeat_s > 0 && seconds_since(last_heartbeat) >= config.live.heartbeat_s) {
            std::cerr << "near-edge heartbeat: connections=" << conns.size() << " packets=" << stats.packets
                      << " store=" << store.size() << std::endl;
            last_heartbeat = Clock::now();
        }

        std::vector<pollfd> fds;
        fds.push_back({listener.fd(), POLLIN, 0});
        for (const auto& c : conns)
            fds.push_back({c.sock.fd(), POLLIN, 0});
        if (::poll(fds.data(), fds.size(), 100) < 0) {
            if (errno == EINTR)
                continue;
            throw Error(ErrorKind::IoError, std::string("poll failed: ") + std::strerror(errno));
        }
        if (fds[0].revents & POLLIN) {
            Socket c(::accept(listener.fd(), nullptr, nullptr));
            if (c.valid()) {
                ++stats.connections;
                conns.push_back({std::move(c), {}});
                last_traffic = Clock::now();
            }
        }
        for (std::size_t i = 1; i < fds.size(); ++i) {
            if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR)))
                continue;
            auto& c = conns[i - 1];
            std::uint8_t buf[8192];
            const auto n = ::recv(c.sock.fd(), buf, sizeof buf, 0);
            if (n > 0) {
                last_traffic = Clock::now();
                c.buffer.insert(c.buffer.end(), buf, buf + n);
                std::size_t off = 0;
                while (c.buffer.size() - off >= 4) {
                    const std::uint32_t len = c.buffer[off] | (c.buffer[off + 1] << 8) | (c.buffer[off + 2] << 16) |
                                              (static_cast<std::uint32_t>(c.buffer[off + 3]) << 24);
                    if (len > kMaxFrame) {
                        ++stats.bad_packets;
                        c.sock.reset();
                        break;
                    }
                    if (c.buffer.size() - off - 4 < len)
                        break;
                    handle_packet(std::span(c.buffer).subspan(off + 4, len));
                    off += 4 + len;
                }
                c.buffer.erase(c.buffer.begin(), c.buffer.begin() + static_cast<std::ptrdiff_t>(std::min(off, c.buffer.size())));
            } else {
                if (!c.buffer.empty())
                    ++stats.bad_packets;
                c.sock.reset();
            }
        }
        const auto before = conns.size();
        std::erase_if(conns, [](const Connection& c) { return !c.sock.valid(); });
        closed += before - conns.size();
    }

    conns.clear();
    stats.store_points = store.size();
    fs::remove(store_path);
    near_edge::persist(store, store_path);
    append_snapshot(metrics_path, stats, store);
    return stats;
}

} // namespace vesseledge::live
