#include "vesseledge/ais.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "vesseledge/csv.hpp"

namespace vesseledge::ais {

namespace {

Error parse_error(const std::string& what) { return Error(ErrorKind::ParseError, what); }

int hex_digit(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    return -1;
}

std::uint8_t parse_hex_byte(std::string_view s) {
    if (s.size() != 2 || hex_digit(s[0]) < 0 || hex_digit(s[1]) < 0)
        throw parse_error("bad checksum field");
    return static_cast<std::uint8_t>(hex_digit(s[0]) * 16 + hex_digit(s[1]));
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

int small_int(std::string_view s, int lo, int hi, const char* field) {
    int v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || v < lo || v > hi)
        throw parse_error(std::string("bad ") + field + " field");
    return v;
}

// Tag block: "\c:1530648000,s:station*hh\" (NMEA 4.10). Only the unix time is used.
std::optional<Timestamp> parse_tag_block(std::string_view block) {
    const auto star = block.rfind('*');
    std::string_view content = block;
    if (star != std::string_view::npos) {
        content = block.substr(0, star);
        if (parse_hex_byte(block.substr(star + 1)) != nmea_checksum(content))
            throw Error(ErrorKind::ChecksumError, "tag block checksum mismatch");
    }
    for (auto param : split_view(content, ',')) {
        if (param.size() > 2 && param.substr(0, 2) == "c:") {
            auto value = param.substr(2);
            long long t = 0;
            auto res = std::from_chars(value.data(), value.data() + value.size(), t);
            if (res.ec != std::errc{} || res.ptr != value.data() + value.size())
                throw parse_error("bad tag block time");
            // some receivers write milliseconds
            if (t > 100'000'000'000LL)
                t /= 1000;
            return t;
        }
    }
    return std::nullopt;
}

} // namespace

std::uint8_t nmea_checksum(std::string_view body) {
    std::uint8_t x = 0;
    for (char c : body)
        x ^= static_cast<std::uint8_t>(c);
    return x;
}

NmeaFrame parse_sentence(std::string_view line) {
    line = csv::trim(line);
    if (line.empty())
        throw parse_error("empty line");

    std::optional<Timestamp> tag_time;
    if (line.front() == '\\') {
        const auto close = line.find('\\', 1);
        if (close == std::string_view::npos)
            throw parse_error("unterminated tag block");
        tag_time = parse_tag_block(line.substr(1, close - 1));
        line = line.substr(close + 1);
        if (line.empty())
            throw parse_error("tag block without sentence");
    }

    if (line.front() != '!' && line.front() != '$')
        throw parse_error("sentence must start with '!' or '$'");
    const auto star = line.rfind('*');
    if (star == std::string_view::npos || star + 3 != line.size())
        throw parse_error("missing or misplaced checksum");
    const std::string_view body = line.substr(1, star - 1);
    const std::uint8_t expected = parse_hex_byte(line.substr(star + 1));
    if (nmea_checksum(body) != expected)
        throw Error(ErrorKind::ChecksumError, "checksum mismatch");

    const auto fields = split_view(body, ',');
    if (fields.size() != 7)
        throw parse_error("expected 7 fields, got " + std::to_string(fields.size()));

    NmeaFrame frame;
    frame.tag = std::string(fields[0]);
    if (frame.tag.size() != 5 || (frame.tag.substr(2) != "VDM" && frame.tag.substr(2) != "VDO"))
        throw parse_error("not an AIVDM/AIVDO sentence: " + frame.tag);
    frame.fragment_count = small_int(fields[1], 1, 9, "fragment count");
    frame.fragment_index = small_int(fields[2], 1, 9, "fragment index");
    if (frame.fragment_index > frame.fragment_count)
        throw parse_error("fragment index exceeds fragment count");
    if (!fields[3].empty())
        frame.message_id = small_int(fields[3], 0, 9, "message id");
    if (fields[4].size() > 1)
        throw parse_error("bad channel field");
    frame.channel = fields[4].empty() ? '\0' : fields[4][0];
    frame.payload = std::string(fields[5]);
    frame.fill_bits = small_int(fields[6], 0, 5, "fill bits");
    frame.checksum = expected;
    frame.tag_time = tag_time;
    return frame;
}

std::string format_sentence(const NmeaFrame& frame) {
    std::string body = frame.tag + ',' + std::to_string(frame.fragment_count) + ',' +
                       std::to_string(frame.fragment_index) + ',' +
                       (frame.message_id ? std::to_string(*frame.message_id) : std::string()) + ',' +
                       (frame.channel ? std::string(1, frame.channel) : std::string()) + ',' + frame.payload +
                       ',' + std::to_string(frame.fill_bits);
    char cs[3];
    std::snprintf(cs, sizeof cs, "%02X", nmea_checksum(body));
    std::string out;
    if (frame.tag_time) {
        const std::string tag = "c:" + std::to_string(*frame.tag_time);
        char tcs[3];
        std::snprintf(tcs, sizeof tcs, "%02X", nmea_checksum(tag));
        out = "\\" + tag + "*" + tcs + "\\";
    }
    return out + "!" + body + "*" + cs;
}

// ---------------------------------------------------------------------------

std::optional<AssembledPayload> MultipartAssembler::push(const NmeaFrame& frame, double now_s) {
    ++frame_counter_;
    expire(now_s);

    if (frame.fragment_count == 1)
        return AssembledPayload{frame.payload, frame.fill_bits, frame.channel, frame.tag_time};

    const auto key = std::make_pair(frame.message_id.value_or(-1), frame.channel);
    auto it = pending_.find(key);

    if (frame.fragment_index == 1) {
        if (it != pending_.end()) {
            ++incomplete_;
            pending_.erase(it);
        }
        Pending p;
        p.parts.resize(static_cast<std::size_t>(frame.fragment_count));
        p.parts[0] = frame.payload;
        p.first_seen_frame = frame_counter_;
        p.first_seen_s = now_s;
        p.tag_time = frame.tag_time;
        pending_.emplace(key, std::move(p));
        return std::nullopt;
    }

    if (it == pending_.end()) {
        // continuation without a head fragment
        ++incomplete_;
        return std::nullopt;
    }
    Pending& p = it->second;
    if (p.parts.size() != static_cast<std::size_t>(frame.fragment_count)) {
        ++incomplete_;
        pending_.erase(it);
        return std::nullopt;
    }
    p.parts[static_cast<std::size_t>(frame.fragment_index - 1)] = frame.payload;
    if (frame.fragment_index == frame.fragment_count)
        p.fill_bits = frame.fill_bits;

    for (const auto& part : p.parts)
        if (!part)
            return std::nullopt;

    AssembledPayload out;
    for (const auto& part : p.parts)
        out.payload += *part;
    out.fill_bits = p.fill_bits;
    out.channel = key.second;
    out.tag_time = p.tag_time;
    pending_.erase(it);
    return out;
}

void MultipartAssembler::expire(double now_s) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        const bool too_many = frame_counter_ - it->second.first_seen_frame > limits_.max_frames;
        const bool too_old = now_s - it->second.first_seen_s > limits_.max_age_s;
        if (too_many || too_old) {
            ++incomplete_;
            it = pending_.erase(it);
        } else {
            ++it;
        }
    }
}

std::size_t MultipartAssembler::flush() {
    const std::size_t n = pending_.size();
    incomplete_ += n;
    pending_.clear();
    return n;
}

// ---------------------------------------------------------------------------

SixBitBuffer SixBitBuffer::dearmor(std::string_view payload, int fill_bits) {
    if (payload.empty())
        throw parse_error("empty payload");
    if (fill_bits < 0 || fill_bits > 5)
        throw parse_error("fill bits out of range");
    SixBitBuffer buf;
    buf.bits_.reserve(payload.size() * 6);
    for (char ch : payload) {
        const auto c = static_cast<unsigned char>(ch);
        int v;
        if (c >= 48 && c <= 87)
            v = c - 48;
        else if (c >= 96 && c <= 119)
            v = c - 56;
        else
            throw parse_error(std::string("invalid armoring character '") + ch + "'");
        for (int b = 5; b >= 0; --b)
            buf.bits_.push_back(static_cast<std::uint8_t>((v >> b) & 1));
    }
    buf.fill_bits_ = fill_bits;
    return buf;
}

SixBitBuffer SixBitBuffer::with_bits(std::size_t nbits) {
    SixBitBuffer buf;
    const std::size_t padded = (nbits + 5) / 6 * 6;
    buf.bits_.assign(padded, 0);
    buf.fill_bits_ = static_cast<int>(padded - nbits);
    return buf;
}

std::string SixBitBuffer::armor() const {
    std::string out;
    out.reserve(bits_.size() / 6);
    for (std::size_t i = 0; i + 6 <= bits_.size(); i += 6) {
        int v = 0;
        for (std::size_t b = 0; b < 6; ++b)
            v = (v << 1) | bits_[i + b];
        out.push_back(static_cast<char>(v < 40 ? v + 48 : v + 56));
    }
    return out;
}

std::uint32_t SixBitBuffer::get_uint(std::size_t start, std::size_t len) const {
    if (len > 32 || start + len > bit_length())
        throw parse_error("bit field beyond payload");
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < len; ++i)
        v = (v << 1) | bits_[start + i];
    return v;
}

std::int32_t SixBitBuffer::get_int(std::size_t start, std::size_t len) const {
    const std::uint32_t raw = get_uint(start, len);
    if (len < 32 && (raw & (1u << (len - 1))))
        return static_cast<std::int32_t>(raw | ~((1u << len) - 1u));
    return static_cast<std::int32_t>(raw);
}

void SixBitBuffer::put_uint(std::size_t start, std::size_t len, std::uint32_t value) {
    if (len > 32 || start + len > bit_length())
        throw Error(ErrorKind::InvalidArgument, "bit field beyond buffer");
    for (std::size_t i = 0; i < len; ++i)
        bits_[start + i] = static_cast<std::uint8_t>((value >> (len - 1 - i)) & 1u);
}

void SixBitBuffer::put_int(std::size_t start, std::size_t len, std::int32_t value) {
    const std::uint32_t mask = len >= 32 ? 0xFFFFFFFFu : ((1u << len) - 1u);
    put_uint(start, len, static_cast<std::uint32_t>(value) & mask);
}

namespace {

struct Layout {
    std::size_t sog, lon, lat, cog, heading, second;
};

constexpr Layout kClassA{50, 61, 89, 116, 128, 137};
constexpr Layout kClassB{46, 57, 85, 112, 124, 133};
constexpr std::size_t kPositionReportBits = 168;

constexpr std::int32_t kRawLonUnavailable = 181 * 600000;  // 0x6791AC0
constexpr std::int32_t kRawLatUnavailable = 91 * 600000;   // 0x3412140

const Layout& layout_for(int type) {
    if (type >= 1 && type <= 3)
        return kClassA;
    if (type == 18)
        return kClassB;
    throw Error(ErrorKind::UnsupportedType, "message type " + std::to_string(type));
}

} // namespace

AisRecord PositionReport::to_record(Timestamp t) const {
    AisRecord r;
    r.vessel = mmsi;
    r.timestamp = t;
    r.lat = lat.value_or(kLatUnavailable);
    r.lon = lon.value_or(kLonUnavailable);
    r.sog = sog.value_or(kSpeedUnavailable);
    r.cog = cog.value_or(kCourseUnavailable);
    r.heading = heading;
    return r;
}

PositionReport decode_payload(std::string_view payload, int fill_bits) {
    const auto buf = SixBitBuffer::dearmor(payload, fill_bits);
    if (buf.bit_length() < 6)
        throw parse_error("payload too short for a message type");
    PositionReport rep;
    rep.type = static_cast<int>(buf.get_uint(0, 6));
    const Layout& lay = layout_for(rep.type);
    if (buf.bit_length() < kPositionReportBits)
        throw parse_error("truncated position report (" + std::to_string(buf.bit_length()) + " bits)");

    rep.mmsi = VesselId(buf.get_uint(8, 30));

    const std::uint32_t sog = buf.get_uint(lay.sog, 10);
    if (sog != 1023)
        rep.sog = sog / 10.0;

    const std::int32_t lon = buf.get_int(lay.lon, 28);
    if (lon != kRawLonUnavailable)
        rep.lon = lon / 600000.0;

    const std::int32_t lat = buf.get_int(lay.lat, 27);
    if (lat != kRawLatUnavailable)
        rep.lat = lat / 600000.0;

    const std::uint32_t cog = buf.get_uint(lay.cog, 12);
    if (cog < 3600)
        rep.cog = cog / 10.0;

    const std::uint32_t heading = buf.get_uint(lay.heading, 9);
    if (heading < 360)
        rep.heading = static_cast<std::uint16_t>(heading);

    rep.utc_second = static_cast<int>(buf.get_uint(lay.second, 6));
    return rep;
}

std::pair<std::string, int> encode_position_report(const PositionReport& rep) {
    const Layout& lay = layout_for(rep.type);
    auto buf = SixBitBuffer::with_bits(kPositionReportBits);
    buf.put_uint(0, 6, static_cast<std::uint32_t>(rep.type));
    buf.put_uint(8, 30, rep.mmsi.value());
    if (lay.sog == kClassA.sog)
        buf.put_int(42, 8, -128);  // rate of turn: not available
    buf.put_uint(lay.sog, 10, rep.sog ? static_cast<std::uint32_t>(std::lround(*rep.sog * 10.0)) : 1023u);
    buf.put_int(lay.lon, 28, rep.lon ? static_cast<std::int32_t>(std::lround(*rep.lon * 600000.0)) : kRawLonUnavailable);
    buf.put_int(lay.lat, 27, rep.lat ? static_cast<std::int32_t>(std::lround(*rep.lat * 600000.0)) : kRawLatUnavailable);
    buf.put_uint(lay.cog, 12, rep.cog ? static_cast<std::uint32_t>(std::lround(*rep.cog * 10.0)) % 3600u : 3600u);
    buf.put_uint(lay.heading, 9, rep.heading ? *rep.heading : 511u);
    buf.put_uint(lay.second, 6, static_cast<std::uint32_t>(rep.utc_second));
    return {buf.armor(), buf.fill_bits()};
}

// ---------------------------------------------------------------------------

std::string_view to_string(Reject reason) {
    switch (reason) {
    case Reject::BadChecksum: return "bad_checksum";
    case Reject::Malformed: return "malformed";
    case Reject::UnsupportedType: return "unsupported_type";
    case Reject::IncompleteMultipart: return "incomplete_multipart";
    case Reject::InvalidPosition: return "invalid_position";
    case Reject::SentinelSpeed: return "sentinel_speed";
    case Reject::Duplicate: return "duplicate";
    case Reject::Stale: return "stale";
    case Reject::UnparseableRow: return "unparseable_row";
    case Reject::Count_: break;
    }
    return "unknown";
}

std::uint64_t CleanReport::total_rejected() const {
    std::uint64_t n = 0;
    for (auto c : rejected)
        n += c;
    return n;
}

void CleanReport::absorb_upstream(const CleanReport& upstream) {
    for (std::size_t i = 0; i < kRejectReasons; ++i)
        rejected[i] += upstream.rejected[i];
    records_in += upstream.total_rejected();
}

void CleanReport::write_csv(std::ostream& os) const {
    os << "metric,count\n";
    os << "records_in," << records_in << '\n';
    os << "records_out," << records_out << '\n';
    for (std::size_t i = 0; i < kRejectReasons; ++i)
        os << "rejected_" << to_string(static_cast<Reject>(i)) << ',' << rejected[i] << '\n';
}

std::optional<AisRecord> Cleaner::accept(const AisRecord& record) {
    if (!position_valid(record.lat, record.lon)) {
        report_.reject(Reject::InvalidPosition);
        return std::nullopt;
    }
    if (!std::isfinite(record.sog) || record.sog < 0.0 || record.sog >= kSpeedUnavailable) {
        report_.reject(Reject::SentinelSpeed);
        return std::nullopt;
    }
    const Key key{record.vessel.value(), record.timestamp};
    if (seen_.contains(key)) {
        report_.reject(Reject::Duplicate);
        return std::nullopt;
    }
    auto latest = latest_.find(key.mmsi);
    if (latest != latest_.end() && record.timestamp < latest->second - stale_after_) {
        report_.reject(Reject::Stale);
        return std::nullopt;
    }
    seen_.insert(key);
    if (latest == latest_.end())
        latest_.emplace(key.mmsi, record.timestamp);
    else
        latest->second = std::max(latest->second, record.timestamp);

    AisRecord out = record;
    if (!out.has_course())
        out.cog = kCourseUnavailable;
    report_.accept();
    return out;
}

std::pair<std::vector<AisRecord>, CleanReport> clean(const std::vector<AisRecord>& records, Timestamp stale_after_s) {
    Cleaner cleaner(stale_after_s);
    std::vector<AisRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (auto ok = cleaner.accept(r))
            out.push_back(*ok);
    return {std::move(out), cleaner.report()};
}

// ---------------------------------------------------------------------------

std::optional<AisRecord> NmeaDecoder::feed(std::string_view line, std::optional<Timestamp> fallback_time) {
    if (csv::trim(line).empty())
        return std::nullopt;

    NmeaFrame frame;
    try {
        frame = parse_sentence(line);
    } catch (const Error& e) {
        report_.reject(e.kind() == ErrorKind::ChecksumError ? Reject::BadChecksum : Reject::Malformed);
        return std::nullopt;
    }
    if (frame.tag_time)
        last_time_ = frame.tag_time;

    const std::optional<Timestamp> clock = frame.tag_time ? frame.tag_time : (last_time_ ? last_time_ : fallback_time);
    auto assembled = assembler_.push(frame, clock ? static_cast<double>(*clock) : 0.0);
    for (; counted_incomplete_ < assembler_.incomplete(); ++counted_incomplete_)
        report_.reject(Reject::IncompleteMultipart);
    if (!assembled)
        return std::nullopt;

    PositionReport rep;
    try {
        rep = decode_payload(assembled->payload, assembled->fill_bits);
    } catch (const Error& e) {
        report_.reject(e.kind() == ErrorKind::UnsupportedType ? Reject::UnsupportedType : Reject::Malformed);
        return std::nullopt;
    }
    const auto t = assembled->tag_time ? assembled->tag_time : clock;
    if (!t) {
        report_.reject(Reject::Malformed);
        return std::nullopt;
    }
    report_.accept();
    return rep.to_record(*t);
}

void NmeaDecoder::finish() {
    assembler_.flush();
    for (; counted_incomplete_ < assembler_.incomplete(); ++counted_incomplete_)
        report_.reject(Reject::IncompleteMultipart);
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kDmaColumns[] = {
    "# Timestamp", "Type of mobile", "MMSI", "Latitude", "Longitude", "Navigational status", "ROT", "SOG", "COG",
    "Heading", "IMO", "Callsign", "Name", "Ship type", "Cargo type", "Width", "Length",
    "Type of position fixing device", "Draught", "Destination", "ETA", "Data source type", "A", "B", "C", "D"};

struct DmaColumns {
    std::size_t timestamp, mobile, mmsi, lat, lon, sog, cog, heading;
};

DmaColumns locate_columns(const std::vector<std::string>& header) {
    auto find = [&](std::string_view name, std::string_view alt = {}) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            const auto h = csv::trim(header[i]);
            if (h == name || (!alt.empty() && h == alt))
                return i;
        }
        throw Error(ErrorKind::FormatError, "missing mandatory column '" + std::string(name) + "'");
    };
    return {find("# Timestamp", "Timestamp"), find("Type of mobile"), find("MMSI"), find("Latitude"),
            find("Longitude"), find("SOG"), find("COG"), find("Heading")};
}

bool is_position_mobile(std::string_view type) { return type == "Class A" || type == "Class B"; }

} // namespace

Timestamp parse_dma_timestamp(std::string_view text) {
    text = csv::trim(text);
    // DD/MM/YYYY HH:MM:SS
    if (text.size() != 19 || text[2] != '/' || text[5] != '/' || text[10] != ' ' || text[13] != ':' ||
        text[16] != ':')
        throw parse_error("timestamp not in DD/MM/YYYY HH:MM:SS form: '" + std::string(text) + "'");
    const int day = small_int(text.substr(0, 2), 1, 31, "day");
    const int month = small_int(text.substr(3, 2), 1, 12, "month");
    const int year = small_int(text.substr(6, 4), 1970, 9999, "year");
    const int hh = small_int(text.substr(11, 2), 0, 23, "hour");
    const int mm = small_int(text.substr(14, 2), 0, 59, "minute");
    const int ss = small_int(text.substr(17, 2), 0, 60, "second");
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                          std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok())
        throw parse_error("invalid calendar date");
    const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
    return static_cast<Timestamp>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

std::string format_dma_timestamp(Timestamp t) {
    const auto days = std::chrono::floor<std::chrono::days>(std::chrono::sys_seconds{std::chrono::seconds{t}});
    const std::chrono::year_month_day ymd{days};
    const auto secs = t - days.time_since_epoch().count() * 86400;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%02u/%02u/%04d %02lld:%02lld:%02lld", static_cast<unsigned>(ymd.day()),
                  static_cast<unsigned>(ymd.month()), static_cast<int>(ymd.year()),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

DmaReadResult read_dma_csv(std::istream& in) {
    DmaReadResult result;
    std::string line;
    if (!std::getline(in, line))
        throw Error(ErrorKind::FormatError, "missing header row");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
        line.erase(0, 3);  // UTF-8 BOM
    const auto cols = locate_columns(csv::split_line(line));
    const std::size_t needed =
        std::max({cols.timestamp, cols.mobile, cols.mmsi, cols.lat, cols.lon, cols.sog, cols.cog, cols.heading}) + 1;

    while (std::getline(in, line)) {
        if (csv::trim(line).empty())
            continue;
        try {
            const auto f = csv::split_line(line);
            if (f.size() < needed)
                throw parse_error("short row");
            if (!is_position_mobile(csv::trim(f[cols.mobile]))) {
                result.report.reject(Reject::UnsupportedType);
                continue;
            }
            AisRecord r;
            r.timestamp = parse_dma_timestamp(f[cols.timestamp]);
            r.vessel = VesselId(csv::parse_int(f[cols.mmsi]));
            r.lat = csv::parse_double(f[cols.lat]);
            r.lon = csv::parse_double(f[cols.lon]);
            r.sog = csv::trim(f[cols.sog]).empty() ? kSpeedUnavailable : csv::parse_double(f[cols.sog]);
            r.cog = csv::trim(f[cols.cog]).empty() ? kCourseUnavailable : csv::parse_double(f[cols.cog]);
            if (!csv::trim(f[cols.heading]).empty()) {
                const double h = csv::parse_double(f[cols.heading]);
                if (h >= 0.0 && h < 360.0)
                    r.heading = static_cast<std::uint16_t>(h);
            }
            result.records.push_back(r);
            result.report.accept();
        } catch (const Error&) {
            result.report.reject(Reject::UnparseableRow);
        }
    }
    return result;
}

DmaReadResult read_dma_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    return read_dma_csv(in);
}

void write_dma_header(std::ostream& os) {
    bool first = true;
    for (auto c : kDmaColumns) {
        if (!first)
            os << ',';
        os << c;
        first = false;
    }
    os << '\n';
}

void write_dma_row(std::ostream& os, const AisRecord& r, std::string_view mobile_type) {
    os << format_dma_timestamp(r.timestamp) << ',' << mobile_type << ',' << r.vessel.value() << ','
       << csv::format_double(r.lat) << ',' << csv::format_double(r.lon) << ','
       << (r.sog < 0.5 ? "Moored" : "Under way using engine") << ",,";
    if (r.sog < kSpeedUnavailable)
        os << csv::format_double(r.sog);
    os << ',';
    if (r.has_course())
        os << csv::format_double(r.cog);
    os << ',';
    if (r.heading)
        os << *r.heading;
    // IMO .. D: not modelled
    os << ",Unknown,,,Undefined,,,,GPS,,,,AIS,,,,\n";
}

IngestResult ingest_file(const std::filesystem::path& path, InputFormat format, Timestamp stale_after_s) {
    IngestResult out;
    Cleaner cleaner(stale_after_s);
    if (format == InputFormat::DmaCsv) {
        auto raw = read_dma_csv(path);
        for (const auto& r : raw.records)
            if (auto ok = cleaner.accept(r))
                out.records.push_back(*ok);
        out.report = cleaner.report();
        out.report.absorb_upstream(raw.report);
        return out;
    }
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    NmeaDecoder decoder;
    std::string line;
    while (std::getline(in, line))
        if (auto rec = decoder.feed(line))
            if (auto ok = cleaner.accept(*rec))
                out.records.push_back(*ok);
    decoder.finish();
    out.report = cleaner.report();
    out.report.absorb_upstream(decoder.report());
    return out;
}

std::string to_json_line(const AisRecord& r) {
    nlohmann::ordered_json j;
    j["vessel"] = r.vessel.value();
    j["timestamp"] = r.timestamp;
    j["lat"] = r.lat;
    j["lon"] = r.lon;
    j["sog"] = r.sog;
    j["cog"] = r.has_course() ? nlohmann::ordered_json(r.cog) : nlohmann::ordered_json(nullptr);
    j["heading"] = r.heading ? nlohmann::ordered_json(*r.heading) : nlohmann::ordered_json(nullptr);
    j["anomaly"] = r.anomaly;
    return j.dump();
}

void write_ndjson(std::ostream& os, const std::vector<AisRecord>& records) {
    for (const auto& r : records)
        os << to_json_line(r) << '\n';
}

} // namespace vesseledge::ais
