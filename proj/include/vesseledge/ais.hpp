#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vesseledge/core.hpp"

namespace vesseledge::ais {

// ---------------------------------------------------------------------------
// NMEA 0183 framing
// ---------------------------------------------------------------------------

struct NmeaFrame {
    std::string tag;                    // talker + sentence type, e.g. "AIVDM"
    int fragment_count = 1;
    int fragment_index = 1;
    std::optional<int> message_id;
    char channel = '\0';                // '\0' when the field is empty
    std::string payload;
    int fill_bits = 0;
    std::uint8_t checksum = 0;
    std::optional<Timestamp> tag_time;  // NMEA 4.10 tag block "c:" (unix seconds), if present
};

/// XOR of every character in `body` (the text between '!'/'$' and '*').
std::uint8_t nmea_checksum(std::string_view body);

/// Parses one AIVDM/AIVDO sentence, optionally preceded by a tag block.
/// Throws Error{ParseError} on malformed input and Error{ChecksumError} on mismatch.
NmeaFrame parse_sentence(std::string_view line);

/// Builds sentence text (with checksum, without line terminator) for a frame.
std::string format_sentence(const NmeaFrame& frame);

struct AssembledPayload {
    std::string payload;
    int fill_bits = 0;
    char channel = '\0';
    std::optional<Timestamp> tag_time;
};

/// Joins multi-fragment messages. A pending message is abandoned (and counted
/// as incomplete) once `max_frames` later frames or `max_age_s` seconds pass
/// without its missing fragment.
class MultipartAssembler {
public:
    struct Limits {
        std::size_t max_frames = 64;
        double max_age_s = 60.0;
    };

    MultipartAssembler() = default;
    explicit MultipartAssembler(Limits limits) : limits_(limits) {}

    std::optional<AssembledPayload> push(const NmeaFrame& frame, double now_s);

    /// Abandons all pending messages; returns how many were dropped.
    std::size_t flush();

    std::size_t incomplete() const { return incomplete_; }
    std::size_t pending() const { return pending_.size(); }

private:
    struct Pending {
        std::vector<std::optional<std::string>> parts;
        int fill_bits = 0;
        std::size_t first_seen_frame = 0;
        double first_seen_s = 0.0;
        std::optional<Timestamp> tag_time;
    };

    void expire(double now_s);

    Limits limits_;
    std::map<std::pair<int, char>, Pending> pending_;
    std::size_t frame_counter_ = 0;
    std::size_t incomplete_ = 0;
};

// ---------------------------------------------------------------------------
// Six-bit payload armoring and ITU-R M.1371 position reports
// ---------------------------------------------------------------------------

/// Bit buffer holding a de-armored payload (fill bits retained so re-armoring is exact).
class SixBitBuffer {
public:
    SixBitBuffer() = default;
    static SixBitBuffer dearmor(std::string_view payload, int fill_bits);

    std::size_t bit_length() const { return bits_.size() - static_cast<std::size_t>(fill_bits_); }
    int fill_bits() const { return fill_bits_; }

    std::uint32_t get_uint(std::size_t start, std::size_t len) const;
    std::int32_t get_int(std::size_t start, std::size_t len) const;

    void put_uint(std::size_t start, std::size_t len, std::uint32_t value);
    void put_int(std::size_t start, std::size_t len, std::int32_t value);

    /// Allocates `nbits` zeroed payload bits plus padding up to a six-bit boundary.
    static SixBitBuffer with_bits(std::size_t nbits);

    std::string armor() const;

private:
    std::vector<std::uint8_t> bits_;
    int fill_bits_ = 0;
};

struct PositionReport {
    int type = 0;
    VesselId mmsi;
    std::optional<double> lat;      // nullopt = 91 deg sentinel
    std::optional<double> lon;      // nullopt = 181 deg sentinel
    std::optional<double> sog;      // nullopt = 1023 sentinel
    std::optional<double> cog;      // nullopt = 3600 sentinel
    std::optional<std::uint16_t> heading;  // nullopt = 511 sentinel
    int utc_second = 60;            // 60 = not available

    /// Materializes a record at time `t`; unavailable fields become the AIS sentinels.
    AisRecord to_record(Timestamp t) const;
};

/// Decodes message types 1, 2, 3 and 18. Unsupported types throw
/// Error{UnsupportedType}; short or mis-armored payloads throw Error{ParseError}.
PositionReport decode_payload(std::string_view payload, int fill_bits);

/// Encodes a position report of type 1/2/3/18; returns payload text and fill bits.
std::pair<std::string, int> encode_position_report(const PositionReport& report);

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

enum class Reject : std::size_t {
    BadChecksum,
    Malformed,
    UnsupportedType,
    IncompleteMultipart,
    InvalidPosition,
    SentinelSpeed,
    Duplicate,
    Stale,
    UnparseableRow,
    Count_,
};

inline constexpr std::size_t kRejectReasons = static_cast<std::size_t>(Reject::Count_);

std::string_view to_string(Reject reason);

/// Ingestion accounting. records_in == records_out + total_rejected() always holds.
struct CleanReport {
    std::uint64_t records_in = 0;
    std::uint64_t records_out = 0;
    std::array<std::uint64_t, kRejectReasons> rejected{};

    void accept() { ++records_in; ++records_out; }
    void reject(Reject reason) { ++records_in; ++rejected[static_cast<std::size_t>(reason)]; }
    std::uint64_t count(Reject reason) const { return rejected[static_cast<std::size_t>(reason)]; }
    std::uint64_t total_rejected() const;
    bool conserved() const { return records_in == records_out + total_rejected(); }

    /// Folds an upstream report in: its rejections are added; its accepted
    /// records are assumed to be the input of this stage and are not re-counted.
    void absorb_upstream(const CleanReport& upstream);

    void write_csv(std::ostream& os) const;

    friend bool operator==(const CleanReport&, const CleanReport&) = default;
};

inline constexpr Timestamp kDefaultStaleSeconds = 600;

/// Streaming cleaner: position/speed validity, (vessel, timestamp) dedupe with
/// first-wins, and per-vessel staleness relative to the newest accepted record.
class Cleaner {
public:
    explicit Cleaner(Timestamp stale_after_s = kDefaultStaleSeconds) : stale_after_(stale_after_s) {}

    std::optional<AisRecord> accept(const AisRecord& record);

    const CleanReport& report() const { return report_; }
    CleanReport& report() { return report_; }

private:
    struct Key {
        std::uint32_t mmsi;
        Timestamp t;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept {
            return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(k.mmsi) << 34) ^
                                              static_cast<std::uint64_t>(k.t));
        }
    };

    Timestamp stale_after_;
    std::unordered_set<Key, KeyHash> seen_;
    std::unordered_map<std::uint32_t, Timestamp> latest_;
    CleanReport report_;
};

std::pair<std::vector<AisRecord>, CleanReport> clean(const std::vector<AisRecord>& records,
                                                    Timestamp stale_after_s = kDefaultStaleSeconds);

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

/// Line-at-a-time NMEA decoder: parse, assemble, decode. Failures are counted in
/// report() under checksum / malformed / unsupported / incomplete reasons.
class NmeaDecoder {
public:
    NmeaDecoder() = default;
    explicit NmeaDecoder(MultipartAssembler::Limits limits) : assembler_(limits) {}

    /// `fallback_time` stamps records whose sentence carries no tag-block time
    /// (and no earlier tag-block time was seen).
    std::optional<AisRecord> feed(std::string_view line, std::optional<Timestamp> fallback_time = std::nullopt);

    /// Ends the stream: pending multipart fragments are counted as incomplete.
    void finish();

    const CleanReport& report() const { return report_; }

private:
    MultipartAssembler assembler_;
    std::size_t counted_incomplete_ = 0;
    std::optional<Timestamp> last_time_;
    CleanReport report_;
};

struct DmaReadResult {
    std::vector<AisRecord> records;
    CleanReport report;  // unparseable rows and non-position mobiles
};

/// Reads the Danish Maritime Authority "aisdk" CSV layout. Throws Error{FormatError}
/// when a mandatory column is missing, Error{IoError} when the file cannot be read.
DmaReadResult read_dma_csv(const std::filesystem::path& path);
DmaReadResult read_dma_csv(std::istream& in);

/// Header and row writer for the same layout (used to produce fixtures and synthetic days).
void write_dma_header(std::ostream& os);
void write_dma_row(std::ostream& os, const AisRecord& record, std::string_view mobile_type = "Class A");

/// Parses "DD/MM/YYYY HH:MM:SS" as UTC.
Timestamp parse_dma_timestamp(std::string_view text);
std::string format_dma_timestamp(Timestamp t);

enum class InputFormat { Nmea, DmaCsv };

struct IngestResult {
    std::vector<AisRecord> records;  // cleaned, in input order
    CleanReport report;
};

/// File ingestion chain: decode (or CSV-parse) then clean.
IngestResult ingest_file(const std::filesystem::path& path, InputFormat format,
                         Timestamp stale_after_s = kDefaultStaleSeconds);

/// Newline-delimited JSON, one object per record.
void write_ndjson(std::ostream& os, const std::vector<AisRecord>& records);
std::string to_json_line(const AisRecord& record);

} // namespace vesseledge::ais
