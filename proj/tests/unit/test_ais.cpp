#include "doctest.h"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "vesseledge/ais.hpp"
#include "vesseledge/csv.hpp"

using namespace vesseledge;
using namespace vesseledge::ais;

namespace {

const std::string kType1 = "!AIVDM,1,1,,B,15M67FC000G?ufbE`FepT@3n00Sa,0*5C";

std::string with_payload_bits(int type, std::uint32_t lat_raw_override, std::uint32_t sog_raw) {
    auto buf = SixBitBuffer::with_bits(168);
    buf.put_uint(0, 6, static_cast<std::uint32_t>(type));
    buf.put_uint(8, 30, 219000001);
    buf.put_uint(50, 10, sog_raw);
    buf.put_int(61, 28, static_cast<std::int32_t>(11.9 * 600000));
    buf.put_uint(89, 27, lat_raw_override);
    buf.put_uint(116, 12, 1234);
    buf.put_uint(128, 9, 120);
    return buf.armor();
}

AisRecord rec(std::uint32_t mmsi, Timestamp t, double lat = 57.7, double lon = 11.9, double sog = 10.0) {
    AisRecord r;
    r.vessel = VesselId(mmsi);
    r.timestamp = t;
    r.lat = lat;
    r.lon = lon;
    r.sog = sog;
    r.cog = 90.0;
    return r;
}

} // namespace

TEST_CASE("parse_sentence well-formed single fragment") {
    const auto f = parse_sentence("  " + kType1 + "\r\n");
    CHECK(f.tag == "AIVDM");
    CHECK(f.fragment_count == 1);
    CHECK(f.fragment_index == 1);
    CHECK_FALSE(f.message_id.has_value());
    CHECK(f.channel == 'B');
    CHECK(f.payload == "15M67FC000G?ufbE`FepT@3n00Sa");
    CHECK(f.fill_bits == 0);
    CHECK(f.checksum == 0x5C);
    // reference decoder (pyais) reports mmsi 366053209, lat 37.802118, lon -122.341618, sog 0, cog 219.3
    const auto rep = decode_payload(f.payload, f.fill_bits);
    CHECK(rep.type == 1);
    CHECK(rep.mmsi.value() == 366053209u);
    CHECK(*rep.lat == doctest::Approx(37.802118).epsilon(1e-8));
    CHECK(*rep.lon == doctest::Approx(-122.341618).epsilon(1e-8));
    CHECK(*rep.sog == 0.0);
    CHECK(*rep.cog == doctest::Approx(219.3));
    CHECK(*rep.heading == 1);
}

TEST_CASE("parse_sentence errors") {
    auto kind_of = [](std::string_view line) {
        try {
            parse_sentence(line);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::IoError;  // sentinel: no error
    };
    CHECK(kind_of("") == ErrorKind::ParseError);
    CHECK(kind_of("   ") == ErrorKind::ParseError);
    std::string flipped = kType1;
    flipped.back() = 'D';
    CHECK(kind_of(flipped) == ErrorKind::ChecksumError);
    CHECK(kind_of("!AIVDM,1,1,,B,15M67FC000G?ufbE`FepT@3n00Sa,0") == ErrorKind::ParseError);
    CHECK(kind_of("$GPGGA,1,2*55") == ErrorKind::ParseError);
    CHECK(kind_of("hello world") == ErrorKind::ParseError);
    NmeaFrame f;
    f.tag = "AIVDM";
    f.fragment_count = 1;
    f.fragment_index = 2;
    f.payload = "1";
    CHECK(kind_of(format_sentence(f)) == ErrorKind::ParseError);
}

TEST_CASE("tag block time and round trip through format_sentence") {
    NmeaFrame f = parse_sentence(kType1);
    f.tag_time = 1530648000;
    const auto line = format_sentence(f);
    CHECK(line.front() == '\\');
    const auto g = parse_sentence(line);
    CHECK(g.tag_time == 1530648000);
    CHECK(g.payload == f.payload);
    CHECK(g.checksum == f.checksum);
}

TEST_CASE("multipart assembly") {
    MultipartAssembler asm_;
    SUBCASE("single fragment passes through") {
        const auto out = asm_.push(parse_sentence(kType1), 0.0);
        REQUIRE(out);
        CHECK(out->payload == "15M67FC000G?ufbE`FepT@3n00Sa");
    }
    SUBCASE("two fragments concatenated in order") {
        NmeaFrame a;
        a.tag = "AIVDM";
        a.fragment_count = 2;
        a.fragment_index = 1;
        a.message_id = 3;
        a.channel = 'A';
        a.payload = "ABC";
        NmeaFrame b = a;
        b.fragment_index = 2;
        b.payload = "DEF";
        b.fill_bits = 2;
        CHECK_FALSE(asm_.push(a, 0.0));
        const auto out = asm_.push(b, 1.0);
        REQUIRE(out);
        CHECK(out->payload == "ABCDEF");
        CHECK(out->fill_bits == 2);
        CHECK(asm_.incomplete() == 0);
    }
    SUBCASE("continuation without head is incomplete") {
        NmeaFrame b;
        b.fragment_count = 2;
        b.fragment_index = 2;
        b.message_id = 1;
        b.channel = 'A';
        b.payload = "X";
        CHECK_FALSE(asm_.push(b, 0.0));
        CHECK(asm_.incomplete() == 1);
    }
    SUBCASE("head expires after 64 frames") {
        NmeaFrame a;
        a.fragment_count = 2;
        a.fragment_index = 1;
        a.message_id = 1;
        a.channel = 'A';
        a.payload = "X";
        asm_.push(a, 0.0);
        const auto single = parse_sentence(kType1);
        for (int i = 0; i < 64; ++i)
            asm_.push(single, 0.0);
        CHECK(asm_.incomplete() == 0);
        asm_.push(single, 0.0);
        CHECK(asm_.incomplete() == 1);
        NmeaFrame b = a;
        b.fragment_index = 2;
        CHECK_FALSE(asm_.push(b, 0.0));
        CHECK(asm_.incomplete() == 2);
    }
    SUBCASE("head expires after 60 s") {
        NmeaFrame a;
        a.fragment_count = 2;
        a.fragment_index = 1;
        a.message_id = 1;
        a.channel = 'B';
        a.payload = "X";
        asm_.push(a, 100.0);
        asm_.push(parse_sentence(kType1), 160.0);
        CHECK(asm_.incomplete() == 0);
        asm_.push(parse_sentence(kType1), 160.5);
        CHECK(asm_.incomplete() == 1);
    }
}

TEST_CASE("decode_payload sentinels") {
    SUBCASE("latitude 91 deg") {
        const auto rep = decode_payload(with_payload_bits(1, 0x3412140, 100), 0);
        CHECK_FALSE(rep.lat.has_value());
        CHECK(rep.to_record(0).lat == kLatUnavailable);
    }
    SUBCASE("sog 1023") {
        const auto rep = decode_payload(with_payload_bits(3, static_cast<std::uint32_t>(57.7 * 600000), 1023), 0);
        CHECK_FALSE(rep.sog.has_value());
        CHECK(rep.to_record(0).sog == kSpeedUnavailable);
        CHECK(*rep.cog == doctest::Approx(123.4));
        CHECK(*rep.heading == 120);
    }
    SUBCASE("unsupported type") {
        CHECK_THROWS_WITH_AS(decode_payload(with_payload_bits(5, 0, 0), 0), doctest::Contains("unsupported"), Error);
    }
    SUBCASE("truncated") {
        const auto p = with_payload_bits(1, 0, 0);
        CHECK_THROWS_WITH_AS(decode_payload(p.substr(0, 20), 0), doctest::Contains("parse-error"), Error);
    }
    SUBCASE("bad armoring") {
        CHECK_THROWS_AS(decode_payload("15M67FC000G?ufbE`FepT@3n00S~", 0), Error);
    }
}

TEST_CASE("armoring round trip") {
    std::mt19937 rng(5);
    const std::string alphabet = "0123456789:;<=>?@ABCDEFGHIJKLMNOPQRSTUVW`abcdefghijklmnopqrstuvw";
    for (int i = 0; i < 500; ++i) {
        std::string payload;
        const int n = 1 + static_cast<int>(rng() % 80);
        for (int k = 0; k < n; ++k)
            payload.push_back(alphabet[rng() % alphabet.size()]);
        const int fill = static_cast<int>(rng() % 6);
        CHECK(SixBitBuffer::dearmor(payload, fill).armor() == payload);
    }
}

TEST_CASE("encode/decode position report round trip") {
    PositionReport rep;
    rep.type = 18;
    rep.mmsi = VesselId(265123456);
    rep.lat = 57.70123;
    rep.lon = 11.91234;
    rep.sog = 12.3;
    rep.cog = 359.9;
    rep.heading = 359;
    rep.utc_second = 42;
    const auto [payload, fill] = encode_position_report(rep);
    const auto back = decode_payload(payload, fill);
    CHECK(back.type == 18);
    CHECK(back.mmsi == rep.mmsi);
    CHECK(*back.lat == doctest::Approx(*rep.lat).epsilon(1e-7));
    CHECK(*back.lon == doctest::Approx(*rep.lon).epsilon(1e-7));
    CHECK(*back.sog == doctest::Approx(12.3));
    CHECK(*back.cog == doctest::Approx(359.9));
    CHECK(back.utc_second == 42);
}

TEST_CASE("decoder conformance against reference corpus") {
    std::ifstream nmea(std::string(TEST_DATA_DIR) + "/ais_corpus.nmea");
    std::ifstream ref(std::string(TEST_DATA_DIR) + "/ais_reference.csv");
    REQUIRE(nmea);
    REQUIRE(ref);
    std::string line, row;
    std::getline(ref, row);  // header
    std::size_t total = 0, agree = 0;
    while (std::getline(nmea, line) && std::getline(ref, row)) {
        const auto f = csv::split_line(row);
        ++total;
        try {
            const auto frame = parse_sentence(line);
            const auto rep = decode_payload(frame.payload, frame.fill_bits);
            const auto r = rep.to_record(0);
            const bool ok = rep.type == std::stoi(f[0]) && r.vessel.value() == std::stoul(f[1]) &&
                            std::abs(r.lat - std::stod(f[2])) <= 1e-6 &&
                            std::abs(r.lon - std::stod(f[3])) <= 1e-6 &&
                            std::abs(r.sog - std::stod(f[4])) <= 1e-9 &&
                            std::abs(r.cog - std::stod(f[5])) <= 1e-9 &&
                            r.heading.value_or(511) == std::stoul(f[6]);
            agree += ok ? 1 : 0;
        } catch (const Error&) {
        }
    }
    CHECK(total >= 1000);
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.999);
}

TEST_CASE("NmeaDecoder accounting") {
    NmeaDecoder dec;
    std::string bad = kType1;
    bad.back() = '0';
    CHECK_FALSE(dec.feed(kType1));  // no timestamp available -> rejected
    CHECK(dec.feed(kType1, 1530648000).has_value());
    CHECK_FALSE(dec.feed(bad, 1530648000));
    CHECK_FALSE(dec.feed("garbage", 1530648000));
    dec.finish();
    const auto& rep = dec.report();
    CHECK(rep.records_out == 1);
    CHECK(rep.count(Reject::BadChecksum) == 1);
    CHECK(rep.count(Reject::Malformed) == 2);
    CHECK(rep.conserved());
}

TEST_CASE("read_dma_csv") {
    SUBCASE("header only") {
        std::istringstream in("# Timestamp,Type of mobile,MMSI,Latitude,Longitude,Navigational status,ROT,SOG,COG,"
                              "Heading,IMO,Callsign,Name,Ship type\n");
        const auto res = read_dma_csv(in);
        CHECK(res.records.empty());
        CHECK(res.report.records_in == 0);
    }
    SUBCASE("one valid row, hand-parsed") {
        std::istringstream in(
            "# Timestamp,Type of mobile,MMSI,Latitude,Longitude,Navigational status,ROT,SOG,COG,Heading,IMO,"
            "Callsign,Name,Ship type,Cargo type,Width,Length,Type of position fixing device,Draught,Destination,"
            "ETA,Data source type,A,B,C,D\n"
            "03/07/2018 13:45:12,Class A,265547250,57.693533,11.896633,Under way using engine,0.0,12.1,147.5,148,"
            "IMO9235555,SJPW,\"STENA DANICA, SE\",Passenger,,28,155,GPS,6.3,GOTHENBURG,03/07/2018 15:00:00,AIS,"
            ",,,\n");
        const auto res = read_dma_csv(in);
        REQUIRE(res.records.size() == 1);
        const auto& r = res.records[0];
        CHECK(r.timestamp == 1530625512);  // 2018-07-03T13:45:12Z
        CHECK(r.vessel.value() == 265547250u);
        CHECK(r.lat == 57.693533);
        CHECK(r.lon == 11.896633);
        CHECK(r.sog == 12.1);
        CHECK(r.cog == 147.5);
        CHECK(r.heading == 148);
        CHECK_FALSE(r.anomaly);
    }
    SUBCASE("latitude 91 rejected by cleaning as invalid position") {
        std::istringstream in("# Timestamp,Type of mobile,MMSI,Latitude,Longitude,SOG,COG,Heading\n"
                              "03/07/2018 00:00:01,Class A,219000001,91.0,11.9,3.0,10.0,\n"
                              "03/07/2018 00:00:02,Base Station,2190047,57.7,11.9,0,,\n"
                              "03/07/2018 00:00:03,Class B,219000002,57.7,11.9,3.0,,\n"
                              "32/07/2018 00:00:03,Class B,219000002,57.7,11.9,3.0,,\n");
        const auto raw = read_dma_csv(in);
        CHECK(raw.records.size() == 2);
        CHECK(raw.report.count(Reject::UnsupportedType) == 1);
        CHECK(raw.report.count(Reject::UnparseableRow) == 1);
        auto [out, report] = clean(raw.records);
        report.absorb_upstream(raw.report);
        CHECK(out.size() == 1);
        CHECK_FALSE(out[0].has_course());
        CHECK(report.count(Reject::InvalidPosition) == 1);
        CHECK(report.records_in == 4);
        CHECK(report.conserved());
    }
    SUBCASE("missing mandatory column") {
        std::istringstream in("# Timestamp,Type of mobile,MMSI,Latitude,SOG,COG,Heading\n");
        CHECK_THROWS_WITH_AS(read_dma_csv(in), doctest::Contains("Longitude"), Error);
    }
}

TEST_CASE("DMA timestamps are UTC") {
    CHECK(parse_dma_timestamp("03/07/2018 00:00:00") == 1530576000);
    CHECK(format_dma_timestamp(1530625512) == "03/07/2018 13:45:12");
    CHECK_THROWS_AS(parse_dma_timestamp("2018-07-03 00:00:00"), Error);
    CHECK_THROWS_AS(parse_dma_timestamp("31/02/2018 00:00:00"), Error);
}

TEST_CASE("clean rules") {
    SUBCASE("duplicate (mmsi, t): second rejected") {
        auto [out, rep] = clean({rec(1, 10), rec(1, 10, 57.8)});
        REQUIRE(out.size() == 1);
        CHECK(out[0].lat == 57.7);
        CHECK(rep.count(Reject::Duplicate) == 1);
    }
    SUBCASE("lat 90.5 rejected") {
        auto [out, rep] = clean({rec(1, 10, 90.5)});
        CHECK(out.empty());
        CHECK(rep.count(Reject::InvalidPosition) == 1);
    }
    SUBCASE("sentinel speed") {
        auto [out, rep] = clean({rec(1, 10, 57.7, 11.9, 102.3)});
        CHECK(rep.count(Reject::SentinelSpeed) == 1);
    }
    SUBCASE("stale beyond 600 s") {
        auto [out, rep] = clean({rec(1, 1000), rec(1, 400), rec(1, 399), rec(2, 10)});
        CHECK(out.size() == 3);
        CHECK(rep.count(Reject::Stale) == 1);
    }
    SUBCASE("k valid distinct records pass unchanged") {
        std::vector<AisRecord> in;
        for (int i = 0; i < 50; ++i)
            in.push_back(rec(static_cast<std::uint32_t>(100 + i % 5), i));
        auto [out, rep] = clean(in);
        CHECK(out == in);
        CHECK(rep.total_rejected() == 0);
        CHECK(rep.records_in == 50);
    }
}

TEST_CASE("clean conservation and determinism on random streams") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<AisRecord> in;
        for (int i = 0; i < 400; ++i) {
            auto r = rec(static_cast<std::uint32_t>(rng() % 7), static_cast<Timestamp>(rng() % 2000));
            if (rng() % 10 == 0)
                r.lat = 95.0;
            if (rng() % 10 == 0)
                r.sog = 102.3;
            in.push_back(r);
        }
        const auto a = clean(in);
        const auto b = clean(in);
        CHECK(a.second.conserved());
        CHECK(a.second.records_in == in.size());
        CHECK(a.first == b.first);
        CHECK(a.second == b.second);
    }
}

TEST_CASE("ndjson debug output") {
    auto r = rec(219000001, 1530648000);
    r.heading = 91;
    const auto line = to_json_line(r);
    CHECK(line.find("\"vessel\":219000001") != std::string::npos);
    CHECK(line.find("\"heading\":91") != std::string::npos);
    r.cog = kCourseUnavailable;
    CHECK(to_json_line(r).find("\"cog\":null") != std::string::npos);
}
