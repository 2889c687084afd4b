#include <doctest.h>

#include <cstring>
#include <string>

#include "gddcm/random.hpp"
#include "gddcm/stream_format.hpp"

using namespace gddcm;

namespace {

TokenStream make_stream(std::uint32_t K, std::vector<std::uint32_t> indices) {
    TokenStream s;
    s.config.family = ModelFamily::VeScore;
    s.config.p = 0.25;
    s.config.tokens = static_cast<std::uint32_t>(indices.size());
    s.config.codebook.size = K;
    s.config.codebook.seed = 0x0123456789ABCDEFULL;
    s.config.schedule = {5, 0.002, 0.03, 6.5, 40.0};
    s.config.t_start = 1.5;
    s.config.t_end = 0.25;
    s.config.init = InitStrategy::AnchorPlusNoise;
    s.indices = std::move(indices);
    return s;
}

std::string offset_of(const std::vector<std::uint8_t>& bytes, std::size_t& offset) {
    try {
        decode_stream(bytes);
    } catch (const CorruptStreamError& e) {
        offset = e.offset();
        return e.what();
    }
    return "";
}

}  // namespace

TEST_SUITE("stream_format") {

TEST_CASE("index widths") {
    CHECK(index_bits(1) == 0);
    CHECK(index_bits(2) == 1);
    CHECK(index_bits(3) == 2);
    CHECK(index_bits(256) == 8);
    CHECK(index_bits(257) == 9);
    CHECK(index_bits(0xFFFFFFFFu) == 32);
}

TEST_CASE("header layout") {
    auto s = make_stream(256, {1, 2, 3, 4});
    const auto bytes = encode_stream(s);
    REQUIRE(bytes.size() == kStreamHeaderBytes + 4);
    CHECK(bytes[0] == 0x67);
    CHECK(bytes[1] == 0x44);
    CHECK(bytes[2] == 0x44);
    CHECK(bytes[3] == 0x43);
    CHECK(bytes[4] == 0x01);
    CHECK(bytes[5] == 1);
    double p = 0.0;
    std::memcpy(&p, bytes.data() + 6, 8);  // host is little-endian in CI
    CHECK(p == 0.25);
    CHECK(bytes[14] == 4);
    CHECK(bytes[18] == 0x00);
    CHECK(bytes[19] == 0x01);  // K = 256 little-endian
    CHECK(bytes[22] == 0xEF);
    CHECK(bytes[29] == 0x01);
    CHECK(bytes[30] == 5);
    CHECK(bytes[82] == 1);
    for (int i = 83; i < 87; ++i) CHECK(bytes[i] == 0xFF);
    CHECK(bytes[87] == 0x01);
    CHECK(bytes[88] == 0x02);
    CHECK(bytes[89] == 0x03);
    CHECK(bytes[90] == 0x04);
}

TEST_CASE("bit packing") {
    auto bytes = encode_stream(make_stream(2, {1, 0, 1, 0, 1, 0, 1, 0}));
    REQUIRE(bytes.size() == kStreamHeaderBytes + 1);
    CHECK(bytes.back() == 0xAA);
    // 3-bit indices: 101 011 1(00 padding)
    bytes = encode_stream(make_stream(6, {5, 3, 4}));
    REQUIRE(bytes.size() == kStreamHeaderBytes + 2);
    CHECK(bytes[87] == 0b10101110);
    CHECK(bytes[88] == 0b00000000);
    // K = 1: no payload at all
    bytes = encode_stream(make_stream(1, {0, 0, 0}));
    CHECK(bytes.size() == kStreamHeaderBytes);
    CHECK(decode_stream(bytes).indices == std::vector<std::uint32_t>{0, 0, 0});
}

TEST_CASE("init token field") {
    auto s = make_stream(16, {3, 9});
    s.init_token = 7;
    const auto d = decode_stream(encode_stream(s));
    REQUIRE(d.init_token.has_value());
    CHECK(*d.init_token == 7);
    s.init_token = kNoInitToken;
    CHECK_THROWS_AS(encode_stream(s), DomainError);
}

TEST_CASE("encoder rejects invalid streams") {
    CHECK_THROWS_AS(encode_stream(make_stream(4, {0, 4})), DomainError);
    auto s = make_stream(4, {0, 1});
    s.config.tokens = 3;
    CHECK_THROWS_AS(encode_stream(s), DomainError);
}

TEST_CASE("random streams round trip canonically") {
    CounterRng rng(CounterRng::stream_key(2024, 0));
    for (int i = 0; i < 100; ++i) {
        const std::uint32_t K = 2 + static_cast<std::uint32_t>(rng.below(5000));
        const std::uint32_t N = 1 + static_cast<std::uint32_t>(rng.below(300));
        std::vector<std::uint32_t> idx(N);
        for (auto& v : idx) v = static_cast<std::uint32_t>(rng.below(K));
        auto s = make_stream(K, idx);
        s.config.family = kAllFamilies[rng.below(4)];
        s.config.init = static_cast<InitStrategy>(rng.below(3));
        if (s.config.init == InitStrategy::NearestNoise) s.init_token = static_cast<std::uint32_t>(rng.below(K));
        s.config.p = rng.uniform();
        s.config.codebook.seed = rng.next_u64();
        const auto bytes = encode_stream(s);
        const auto back = decode_stream(bytes);
        CHECK(back == s);
        CHECK(encode_stream(back) == bytes);
    }
}

TEST_CASE("strict decoding") {
    const auto good = encode_stream(make_stream(16, {1, 2, 3, 4, 5}));
    std::size_t off = 999;

    auto bad = good;
    bad[0] = 'G';
    CHECK(!offset_of(bad, off).empty());
    CHECK(off == 0);
    bad = good;
    bad[2] = 0;
    offset_of(bad, off);
    CHECK(off == 2);
    bad = good;
    bad[4] = 2;
    offset_of(bad, off);
    CHECK(off == 4);
    bad = good;
    bad[5] = 4;
    offset_of(bad, off);
    CHECK(off == 5);
    bad = good;
    bad[82] = 3;
    offset_of(bad, off);
    CHECK(off == 82);

    // payload one byte short names both lengths
    bad = good;
    bad.pop_back();
    const auto msg = offset_of(bad, off);
    CHECK(off == bad.size());
    CHECK(msg.find("payload is 2 bytes, expected 3") != std::string::npos);

    bad = good;
    bad.push_back(0);
    CHECK(!offset_of(bad, off).empty());
    CHECK(off == good.size());

    // truncated header
    bad.assign(good.begin(), good.begin() + 40);
    CHECK(!offset_of(bad, off).empty());
    CHECK(off == 34);  // dt_min starts at byte 34; only 6 of its 8 bytes are present

    CHECK_THROWS_AS(decode_stream(std::vector<std::uint8_t>{}), CorruptStreamError);

    // index beyond K: K = 5 packs 3 bits; 7 is out of range
    auto s5 = encode_stream(make_stream(5, {1, 1}));
    s5[87] = 0b11100100;
    CHECK_THROWS_AS(decode_stream(s5), CorruptStreamError);
    // nonzero padding bits
    s5 = encode_stream(make_stream(5, {1, 1}));
    s5[87] |= 0x01;
    offset_of(s5, off);
    CHECK(off == s5.size() - 1);
}

}  // TEST_SUITE
