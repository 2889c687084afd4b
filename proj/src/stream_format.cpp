#include "gddcm/stream_format.hpp"

#include <string>

#include "byte_io.hpp"

namespace gddcm {

namespace {

constexpr std::uint8_t kMagic[4] = {0x67, 0x44, 0x44, 0x43};

}  // namespace

unsigned index_bits(std::uint32_t codebook_size) {
    if (codebook_size < 1) throw DomainError("codebook size must be at least 1");
    unsigned bits = 0;
    while (bits < 32 && (std::uint64_t{1} << bits) < codebook_size) ++bits;
    return bits;
}

std::vector<std::uint8_t> encode_stream(const TokenStream& stream) {
    const auto& cfg = stream.config;
    if (stream.indices.size() != cfg.tokens) {
        throw DomainError("stream has " + std::to_string(stream.indices.size()) + " indices but N = " +
                          std::to_string(cfg.tokens));
    }
    const unsigned bits = index_bits(cfg.codebook.size);
    if (stream.init_token && *stream.init_token == kNoInitToken) {
        throw DomainError("init token 0xFFFFFFFF is reserved for 'absent'");
    }

    detail::ByteWriter w;
    for (auto b : kMagic) w.u8(b);
    w.u8(kStreamVersion);
    w.u8(static_cast<std::uint8_t>(cfg.family));
    w.f64(cfg.p);
    w.u32(cfg.tokens);
    w.u32(cfg.codebook.size);
    w.u64(cfg.codebook.seed);
    w.u32(cfg.schedule.P);
    w.f64(cfg.schedule.dt_min);
    w.f64(cfg.schedule.dt_max);
    w.f64(cfg.schedule.rho);
    w.f64(cfg.schedule.sigma_max);
    w.f64(cfg.t_start);
    w.f64(cfg.t_end);
    w.u8(static_cast<std::uint8_t>(cfg.init));
    w.u32(stream.init_token.value_or(kNoInitToken));

    auto& out = w.bytes();
    std::uint64_t acc = 0;
    unsigned pending = 0;
    for (std::size_t i = 0; i < stream.indices.size(); ++i) {
        const auto idx = stream.indices[i];
        if (idx >= cfg.codebook.size) {
            throw DomainError("index " + std::to_string(idx) + " at position " + std::to_string(i) +
                              " exceeds codebook size " + std::to_string(cfg.codebook.size));
        }
        acc = (acc << bits) | idx;
        pending += bits;
        while (pending >= 8) {
            pending -= 8;
            out.push_back(static_cast<std::uint8_t>(acc >> pending));
        }
        acc &= (std::uint64_t{1} << pending) - 1;
    }
    if (pending > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - pending)));
    return std::move(out);
}

TokenStream decode_stream(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    for (std::size_t i = 0; i < 4; ++i) {
        if (r.u8("magic") != kMagic[i]) throw CorruptStreamError(i, "bad magic");
    }
    if (r.u8("version") != kStreamVersion) throw CorruptStreamError(4, "unsupported version");
    const auto family = r.u8("family");
    if (family > 3) throw CorruptStreamError(5, "unknown family byte " + std::to_string(family));

    TokenStream s;
    auto& cfg = s.config;
    cfg.family = static_cast<ModelFamily>(family);
    cfg.p = r.f64("p");
    cfg.tokens = r.u32("N");
    const std::size_t k_offset = r.offset();
    cfg.codebook.size = r.u32("K");
    if (cfg.codebook.size < 1) throw CorruptStreamError(k_offset, "codebook size 0");
    cfg.codebook.seed = r.u64("seed");
    cfg.schedule.P = r.u32("P");
    cfg.schedule.dt_min = r.f64("dt_min");
    cfg.schedule.dt_max = r.f64("dt_max");
    cfg.schedule.rho = r.f64("rho");
    cfg.schedule.sigma_max = r.f64("sigma_max");
    cfg.t_start = r.f64("t_start");
    cfg.t_end = r.f64("t_end");
    const std::size_t init_offset = r.offset();
    const auto init = r.u8("init strategy");
    if (init > 2) throw CorruptStreamError(init_offset, "unknown init strategy byte " + std::to_string(init));
    cfg.init = static_cast<InitStrategy>(init);
    const auto token = r.u32("init token");
    if (token != kNoInitToken) s.init_token = token;

    const unsigned bits = index_bits(cfg.codebook.size);
    const std::uint64_t payload = (static_cast<std::uint64_t>(cfg.tokens) * bits + 7) / 8;
    if (r.remaining() < payload) {
        throw CorruptStreamError(bytes.size(), "payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                                                   std::to_string(payload));
    }
    if (r.remaining() > payload) {
        throw CorruptStreamError(kStreamHeaderBytes + payload,
                                 std::to_string(r.remaining() - payload) + " trailing bytes after payload");
    }

    const auto data = r.rest();
    s.indices.reserve(cfg.tokens);
    std::uint64_t bitpos = 0;
    for (std::uint32_t i = 0; i < cfg.tokens; ++i) {
        const std::size_t start_byte = kStreamHeaderBytes + bitpos / 8;
        std::uint32_t idx = 0;
        for (unsigned b = 0; b < bits; ++b, ++bitpos) {
            idx = (idx << 1) | ((data[bitpos / 8] >> (7 - bitpos % 8)) & 1u);
        }
        if (idx >= cfg.codebook.size) {
            throw CorruptStreamError(start_byte, "index " + std::to_string(idx) + " exceeds codebook size " +
                                                     std::to_string(cfg.codebook.size));
        }
        s.indices.push_back(idx);
    }
    if (bitpos % 8 != 0) {
        const std::uint8_t mask = static_cast<std::uint8_t>(0xFFu >> (bitpos % 8));
        if (data.back() & mask) throw CorruptStreamError(bytes.size() - 1, "nonzero padding bits");
    }
    return s;
}

}  // namespace gddcm
