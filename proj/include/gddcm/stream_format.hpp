#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gddcm/tokenizer.hpp"

namespace gddcm {

inline constexpr std::uint8_t kStreamVersion = 0x01;
inline constexpr std::size_t kStreamHeaderBytes = 87;

/// ceil(log2 K); 0 for K = 1.
unsigned index_bits(std::uint32_t codebook_size);

/// Header (magic "gDDC", version, family, little-endian config fields, init
/// strategy, init token) followed by the indices packed MSB-first.
std::vector<std::uint8_t> encode_stream(const TokenStream& stream);

/// Strict inverse of encode_stream; any deviation raises CorruptStreamError with the byte offset.
TokenStream decode_stream(std::span<const std::uint8_t> bytes);

}  // namespace gddcm
