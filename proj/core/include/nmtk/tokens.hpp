#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace nmtk {

using TokenId = std::int32_t;
using TokenSequence = std::vector<TokenId>;
using TokenSpan = std::span<const TokenId>;

/// Reserved ids shared by BPE vocabularies and the decoders.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kNumSpecialIds = 4;

}  // namespace nmtk
