#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "rpmixer/data.hpp"

namespace rpmixer::detail {

template <typename U>
using LeBits = std::conditional_t<
    sizeof(U) == 8, std::uint64_t,
    std::conditional_t<sizeof(U) == 4, std::uint32_t,
                       std::conditional_t<sizeof(U) == 2, std::uint16_t, std::uint8_t>>>;

template <typename U>
void put_le(std::ostream& os, U value) {
  const auto bits = std::bit_cast<LeBits<U>>(value);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(bytes, sizeof(U));
}

/// Throws DataError("<context>: truncated while reading <what>") at end of stream.
template <typename U>
U get_le(std::istream& is, const char* context, const char* what) {
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw DataError(std::string(context) + ": truncated while reading " + what);
  }
  LeBits<U> bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bits |= static_cast<LeBits<U>>(static_cast<LeBits<U>>(bytes[i]) << (8 * i));
  return std::bit_cast<U>(bits);
}

}  // namespace rpmixer::detail
