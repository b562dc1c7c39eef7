#pragma once

// 3x5 digit glyphs shared by the simulators' score displays and the pixel
// score reader. Reader-side matching is exact template comparison, so both
// sides must use this one table.

#include <array>
#include <cstdint>

namespace gamesense {

// Bit 0 = leftmost pixel of the row.
inline constexpr std::array<std::array<uint8_t, 5>, 10> kDigitRows = {{
    {0b111, 0b101, 0b101, 0b101, 0b111},  // 0
    {0b010, 0b110, 0b010, 0b010, 0b111},  // 1
    {0b111, 0b001, 0b111, 0b100, 0b111},  // 2
    {0b111, 0b001, 0b111, 0b001, 0b111},  // 3
    {0b101, 0b101, 0b111, 0b001, 0b001},  // 4
    {0b111, 0b100, 0b111, 0b001, 0b111},  // 5
    {0b111, 0b100, 0b111, 0b101, 0b111},  // 6
    {0b111, 0b001, 0b010, 0b010, 0b010},  // 7
    {0b111, 0b101, 0b111, 0b101, 0b111},  // 8
    {0b111, 0b101, 0b111, 0b001, 0b111},  // 9
}};

inline constexpr int kDigitCols = 3;
inline constexpr int kDigitRowsN = 5;

inline bool digit_pixel(int digit, int row, int col) {
    // MSB of the row byte is the leftmost column.
    return (kDigitRows[size_t(digit)][size_t(row)] >> (kDigitCols - 1 - col)) & 1;
}

}  // namespace gamesense
