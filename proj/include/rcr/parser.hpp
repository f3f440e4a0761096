#pragma once

#include <string_view>

#include "rcr/model.hpp"

namespace rcr {

/// Parses the MLN text format. Throws ParseError with line/column on
/// malformed input, arity or domain mismatches, undeclared symbols, and
/// non-ground evidence.
Model parse_model(std::string_view text);

/// Spreadsheet-style lowercase letters: 0 -> a, 25 -> z, 26 -> aa, ...
std::string letters_for_index(int index);

}  // namespace rcr
