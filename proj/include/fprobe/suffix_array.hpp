#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace fprobe {

// Suffix array of `text` under the convention that a virtual terminator
// smaller than every byte follows the text. The result has text.size() + 1
// entries; result[0] is always text.size() (the terminator suffix).
//
// Linear time and O(n) extra space (SA-IS induced sorting).
std::vector<int32_t> build_suffix_array(std::string_view text);

// Brute-force reference, O(n^2 log n). Test oracle only; exported so the
// property tests can live outside this translation unit.
std::vector<int32_t> build_suffix_array_naive(std::string_view text);

}  // namespace fprobe
