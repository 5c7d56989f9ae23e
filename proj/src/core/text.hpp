#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ovql::text {

// Number of Unicode code points; malformed bytes count as one point each.
std::size_t utf8_length(std::string_view s);

// Decodes the code point starting at byte offset i and advances i past it.
char32_t utf8_decode(std::string_view s, std::size_t& i);

void utf8_append(std::string& out, char32_t cp);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

// Whitespace-separated pieces, empties dropped.
std::vector<std::string_view> split_ws(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

bool starts_with(std::string_view s, std::string_view prefix);

// Canonical composition for the Latin combining marks that occur in OSM
// names (grave..ring above, cedilla). Not a full normalizer; anything outside
// the table is left as typed.
std::string compose_latin(std::string_view s);

// Shortest decimal form that round-trips; integral values keep one ".0".
std::string format_coord(double v);

std::string percent_encode(std::string_view s);

std::string sha256_hex(std::string_view data);

}  // namespace ovql::text
