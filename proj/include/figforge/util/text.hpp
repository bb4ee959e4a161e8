#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace figforge::util {

/// Shortest decimal text that parses back to exactly `value`, never in
/// scientific notation. Negative zero prints as "0". `value` must be finite.
std::string format_number(double value);

/// Strict decimal parse of the whole string; nullopt on any trailing garbage.
std::optional<double> parse_number(std::string_view text);

/// Moves the decimal point of a plain decimal numeral by `places` (positive
/// shifts right). Exact on the text, so it never introduces rounding.
std::string shift_decimal(std::string_view numeral, int places);

std::string to_lower(std::string_view text);
std::string trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

/// Lower-case identifier made of [a-z0-9_]; runs of anything else collapse
/// to a single underscore.
std::string slugify(std::string_view text);

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view data);
std::string base64_decode(std::string_view data);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename so readers never see a torn file.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace figforge::util
