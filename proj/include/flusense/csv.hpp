#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flusense::csv {

/// Splits one RFC 4180 record. Returns nullopt on an unterminated quote.
std::optional<std::vector<std::string>> parse_record(std::string_view line);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Shortest round-trip decimal form, identical across runs.
std::string format_double(double v);

}  // namespace flusense::csv
