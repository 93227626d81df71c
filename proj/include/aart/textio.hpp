#pragma once

#include <string>
#include <vector>

namespace aart {

// Shortest round-trip decimal form via std::to_chars: locale-independent,
// so repeated runs produce byte-identical files.
std::string format_double(double v);
std::string format_float(float v);

// CSV with a header row; cells are written verbatim (values here never
// contain commas or quotes).
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace aart
