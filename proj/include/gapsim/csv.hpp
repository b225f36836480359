#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

namespace gapsim {

// 17 significant digits: round-trips every double and is stable byte-for-byte.
std::string format_double(double x);

// Writes `text` to `path`, throwing IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

// JSON with sorted keys (nlohmann objects are ordered maps).
std::string dump_json(const nlohmann::json& j);

}  // namespace gapsim
