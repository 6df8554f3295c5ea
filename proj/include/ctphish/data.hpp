#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctphish::data {

/// Bundled data file compiled into the library (see data/).
std::optional<std::string_view> embedded(std::string_view name);

/// Contents of a bundled data file. An override directory set through
/// CTPHISH_DATA_DIR takes precedence over the compiled-in copy.
std::string load(std::string_view name);

/// Non-empty, non-comment lines of a text file ('#' starts a comment).
std::vector<std::string> lines(std::string_view text);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace ctphish::data
