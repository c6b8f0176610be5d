#pragma once

#include <filesystem>
#include <string>

namespace mwave {

/// Shortest round-trip decimal form of a double (17 significant digits),
/// identical across runs and platforms for identical bits.
std::string fmt17(double x);

/// Write `content` to `path` atomically (temp file + rename) so partially
/// written artifacts never appear under the final name.  Creates parent
/// directories as needed.  Throws std::runtime_error on I/O failure.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// Read a whole file into a string.  Throws std::runtime_error if unreadable.
std::string read_text(const std::filesystem::path& path);

}  // namespace mwave
