#pragma once

#include <cstdint>
#include <string>

namespace dragsim::io {

// Numeric cell formatting shared by every exporter: 12 significant digits,
// shortest form ("%.12g").
std::string fmt(double v);

// Full-precision formatting for values that must survive a round trip
// bit-exactly ("%.17g").
std::string fmt_exact(double v);

// FNV-1a 64-bit digest of a byte string, rendered as 16 hex characters.
std::string fnv1a_hex(const std::string& bytes);

// Writes text to path atomically enough for our purposes; throws
// ConfigError if the destination cannot be opened.
void write_file(const std::string& path, const std::string& text);

std::string read_file(const std::string& path);

}  // namespace dragsim::io
