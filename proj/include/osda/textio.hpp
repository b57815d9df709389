#pragma once

#include <string>

namespace osda {

// Shortest round-trip decimal form (std::to_chars); keeps text artifacts
// byte-stable across runs.
std::string fmt_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace osda
