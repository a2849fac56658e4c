// File-system helpers shared by the test binaries.  Kept free of core
// includes so the C-API test can use them without touching internals.
#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

namespace testsupport {

/// Scratch directory unique to the current process, wiped on first use.
inline std::string scratch_dir() {
  static std::string dir = [] {
    std::string d = (std::filesystem::temp_directory_path() /
                     ("confrec-test-" + std::to_string(::getpid())))
                        .string();
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

inline std::string scratch_path(const std::string& name) { return scratch_dir() + "/" + name; }

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testsupport
