#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sarbot {

// 8-bit grayscale image stored top row first.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<std::string> comments;
};

// Binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
// Throws ConfigError on malformed files.
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace sarbot
