#include "sarbot/pgm.hpp"

#include "sarbot/errors.hpp"

#include <fmt/format.h>

#include <cctype>
#include <fstream>
#include <istream>

namespace sarbot {
namespace {

// Reads the next header token, collecting '#' comment lines on the way.
std::string next_token(std::istream& in, std::vector<std::string>& comments) {
  std::string token;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      std::string comment;
      std::getline(in, comment);
      const auto first = comment.find_first_not_of(' ');
      comments.push_back(first == std::string::npos ? std::string{} : comment.substr(first));
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  if (image.pixels.size() != image.width * image.height) {
    throw ConfigError(fmt::format("image buffer holds {} pixels, expected {}x{}",
                                  image.pixels.size(), image.width, image.height));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
  out << "P5\n";
  for (const auto& c : image.comments) out << "# " << c << '\n';
  out << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  GrayImage image;
  if (next_token(in, image.comments) != "P5") {
    throw ConfigError(fmt::format("'{}' is not a binary PGM (P5)", path.string()));
  }
  try {
    image.width = std::stoul(next_token(in, image.comments));
    image.height = std::stoul(next_token(in, image.comments));
    if (std::stoul(next_token(in, image.comments)) != 255) {
      throw ConfigError(fmt::format("'{}': only maxval 255 is supported", path.string()));
    }
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("'{}': malformed PGM header", path.string()));
  }
  image.pixels.resize(image.width * image.height);
  in.read(reinterpret_cast<char*>(image.pixels.data()),
          static_cast<std::streamsize>(image.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.pixels.size())) {
    throw ConfigError(fmt::format("'{}': truncated pixel data", path.string()));
  }
  return image;
}

}  // namespace sarbot
