#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlp {

class PgmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raw contents of a binary (P5) graymap with maxval 255.
struct PgmImage {
    int width{0};
    int height{0};
    std::vector<std::uint8_t> pixels;
    std::vector<std::string> comments;  // without the leading '#'
};

PgmImage read_pgm_image(const std::filesystem::path& path);
PgmImage parse_pgm_image(const std::string& bytes);
void write_pgm_image(const std::filesystem::path& path, const PgmImage& image);

}  // namespace vlp
