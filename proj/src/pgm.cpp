#include "vlpfleet/pgm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <sstream>

namespace vlp {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

    // Skips whitespace and comments, collecting comment text.
    void skip(std::vector<std::string>& comments) {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#') {
                const auto end = bytes_.find('\n', pos_);
                const auto stop = end == std::string::npos ? bytes_.size() : end;
                comments.push_back(bytes_.substr(pos_ + 1, stop - pos_ - 1));
                pos_ = stop;
            } else {
                return;
            }
        }
    }

    int integer(std::vector<std::string>& comments) {
        skip(comments);
        const auto start = pos_;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) ++pos_;
        if (start == pos_ || pos_ - start > 9) throw PgmError("malformed PGM header");
        return std::stoi(bytes_.substr(start, pos_ - start));
    }

    std::size_t pos_{0};

private:
    const std::string& bytes_;
};

}  // namespace

PgmImage parse_pgm_image(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw PgmError("not a binary PGM (P5) file");
    PgmImage image;
    HeaderReader reader(bytes);
    reader.pos_ = 2;
    image.width = reader.integer(image.comments);
    image.height = reader.integer(image.comments);
    const int maxval = reader.integer(image.comments);
    if (image.width <= 0 || image.height <= 0) throw PgmError("PGM dimensions must be positive");
    if (maxval != 255) throw PgmError("only maxval 255 is supported");
    if (reader.pos_ >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[reader.pos_])))
        throw PgmError("malformed PGM header");
    ++reader.pos_;
    const auto count = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height);
    if (bytes.size() - reader.pos_ < count) throw PgmError("PGM pixel data truncated");
    image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos_),
                        bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos_ + count));
    return image;
}

PgmImage read_pgm_image(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PgmError("cannot open " + path.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_pgm_image(bytes);
}

void write_pgm_image(const std::filesystem::path& path, const PgmImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw PgmError("cannot write " + path.string());
    out << "P5\n";
    for (const auto& comment : image.comments) out << '#' << comment << '\n';
    out << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw PgmError("failed writing " + path.string());
}

}  // namespace vlp
