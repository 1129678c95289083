#include "dikp/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "dikp/error.hpp"

namespace dikp {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t position() const { return pos_; }

  void skip_whitespace_and_comments() {
    while (pos_ < bytes_.size()) {
      const char ch = bytes_[pos_];
      if (ch == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(ch))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::size_t read_unsigned(const char* field) {
    skip_whitespace_and_comments();
    const std::size_t start = pos_;
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) throw IoError(std::string("PNM header: ") + field + " is too large");
      ++pos_;
    }
    if (pos_ == start) throw IoError(std::string("PNM header: missing ") + field);
    return value;
  }

  void expect_single_whitespace() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw IoError("PNM header: expected whitespace before pixel data");
    }
    ++pos_;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Image decode_pnm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw IoError("not a binary PGM (P5) or PPM (P6) file");
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader reader(bytes.substr(2));
  const std::size_t cols = reader.read_unsigned("width");
  const std::size_t rows = reader.read_unsigned("height");
  const std::size_t maxval = reader.read_unsigned("maxval");
  if (cols == 0 || rows == 0) throw IoError("PNM header: zero image dimension");
  if (maxval != 255) {
    throw IoError("unsupported PNM maxval " + std::to_string(maxval) + " (only 255 is supported)");
  }
  reader.expect_single_whitespace();

  const std::size_t offset = 2 + reader.position();
  const std::size_t expected = channels * rows * cols;
  if (bytes.size() - offset < expected) {
    throw IoError("truncated PNM payload: expected " + std::to_string(expected) + " bytes, got " +
                  std::to_string(bytes.size() - offset));
  }

  // File order is interleaved (pixel-major); Image is channel-major.
  std::vector<double> data(expected);
  const auto* payload = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  for (std::size_t p = 0; p < rows * cols; ++p)
    for (std::size_t c = 0; c < channels; ++c)
      data[c * rows * cols + p] = static_cast<double>(payload[p * channels + c]) / 255.0;
  return Image(channels, rows, cols, std::move(data));
}

Image load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pnm(bytes);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string encode_pnm(const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) {
    throw ShapeError("PNM output needs 1 or 3 channels, got " + std::to_string(img.channels()));
  }
  std::ostringstream header;
  header << (img.channels() == 1 ? "P5" : "P6") << '\n'
         << img.cols() << ' ' << img.rows() << '\n'
         << 255 << '\n';
  std::string out = header.str();
  const std::size_t plane = img.plane_size();
  out.reserve(out.size() + img.size());
  const auto values = img.values();
  for (std::size_t p = 0; p < plane; ++p) {
    for (std::size_t c = 0; c < img.channels(); ++c) {
      const double v = std::clamp(values[c * plane + p], 0.0, 1.0);
      out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
  return out;
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const std::string bytes = encode_pnm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write image '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed while writing image '" + path.string() + "'");
}

}  // namespace dikp
