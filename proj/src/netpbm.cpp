// Copyright 2026 The segens Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "segens/netpbm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

namespace segens {
namespace {

struct Header {
  int width = 0;
  int height = 0;
  std::size_t payload_offset = 0;
};

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NetpbmError(NetpbmError::Kind::kIo, "cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

Header parse_header(const std::vector<unsigned char>& bytes, const char* magic,
                    const std::filesystem::path& path) {
  if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
    throw NetpbmError(NetpbmError::Kind::kWrongMagic,
                      "wrong magic in " + path.string() + ": expected " + magic);
  }
  std::size_t pos = 2;
  int fields[3] = {0, 0, 0};
  for (int& f : fields) {
    // Whitespace and '#' comments may separate header tokens.
    while (pos < bytes.size()) {
      if (std::isspace(bytes[pos])) {
        ++pos;
      } else if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw NetpbmError(NetpbmError::Kind::kBadHeader, "malformed header in " + path.string());
    }
    long long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > (1 << 24)) {
        throw NetpbmError(NetpbmError::Kind::kBadHeader, "header value too large in " + path.string());
      }
      ++pos;
    }
    f = static_cast<int>(v);
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw NetpbmError(NetpbmError::Kind::kBadHeader, "malformed header in " + path.string());
  }
  ++pos;
  if (fields[2] != 255 || fields[0] <= 0 || fields[1] <= 0) {
    throw NetpbmError(NetpbmError::Kind::kBadHeader,
                      "unsupported header in " + path.string() + " (need maxval 255)");
  }
  return {fields[0], fields[1], pos};
}

void write_bytes(const std::filesystem::path& path, const std::string& header,
                 const std::vector<unsigned char>& payload) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NetpbmError(NetpbmError::Kind::kIo, "cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw NetpbmError(NetpbmError::Kind::kIo, "short write to " + path.string());
}

}  // namespace

void write_image_ppm(const std::filesystem::path& path, const Tensor<float>& image) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3) {
    throw NetpbmError(NetpbmError::Kind::kRange, "PPM needs a (1,3,H,W) image, got " + s.str());
  }
  const std::size_t hw = static_cast<std::size_t>(s.h) * s.w;
  std::vector<unsigned char> payload(3 * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (int c = 0; c < 3; ++c) {
      const float v = std::clamp(image.data()[c * hw + p], 0.0f, 1.0f);
      payload[3 * p + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  }
  write_bytes(path, "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n",
              payload);
}

Tensor<float> read_image_ppm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const Header h = parse_header(bytes, "P6", path);
  const std::size_t hw = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.payload_offset < 3 * hw) {
    throw NetpbmError(NetpbmError::Kind::kTruncated, "truncated payload in " + path.string());
  }
  std::vector<float> data(3 * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (int c = 0; c < 3; ++c) {
      data[c * hw + p] = static_cast<float>(bytes[h.payload_offset + 3 * p + c]) / 255.0f;
    }
  }
  return Tensor<float>(Shape{1, 3, h.height, h.width}, std::move(data));
}

void write_mask_pgm(const std::filesystem::path& path, const LabelMap& mask) {
  if (mask.n != 1) {
    throw NetpbmError(NetpbmError::Kind::kRange, "PGM mask must hold a single image");
  }
  std::vector<unsigned char> payload(mask.labels.begin(), mask.labels.end());
  write_bytes(path, "P5\n" + std::to_string(mask.w) + " " + std::to_string(mask.h) + "\n255\n",
              payload);
}

LabelMap read_mask_pgm(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  const Header h = parse_header(bytes, "P5", path);
  const std::size_t hw = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.payload_offset < hw) {
    throw NetpbmError(NetpbmError::Kind::kTruncated, "truncated payload in " + path.string());
  }
  LabelMap mask(1, h.height, h.width);
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), hw,
              mask.labels.begin());
  return mask;
}

}  // namespace segens
