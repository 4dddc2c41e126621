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

#include "segens/checkpoint.hpp"

#include <bit>
#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

namespace segens {
namespace {

constexpr char kMagic[4] = {'S', 'G', 'N', 'S'};

class Writer {
 public:
  template <typename U>
  void put(U v) {
    static_assert(std::is_unsigned_v<U>);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void put_f32(float f) { put(std::bit_cast<std::uint32_t>(f)); }
  void put_raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }
  float get_f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            "checkpoint truncated at byte " + std::to_string(pos_));
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> parameter_section(const Network& net) {
  Writer w;
  w.put(static_cast<std::uint32_t>(net.parameters().size()));
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    const std::string& name = net.names()[i];
    const Tensor<float>& p = net.parameters()[i];
    w.put(static_cast<std::uint32_t>(name.size()));
    w.put_raw(name.data(), name.size());
    const Shape& s = p.shape();
    for (int d : {s.n, s.c, s.h, s.w}) w.put(static_cast<std::uint32_t>(d));
    for (float v : p.data()) w.put_f32(v);
  }
  return w.bytes;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "cannot open checkpoint " + path.string());
  }
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize(const Network& net) {
  Writer w;
  w.put_raw(kMagic, 4);
  w.put(kCheckpointVersion);
  const ModelSpec& s = net.spec();
  w.put(static_cast<std::uint8_t>(s.arch));
  w.put(static_cast<std::uint32_t>(s.in_channels));
  w.put(static_cast<std::uint32_t>(s.out_channels));
  w.put(static_cast<std::uint32_t>(s.depth));
  w.put(static_cast<std::uint32_t>(s.base_width));
  w.put(static_cast<std::uint64_t>(s.seed));
  const auto section = parameter_section(net);
  w.put_raw(section.data(), section.size());
  w.put(fnv1a64(section));
  return w.bytes;
}

Network deserialize(std::span<const std::uint8_t> bytes) {
  const std::size_t head = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, head) == 0 && head < 4) {
    throw CheckpointError(CheckpointError::Kind::kTruncated, "truncated checkpoint: missing header");
  }
  if (std::memcmp(bytes.data(), kMagic, head) != 0) {
    throw CheckpointError(CheckpointError::Kind::kBadMagic,
                          "bad magic: not a segens checkpoint");
  }
  Reader r(bytes.subspan(4));
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::kBadVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  ModelSpec spec;
  const auto arch = r.get<std::uint8_t>();
  if (arch > 2) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "corrupt checkpoint: unknown arch " + std::to_string(arch));
  }
  spec.arch = static_cast<Arch>(arch);
  spec.in_channels = static_cast<int>(r.get<std::uint32_t>());
  spec.out_channels = static_cast<int>(r.get<std::uint32_t>());
  spec.depth = static_cast<int>(r.get<std::uint32_t>());
  spec.base_width = static_cast<int>(r.get<std::uint32_t>());
  spec.seed = r.get<std::uint64_t>();
  const std::size_t section_begin = 4 + r.pos();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          std::string("corrupt checkpoint spec: ") + e.what());
  }
  const auto n_params = r.get<std::uint32_t>();
  if (n_params != 2 * conv_layers(spec).size()) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "corrupt checkpoint: parameter count " +
                              std::to_string(n_params) + " does not match spec");
  }
  std::vector<std::string> names;
  std::vector<Tensor<float>> params;
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const auto len = r.get<std::uint32_t>();
    if (len > r.remaining()) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            "checkpoint truncated in parameter name");
    }
    names.push_back(r.get_string(len));
    Shape s;
    s.n = static_cast<int>(r.get<std::uint32_t>());
    s.c = static_cast<int>(r.get<std::uint32_t>());
    s.h = static_cast<int>(r.get<std::uint32_t>());
    s.w = static_cast<int>(r.get<std::uint32_t>());
    if (s.numel() * 4 > r.remaining()) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            "checkpoint truncated in parameter " + names.back());
    }
    std::vector<float> values(s.numel());
    for (float& v : values) v = r.get_f32();
    params.emplace_back(s, std::move(values));
  }
  const std::size_t section_end = 4 + r.pos();
  const auto stored = r.get<std::uint64_t>();
  if (stored != fnv1a64(bytes.subspan(section_begin, section_end - section_begin))) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "checkpoint checksum mismatch");
  }
  if (r.remaining() != 0) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          "trailing bytes after checkpoint");
  }
  try {
    return Network(spec, std::move(names), std::move(params));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(CheckpointError::Kind::kCorrupt,
                          std::string("corrupt checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize(net);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "cannot write checkpoint " + path.string());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw CheckpointError(CheckpointError::Kind::kIo,
                          "short write to checkpoint " + path.string());
  }
}

Network load_checkpoint(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

std::uint64_t payload_hash(const Network& net) {
  return fnv1a64(parameter_section(net));
}

std::uint64_t checkpoint_payload_hash(const std::filesystem::path& path) {
  return payload_hash(load_checkpoint(path));
}

}  // namespace segens
