#include "reprog/container.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "reprog/errors.hpp"

namespace reprog {
namespace {

constexpr char kMagic[4] = {'R', 'P', 'K', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

const Tensor& ContainerRecord::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw FormatError("container record has no tensor named '" + name + "'");
}

void write_container(const std::string& path, const ContainerRecord& record) {
  nlohmann::json header;
  header["kind"] = record.kind;
  header["meta"] = record.meta;
  header["tensors"] = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& [name, t] : record.tensors) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape}, {"offset", offset}});
    offset += t.size();
  }
  const std::string header_bytes = header.dump();

  std::string blob;
  blob.append(kMagic, 4);
  put_u32le(blob, kVersion);
  put_u32le(blob, static_cast<std::uint32_t>(header_bytes.size()));
  blob += header_bytes;
  blob.reserve(blob.size() + static_cast<std::size_t>(offset) * 4);
  for (const auto& [name, t] : record.tensors) {
    (void)name;
    for (float v : t.data) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
      put_u32le(blob, bits);
    }
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataError("short write to '" + path + "'");
}

ContainerRecord read_container(const std::string& path, const std::string& expect_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(blob.data());

  if (blob.size() < 12 || std::memcmp(blob.data(), kMagic, 4) != 0) {
    throw FormatError("'" + path + "': not an RPKT container (bad magic)");
  }
  const std::uint32_t version = get_u32le(bytes + 4);
  if (version != kVersion) {
    throw FormatError("'" + path + "': unsupported container version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32le(bytes + 8);
  if (blob.size() < 12 + static_cast<std::size_t>(header_len)) {
    throw FormatError("'" + path + "': truncated header");
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(blob.substr(12, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': corrupt header JSON: " + e.what());
  }

  ContainerRecord record;
  try {
    record.kind = header.at("kind").get<std::string>();
    record.meta = header.at("meta");
    std::int64_t expected_offset = 0;
    const std::size_t payload_begin = 12 + header_len;
    for (const auto& entry : header.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<std::vector<int>>();
      const auto offset = entry.at("offset").get<std::int64_t>();
      if (offset != expected_offset) {
        throw FormatError("'" + path + "': tensor '" + name + "' offset " + std::to_string(offset) +
                          " does not match running total " + std::to_string(expected_offset));
      }
      const std::int64_t count = shape_product(shape);
      const std::size_t byte_begin = payload_begin + static_cast<std::size_t>(offset) * 4;
      const std::size_t byte_end = byte_begin + static_cast<std::size_t>(count) * 4;
      if (byte_end > blob.size()) {
        throw FormatError("'" + path + "': truncated payload for tensor '" + name + "'");
      }
      Tensor t(shape);
      for (std::int64_t i = 0; i < count; ++i) {
        const std::uint32_t bits = get_u32le(bytes + byte_begin + static_cast<std::size_t>(i) * 4);
        t[i] = std::bit_cast<float>(bits);
      }
      record.tensors.emplace_back(name, std::move(t));
      expected_offset += count;
    }
    if (payload_begin + static_cast<std::size_t>(expected_offset) * 4 != blob.size()) {
      throw FormatError("'" + path + "': payload size does not match tensor index");
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': malformed header: " + e.what());
  }

  if (!expect_kind.empty() && record.kind != expect_kind) {
    throw FormatError("'" + path + "': record kind '" + record.kind + "', expected '" + expect_kind + "'");
  }
  return record;
}

}  // namespace reprog
