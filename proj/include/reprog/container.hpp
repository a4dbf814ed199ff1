#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reprog/tensor.hpp"

namespace reprog {

// RPKT container: the one on-disk binary format shared by model checkpoints,
// prompts and datasets.
//
//   bytes 0..3   magic "RPKT"
//   bytes 4..7   u32 version = 1, little-endian
//   bytes 8..11  u32 header length, little-endian
//   ...          UTF-8 JSON header
//   ...          contiguous little-endian f32 payload
//
// Header layout: {"kind": <record kind>, "meta": {...},
//                 "tensors": [{"name","shape","offset"}...]} where offset
// counts f32 elements from the start of the payload. Round trips are
// byte-exact: floats are re-encoded bit-for-bit.
struct ContainerRecord {
  std::string kind;
  nlohmann::json meta;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& tensor(const std::string& name) const;
};

void write_container(const std::string& path, const ContainerRecord& record);

// Throws FormatError on bad magic, version mismatch, truncation or
// header/payload inconsistency; optionally enforces the expected kind.
ContainerRecord read_container(const std::string& path, const std::string& expect_kind = "");

}  // namespace reprog
