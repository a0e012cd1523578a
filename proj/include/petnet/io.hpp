#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "petnet/core.hpp"

namespace petnet {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kDatasetHeaderBytes = 36;

struct DatasetManifest {
  std::uint32_t version = kDatasetVersion;
  DetectorConfig config{4, 1};
  std::uint64_t num_samples = 0;
  bool has_geometry_features = false;
  std::uint64_t rng_seed = 0;

  bool operator==(const DatasetManifest&) const = default;
};

/// Malformed dataset or checkpoint bytes. `offset` is where decoding stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Layout (little-endian): "PETN", version u32, C u32, T u32,
/// num_samples u64, flags u32 (bit 0 = geometry), seed u64, then per sample
/// input_count u32, (t u32, c u32) pairs, label_count u32, pairs.
std::vector<std::uint8_t> encode_dataset(std::span<const Sample> samples,
                                         const DatasetManifest& manifest);

std::pair<DatasetManifest, std::vector<Sample>> decode_dataset(
    std::span<const std::uint8_t> bytes);

/// Writes atomically (temp file + rename). Returns the byte count.
std::size_t write_dataset(std::span<const Sample> samples,
                          const DatasetManifest& manifest,
                          const std::filesystem::path& destination);

std::pair<DatasetManifest, std::vector<Sample>> read_dataset(
    const std::filesystem::path& source);

/// "kind,time,crystal" rows, inputs before labels, each in (time, crystal)
/// order.
std::string format_csv(const Sample& sample);
void export_csv(const Sample& sample, const std::filesystem::path& destination);

// Shared file helpers.
std::vector<std::uint8_t> read_file(const std::filesystem::path& source);
void write_file_atomic(const std::filesystem::path& destination,
                       std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& destination,
                       const std::string& text);

}  // namespace petnet
