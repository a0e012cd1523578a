#include "petnet/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace petnet {
namespace {

constexpr char kMagic[4] = {'P', 'E', 'T', 'N'};

class ByteWriter {
 public:
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  template <class T>
  void le(T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void require(std::size_t n, const char* what) const {
    if (remaining() < n) {
      std::ostringstream msg;
      msg << "truncated " << what << ": expected " << n << " bytes, "
          << remaining() << " available";
      throw FormatError(msg.str(), pos_);
    }
  }

  template <class T>
  T le(const char* what) {
    require(sizeof(T), what);
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(T);
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    require(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void encode_train(ByteWriter& out, const SpikeTrain& train) {
  out.le<std::uint32_t>(static_cast<std::uint32_t>(train.size()));
  for (const auto& e : train.events()) {
    out.le<std::uint32_t>(e.time);
    out.le<std::uint32_t>(e.crystal);
  }
}

SpikeTrain decode_train(ByteReader& in, const DetectorConfig& config,
                        const char* kind) {
  const auto count = in.le<std::uint32_t>(kind);
  in.require(static_cast<std::size_t>(count) * 8, kind);
  std::vector<Event> events;
  events.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = in.offset();
    Event e;
    e.time = in.le<std::uint32_t>(kind);
    e.crystal = in.le<std::uint32_t>(kind);
    if (e.time >= config.num_timesteps() || e.crystal >= config.num_crystals()) {
      std::ostringstream msg;
      msg << "out-of-bounds " << kind << " event (t " << e.time << ", c "
          << e.crystal << ")";
      throw FormatError(msg.str(), at);
    }
    if (!events.empty() && !(events.back() < e)) {
      throw FormatError(std::string("unsorted ") + kind + " events", at);
    }
    events.push_back(e);
  }
  return SpikeTrain(config, std::move(events));
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(std::span<const Sample> samples,
                                         const DatasetManifest& manifest) {
  if (manifest.num_samples != samples.size()) {
    throw std::invalid_argument("manifest sample count " +
                                std::to_string(manifest.num_samples) +
                                " does not match " +
                                std::to_string(samples.size()) + " samples");
  }
  const GridShape shape(manifest.config);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i].input.shape() == shape) ||
        !(samples[i].label.shape() == shape)) {
      throw std::invalid_argument("sample " + std::to_string(i) +
                                  " does not match the manifest config");
    }
  }

  ByteWriter out;
  out.raw(kMagic, sizeof(kMagic));
  out.le<std::uint32_t>(manifest.version);
  out.le<std::uint32_t>(manifest.config.num_crystals());
  out.le<std::uint32_t>(manifest.config.num_timesteps());
  out.le<std::uint64_t>(manifest.num_samples);
  out.le<std::uint32_t>(manifest.has_geometry_features ? 1u : 0u);
  out.le<std::uint64_t>(manifest.rng_seed);
  for (const auto& s : samples) {
    encode_train(out, s.input);
    encode_train(out, s.label);
  }
  return out.take();
}

std::pair<DatasetManifest, std::vector<Sample>> decode_dataset(
    std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  const auto magic = in.take(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic", 0);
  }
  DatasetManifest manifest;
  manifest.version = in.le<std::uint32_t>("version");
  if (manifest.version != kDatasetVersion) {
    throw FormatError("version mismatch: file has " +
                          std::to_string(manifest.version) + ", reader expects " +
                          std::to_string(kDatasetVersion),
                      4);
  }
  const auto crystals = in.le<std::uint32_t>("crystal count");
  const auto timesteps = in.le<std::uint32_t>("time step count");
  try {
    manifest.config = DetectorConfig(crystals, timesteps);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what(), 8);
  }
  manifest.num_samples = in.le<std::uint64_t>("sample count");
  const auto flags = in.le<std::uint32_t>("flags");
  if ((flags & ~1u) != 0) {
    throw FormatError("unknown flag bits", 24);
  }
  manifest.has_geometry_features = (flags & 1u) != 0;
  manifest.rng_seed = in.le<std::uint64_t>("seed");

  std::vector<Sample> samples;
  // Each sample needs at least 8 bytes; bound the reservation by the file.
  samples.reserve(std::min<std::uint64_t>(manifest.num_samples,
                                          in.remaining() / 8));
  for (std::uint64_t i = 0; i < manifest.num_samples; ++i) {
    SpikeTrain input = decode_train(in, manifest.config, "input");
    const std::size_t label_at = in.offset();
    SpikeTrain label = decode_train(in, manifest.config, "label");
    for (const auto& e : label.events()) {
      if (!input.contains(e)) {
        throw FormatError("label event not present in input of sample " +
                              std::to_string(i),
                          label_at);
      }
    }
    samples.push_back({std::move(input), std::move(label)});
  }
  if (in.remaining() != 0) {
    throw FormatError(std::to_string(in.remaining()) +
                          " trailing bytes after the last sample",
                      in.offset());
  }
  return {manifest, std::move(samples)};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + source.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& destination,
                       std::span<const std::uint8_t> bytes) {
  auto tmp = destination;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + destination.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw std::runtime_error("short write to " + destination.string());
    }
  }
  std::filesystem::rename(tmp, destination);
}

void write_file_atomic(const std::filesystem::path& destination,
                       const std::string& text) {
  write_file_atomic(destination,
                    std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                              text.size()));
}

std::size_t write_dataset(std::span<const Sample> samples,
                          const DatasetManifest& manifest,
                          const std::filesystem::path& destination) {
  const auto bytes = encode_dataset(samples, manifest);
  write_file_atomic(destination, bytes);
  return bytes.size();
}

std::pair<DatasetManifest, std::vector<Sample>> read_dataset(
    const std::filesystem::path& source) {
  if (!std::filesystem::exists(source)) {
    throw std::runtime_error("dataset not found: " + source.string());
  }
  return decode_dataset(read_file(source));
}

std::string format_csv(const Sample& sample) {
  std::ostringstream out;
  out << "kind,time,crystal\n";
  for (const auto& e : sample.input.events()) {
    out << "input," << e.time << ',' << e.crystal << '\n';
  }
  for (const auto& e : sample.label.events()) {
    out << "label," << e.time << ',' << e.crystal << '\n';
  }
  return out.str();
}

void export_csv(const Sample& sample,
                const std::filesystem::path& destination) {
  write_file_atomic(destination, format_csv(sample));
}

}  // namespace petnet
