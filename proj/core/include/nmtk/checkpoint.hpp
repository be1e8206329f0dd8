#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nmtk::models {

struct Tensor {
  std::vector<std::int64_t> shape;
  std::vector<float> values;

  std::size_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

struct CheckpointMetadata {
  std::int64_t step = 0;
  std::optional<double> validation_score;
  std::uint64_t averaged_from = 1;

  bool operator==(const CheckpointMetadata&) const = default;
};

struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  CheckpointMetadata metadata;

  /// Shapes agree with value counts and every value is finite.
  void validate() const;
  bool operator==(const Checkpoint&) const = default;
};

/// Elementwise arithmetic mean of all tensors (accumulated in double).
/// Throws EmptyList, NameSetMismatch, or ShapeMismatch naming the tensor.
Checkpoint checkpoint_average(std::span<const Checkpoint> checkpoints);

// Container layout, all integers little-endian:
//
//   "NMTC" | u32 version | u64 header_len | header (JSON) | payload
//
// The header lists tensors as {name, shape, dtype: "f32", offset}, with
// offsets in bytes from the start of the payload, plus a metadata object.
// Tensor payloads are raw little-endian f32 in header order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Random access to the tensors of a checkpoint file without loading the
/// whole payload.
class CheckpointReader {
 public:
  explicit CheckpointReader(const std::filesystem::path& path);

  struct Entry {
    std::vector<std::int64_t> shape;
    std::uint64_t offset = 0;
  };

  const CheckpointMetadata& metadata() const { return metadata_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  Tensor read(const std::string& name);

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t payload_start_ = 0;
  CheckpointMetadata metadata_;
  std::map<std::string, Entry> entries_;
};

/// Averages checkpoint files into `output`, holding one tensor per input in
/// memory at a time.
void average_checkpoint_files(std::span<const std::filesystem::path> inputs,
                              const std::filesystem::path& output);

}  // namespace nmtk::models
