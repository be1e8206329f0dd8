#include "nmtk/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nmtk/error.hpp"

namespace nmtk::models {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'N', 'M', 'T', 'C'};

template <typename UInt>
void put_le(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename UInt>
UInt get_le(const unsigned char* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(p[i]) << (8 * i);
  return v;
}

void append_f32(std::string& out, std::span<const float> values) {
  out.reserve(out.size() + values.size() * 4);
  for (float f : values) put_le(out, std::bit_cast<std::uint32_t>(f));
}

void read_f32(std::span<const unsigned char> bytes, std::vector<float>& out) {
  out.resize(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes.data() + 4 * i));
  }
}

std::size_t product(const std::vector<std::int64_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) fail(ErrorCode::Format, "checkpoint: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

json metadata_json(const CheckpointMetadata& m) {
  json j;
  j["step"] = m.step;
  j["validation_score"] = m.validation_score ? json(*m.validation_score) : json(nullptr);
  j["averaged_from"] = m.averaged_from;
  return j;
}

CheckpointMetadata parse_metadata(const json& j) {
  CheckpointMetadata m;
  m.step = j.value("step", std::int64_t{0});
  if (j.contains("validation_score") && !j["validation_score"].is_null()) {
    m.validation_score = j["validation_score"].get<double>();
  }
  m.averaged_from = j.value("averaged_from", std::uint64_t{1});
  return m;
}

std::string make_header(const std::map<std::string, std::vector<std::int64_t>>& shapes,
                        const CheckpointMetadata& meta) {
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, shape] : shapes) {
    tensors.push_back({{"name", name}, {"shape", shape}, {"dtype", "f32"}, {"offset", offset}});
    offset += product(shape) * 4;
  }
  json header;
  header["metadata"] = metadata_json(meta);
  header["tensors"] = std::move(tensors);
  return header.dump();
}

std::string prefix_bytes(std::string_view header) {
  std::string out(kMagic, 4);
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint64_t>(header.size()));
  out.append(header);
  return out;
}

struct ParsedHeader {
  CheckpointMetadata metadata;
  std::map<std::string, CheckpointReader::Entry> entries;
  std::uint64_t payload_start = 0;
};

ParsedHeader parse_prefix(std::string_view fixed, const std::function<std::string(std::size_t)>& read_header) {
  if (fixed.size() < 16 || std::memcmp(fixed.data(), kMagic, 4) != 0) {
    fail(ErrorCode::Format, "checkpoint: bad magic (expected NMTC)");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(fixed.data());
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::Format, "checkpoint: unsupported version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(p + 8);
  const std::string header_text = read_header(static_cast<std::size_t>(header_len));

  ParsedHeader parsed;
  parsed.payload_start = 16 + header_len;
  json header;
  try {
    header = json::parse(header_text);
    parsed.metadata = parse_metadata(header.at("metadata"));
    for (const auto& t : header.at("tensors")) {
      if (t.at("dtype").get<std::string>() != "f32") fail(ErrorCode::Format, "checkpoint: only f32 is supported");
      auto name = t.at("name").get<std::string>();
      CheckpointReader::Entry e{t.at("shape").get<std::vector<std::int64_t>>(), t.at("offset").get<std::uint64_t>()};
      if (!parsed.entries.emplace(std::move(name), std::move(e)).second) {
        fail(ErrorCode::Format, "checkpoint: duplicate tensor name");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("checkpoint: bad header: ") + e.what());
  }
  return parsed;
}

}  // namespace

std::size_t Tensor::element_count() const { return product(shape); }

void Checkpoint::validate() const {
  for (const auto& [name, t] : tensors) {
    if (t.element_count() != t.values.size()) {
      fail(ErrorCode::ShapeMismatch, "checkpoint: tensor '" + name + "' has " + std::to_string(t.values.size()) +
                                         " values for shape " + shape_str(t.shape));
    }
    for (float v : t.values) {
      if (!std::isfinite(v)) fail(ErrorCode::Format, "checkpoint: tensor '" + name + "' has a non-finite value");
    }
  }
}

Checkpoint checkpoint_average(std::span<const Checkpoint> checkpoints) {
  if (checkpoints.empty()) fail(ErrorCode::EmptyList, "checkpoint_average: no checkpoints");
  const auto& first = checkpoints.front();
  for (const auto& c : checkpoints) {
    c.validate();
    if (c.tensors.size() != first.tensors.size() ||
        !std::equal(c.tensors.begin(), c.tensors.end(), first.tensors.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      fail(ErrorCode::NameSetMismatch, "checkpoint_average: tensor name sets differ");
    }
  }

  const double k = static_cast<double>(checkpoints.size());
  Checkpoint out;
  out.metadata.averaged_from = checkpoints.size();
  for (const auto& c : checkpoints) out.metadata.step = std::max(out.metadata.step, c.metadata.step);

  for (const auto& [name, t0] : first.tensors) {
    std::vector<double> acc(t0.values.size(), 0.0);
    for (const auto& c : checkpoints) {
      const auto& t = c.tensors.at(name);
      if (t.shape != t0.shape) {
        fail(ErrorCode::ShapeMismatch, "checkpoint_average: tensor '" + name + "' has shape " + shape_str(t.shape) +
                                           ", expected " + shape_str(t0.shape));
      }
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += t.values[i];
    }
    Tensor avg{t0.shape, std::vector<float>(acc.size())};
    for (std::size_t i = 0; i < acc.size(); ++i) avg.values[i] = static_cast<float>(acc[i] / k);
    out.tensors.emplace(name, std::move(avg));
  }
  return out;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.validate();
  std::map<std::string, std::vector<std::int64_t>> shapes;
  for (const auto& [name, t] : ckpt.tensors) shapes.emplace(name, t.shape);
  std::string out = prefix_bytes(make_header(shapes, ckpt.metadata));
  for (const auto& [name, t] : ckpt.tensors) append_f32(out, t.values);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  const auto parsed = parse_prefix(bytes.substr(0, std::min<std::size_t>(16, bytes.size())), [&](std::size_t len) {
    if (bytes.size() < 16 + len) fail(ErrorCode::Format, "checkpoint: truncated header");
    return std::string(bytes.substr(16, len));
  });
  Checkpoint ckpt;
  ckpt.metadata = parsed.metadata;
  for (const auto& [name, e] : parsed.entries) {
    const std::size_t n = product(e.shape);
    const std::uint64_t begin = parsed.payload_start + e.offset;
    if (begin + n * 4 > bytes.size()) fail(ErrorCode::Format, "checkpoint: tensor '" + name + "' is truncated");
    Tensor t{e.shape, {}};
    read_f32({reinterpret_cast<const unsigned char*>(bytes.data()) + begin, n * 4}, t.values);
    ckpt.tensors.emplace(name, std::move(t));
  }
  return ckpt;
}

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write checkpoint " + path.string());
  const auto bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

CheckpointReader::CheckpointReader(const std::filesystem::path& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) fail(ErrorCode::Io, "cannot open checkpoint " + path.string());
  std::string fixed(16, '\0');
  in_.read(fixed.data(), 16);
  fixed.resize(static_cast<std::size_t>(in_.gcount()));
  auto parsed = parse_prefix(fixed, [&](std::size_t len) {
    std::string h(len, '\0');
    in_.read(h.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in_.gcount()) != len) fail(ErrorCode::Format, "checkpoint: truncated header");
    return h;
  });
  metadata_ = parsed.metadata;
  entries_ = std::move(parsed.entries);
  payload_start_ = parsed.payload_start;
}

Tensor CheckpointReader::read(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) fail(ErrorCode::NameSetMismatch, "checkpoint: no tensor '" + name + "' in " + path_.string());
  const std::size_t n = product(it->second.shape);
  std::vector<unsigned char> raw(n * 4);
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(payload_start_ + it->second.offset));
  in_.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in_.gcount()) != raw.size()) {
    fail(ErrorCode::Format, "checkpoint: tensor '" + name + "' is truncated in " + path_.string());
  }
  Tensor t{it->second.shape, {}};
  read_f32(raw, t.values);
  return t;
}

void average_checkpoint_files(std::span<const std::filesystem::path> inputs,
                              const std::filesystem::path& output) {
  if (inputs.empty()) fail(ErrorCode::EmptyList, "checkpoint_average: no checkpoints");
  std::vector<CheckpointReader> readers;
  readers.reserve(inputs.size());
  for (const auto& p : inputs) readers.emplace_back(p);

  const auto& ref = readers.front().entries();
  std::map<std::string, std::vector<std::int64_t>> shapes;
  for (const auto& [name, e] : ref) shapes.emplace(name, e.shape);
  CheckpointMetadata meta;
  meta.averaged_from = inputs.size();
  for (auto& r : readers) {
    meta.step = std::max(meta.step, r.metadata().step);
    const auto& entries = r.entries();
    if (entries.size() != ref.size()) fail(ErrorCode::NameSetMismatch, "checkpoint_average: tensor name sets differ");
    for (const auto& [name, e] : entries) {
      auto it = ref.find(name);
      if (it == ref.end()) fail(ErrorCode::NameSetMismatch, "checkpoint_average: tensor name sets differ");
      if (it->second.shape != e.shape) {
        fail(ErrorCode::ShapeMismatch, "checkpoint_average: tensor '" + name + "' has shape " + shape_str(e.shape) +
                                           ", expected " + shape_str(it->second.shape));
      }
    }
  }

  std::ofstream out(output, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write checkpoint " + output.string());
  const auto prefix = prefix_bytes(make_header(shapes, meta));
  out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));

  const double k = static_cast<double>(readers.size());
  for (const auto& [name, shape] : shapes) {
    std::vector<double> acc(product(shape), 0.0);
    for (auto& r : readers) {
      const auto t = r.read(name);
      for (std::size_t i = 0; i < acc.size(); ++i) {
        if (!std::isfinite(t.values[i])) fail(ErrorCode::Format, "checkpoint: tensor '" + name + "' has a non-finite value");
        acc[i] += t.values[i];
      }
    }
    std::vector<float> avg(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) avg[i] = static_cast<float>(acc[i] / k);
    std::string bytes;
    append_f32(bytes, avg);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
}

}  // namespace nmtk::models
