#include "interlat/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace interlat {

namespace {

void append_bytes(std::vector<unsigned char>& buf, const void* src, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(src);
  buf.insert(buf.end(), p, p + n);
}

template <typename T>
void append_le(std::vector<unsigned char>& buf, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    buf.push_back(static_cast<unsigned char>((value >> (8 * i)) & 0xFF));
  }
}

struct Reader {
  const std::vector<unsigned char>& buf;
  size_t pos = 0;

  void need(size_t n) const {
    if (pos + n > buf.size()) {
      fail(ErrorKind::IoError, "checkpoint: file is truncated");
    }
  }
  template <typename T>
  T read_le() {
    need(sizeof(T));
    T value = 0;
    for (size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(buf[pos + i]) << (8 * i);
    }
    pos += sizeof(T);
    return value;
  }
  std::string read_string(size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path,
                     const CheckpointEntries& entries) {
  std::vector<unsigned char> buf;
  append_bytes(buf, "IALT", 4);
  append_le<uint32_t>(buf, kCheckpointVersion);
  if (entries.size() > std::numeric_limits<uint32_t>::max()) {
    fail(ErrorKind::ConfigInvalid, "checkpoint: too many entries");
  }
  append_le<uint32_t>(buf, static_cast<uint32_t>(entries.size()));
  for (const auto& [name, tensor] : entries) {
    if (!tensor.defined()) {
      fail(ErrorKind::ConfigInvalid, "checkpoint: undefined tensor '" + name + "'");
    }
    if (name.size() > std::numeric_limits<uint16_t>::max()) {
      fail(ErrorKind::ConfigInvalid, "checkpoint: entry name too long");
    }
    append_le<uint16_t>(buf, static_cast<uint16_t>(name.size()));
    append_bytes(buf, name.data(), name.size());
    buf.push_back(static_cast<unsigned char>(tensor.dtype()));
    if (tensor.rank() > 255) {
      fail(ErrorKind::ConfigInvalid, "checkpoint: rank exceeds 255");
    }
    buf.push_back(static_cast<unsigned char>(tensor.rank()));
    for (size_t d : tensor.shape()) append_le<uint64_t>(buf, static_cast<uint64_t>(d));
    size_t n = tensor.numel();
    if (tensor.dtype() == DType::F32) {
      const float* data = tensor.data_f32();
      for (size_t i = 0; i < n; ++i) {
        append_le<uint32_t>(buf, std::bit_cast<uint32_t>(data[i]));
      }
    } else {
      const double* data = tensor.data_f64();
      for (size_t i = 0; i < n; ++i) {
        append_le<uint64_t>(buf, std::bit_cast<uint64_t>(data[i]));
      }
    }
  }
  uint32_t crc = static_cast<uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), buf.data(), static_cast<uInt>(buf.size())));
  append_le<uint32_t>(buf, crc);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(ErrorKind::IoError, "checkpoint: cannot open '" + path + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) {
    fail(ErrorKind::IoError, "checkpoint: write to '" + path + "' failed");
  }
}

CheckpointEntries load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(ErrorKind::IoError, "checkpoint: cannot open '" + path + "'");
  }
  std::vector<unsigned char> buf(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    fail(ErrorKind::IoError, "checkpoint: read from '" + path + "' failed");
  }

  Reader reader{buf};
  std::string magic = reader.read_string(4);
  if (magic != "IALT") {
    fail(ErrorKind::FormatVersionMismatch,
         "checkpoint: '" + path + "' is not a checkpoint file");
  }
  uint32_t version = reader.read_le<uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::FormatVersionMismatch,
         "checkpoint: unsupported format version " + std::to_string(version));
  }
  uint32_t count = reader.read_le<uint32_t>();

  struct Raw {
    std::string name;
    DType dtype;
    Shape shape;
    std::vector<double> values;
  };
  std::vector<Raw> raws;
  raws.reserve(count);
  for (uint32_t e = 0; e < count; ++e) {
    Raw raw;
    uint16_t name_len = reader.read_le<uint16_t>();
    raw.name = reader.read_string(name_len);
    uint8_t dtype_code = reader.read_le<uint8_t>();
    if (dtype_code > 1) {
      fail(ErrorKind::FormatVersionMismatch,
           "checkpoint: unknown dtype code " + std::to_string(dtype_code));
    }
    raw.dtype = static_cast<DType>(dtype_code);
    uint8_t rank = reader.read_le<uint8_t>();
    raw.shape.resize(rank);
    for (uint8_t d = 0; d < rank; ++d) {
      raw.shape[d] = static_cast<size_t>(reader.read_le<uint64_t>());
    }
    size_t n = shape_numel(raw.shape);
    raw.values.resize(n);
    if (raw.dtype == DType::F32) {
      for (size_t i = 0; i < n; ++i) {
        raw.values[i] = static_cast<double>(
            std::bit_cast<float>(reader.read_le<uint32_t>()));
      }
    } else {
      for (size_t i = 0; i < n; ++i) {
        raw.values[i] = std::bit_cast<double>(reader.read_le<uint64_t>());
      }
    }
    raws.push_back(std::move(raw));
  }
  uint32_t stored_crc = reader.read_le<uint32_t>();
  if (reader.pos != buf.size()) {
    fail(ErrorKind::IoError, "checkpoint: trailing bytes after checksum");
  }
  uint32_t actual_crc = static_cast<uint32_t>(crc32(
      crc32(0L, Z_NULL, 0), buf.data(), static_cast<uInt>(buf.size() - 4)));
  if (stored_crc != actual_crc) {
    fail(ErrorKind::ChecksumMismatch,
         "checkpoint: CRC mismatch in '" + path + "'");
  }

  CheckpointEntries entries;
  entries.reserve(raws.size());
  for (auto& raw : raws) {
    entries.emplace_back(raw.name,
                         Tensor::from_data(raw.shape, raw.values, raw.dtype));
  }
  return entries;
}

const Tensor& checkpoint_get(const CheckpointEntries& entries,
                             const std::string& name) {
  for (const auto& [entry_name, tensor] : entries) {
    if (entry_name == name) return tensor;
  }
  fail(ErrorKind::ConfigInvalid, "checkpoint: missing entry '" + name + "'");
}

}  // namespace interlat
