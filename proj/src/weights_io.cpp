#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nlgpc/errors.hpp"
#include "nlgpc/recnn.hpp"

namespace nlgpc {

namespace {

constexpr std::array<char, 4> kMagic = {'R', 'N', 'M', 'C'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  std::uint8_t u8() {
    if (pos + 1 > buf.size())
      throw SerializationError(SerializationError::Kind::Truncated, "weight file truncated");
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint16_t u16() {
    if (pos + 2 > buf.size())
      throw SerializationError(SerializationError::Kind::Truncated, "weight file truncated");
    const std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                            (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    if (pos + 4 > buf.size())
      throw SerializationError(SerializationError::Kind::Truncated, "weight file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
};

}  // namespace

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void save_weights(const ChildModel& model, std::ostream& out) {
  std::string payload;
  put_u16(payload, kFormatVersion);
  put_u16(payload, static_cast<std::uint16_t>(model.layer_count()));
  int in = model.input_width();
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    const LayerSpec& spec = model.specs()[i];
    const std::uint8_t kind_act =
        static_cast<std::uint8_t>(static_cast<std::uint8_t>(spec.kind) |
                                  (static_cast<std::uint8_t>(spec.activation) << 4));
    payload.push_back(static_cast<char>(kind_act));
    put_u16(payload, static_cast<std::uint16_t>(spec.units));
    put_u16(payload, static_cast<std::uint16_t>(in));
    in = spec.units;
  }
  model.for_each_array_const([&payload](const std::vector<double>& arr) {
    for (double v : arr) put_f32(payload, static_cast<float>(v));
  });
  out.write(kMagic.data(), 4);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const std::uint32_t crc =
      crc32(reinterpret_cast<const unsigned char*>(payload.data()), payload.size());
  char crc_bytes[4];
  for (int i = 0; i < 4; ++i) crc_bytes[i] = static_cast<char>((crc >> (8 * i)) & 0xff);
  out.write(crc_bytes, 4);
  if (!out) throw IoError("save_weights: stream write failed");
}

void save_weights(const ChildModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_weights: cannot open " + path);
  save_weights(model, f);
}

ChildModel load_weights(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string all = ss.str();

  if (all.size() < 4 || std::memcmp(all.data(), kMagic.data(), 4) != 0)
    throw SerializationError(SerializationError::Kind::BadMagic, "weight file: bad magic");

  // Body = everything after the magic; its last 4 bytes are the CRC once we
  // know the expected length from the layer table.
  const std::string body = all.substr(4);
  Reader r{body};
  const std::uint16_t version = r.u16();
  if (version != kFormatVersion)
    throw SerializationError(SerializationError::Kind::BadVersion, "weight file: unsupported version");
  const std::uint16_t layer_count = r.u16();
  if (layer_count == 0)
    throw SerializationError(SerializationError::Kind::BadLayerTable, "weight file: zero layers");

  std::vector<LayerSpec> specs;
  int input_width = 0;
  int expected_in = -1;
  for (std::uint16_t i = 0; i < layer_count; ++i) {
    const std::uint8_t kind_act = r.u8();
    const std::uint8_t kind_raw = kind_act & 0x0f;
    const std::uint8_t act_raw = kind_act >> 4;
    if (kind_raw > 2 || act_raw > 3)
      throw SerializationError(SerializationError::Kind::BadLayerTable, "weight file: bad layer kind");
    LayerSpec spec;
    spec.kind = static_cast<LayerKind>(kind_raw);
    spec.activation = static_cast<Activation>(act_raw);
    spec.units = r.u16();
    const int in_width = r.u16();
    if (spec.units < 1 || in_width < 1)
      throw SerializationError(SerializationError::Kind::BadLayerTable, "weight file: bad layer shape");
    if (i == 0)
      input_width = in_width;
    else if (in_width != expected_in)
      throw SerializationError(SerializationError::Kind::BadLayerTable, "weight file: layer chain mismatch");
    expected_in = spec.units;
    specs.push_back(spec);
  }

  const std::size_t scalar_count = count_parameters(specs, input_width);
  const std::size_t payload_size = r.pos + 4 * scalar_count;
  if (body.size() < payload_size + 4)
    throw SerializationError(SerializationError::Kind::Truncated, "weight file truncated");
  if (body.size() > payload_size + 4)
    throw SerializationError(SerializationError::Kind::BadLayerTable, "weight file: trailing bytes");

  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i)
    stored |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(body[payload_size + i])) << (8 * i);
  const std::uint32_t actual =
      crc32(reinterpret_cast<const unsigned char*>(body.data()), payload_size);
  if (stored != actual)
    throw SerializationError(SerializationError::Kind::ChecksumMismatch, "weight file: checksum mismatch");

  ChildModel model(specs, input_width);
  model.for_each_array([&r](std::vector<double>& arr) {
    for (double& v : arr) v = r.f32();
  });
  return model;
}

ChildModel load_weights(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_weights: cannot open " + path);
  return load_weights(f);
}

}  // namespace nlgpc
