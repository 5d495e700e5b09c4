#include "palmcd/raster.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "palmcd/errors.hpp"

namespace palmcd {

namespace {

constexpr char kMagic[8] = {'R', 'I', 'M', 'G', 'v', '0', '0', '1'};

void put_f32_le(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

float get_f32_le(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                       (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

std::string modality_name(Modality m) {
  return m == Modality::Optical ? "optical" : "sar";
}

Modality modality_from_name(const std::string& name) {
  if (name == "optical") return Modality::Optical;
  if (name == "sar") return Modality::Sar;
  throw FormatError("unknown modality '" + name + "'");
}

Raster::Raster(int w, int h, int L, Modality m, double res)
    : width(w), height(h), bands(L), modality(m), resolution(res) {
  if (w < 1 || h < 1 || L < 1)
    throw GeometryError("raster dimensions must be positive");
  data.assign(static_cast<std::size_t>(w) * h * L, 0.0);
}

void Raster::validate() const {
  if (width < 1 || height < 1 || bands < 1)
    throw GeometryError("raster dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(width) * height * bands)
    throw GeometryError("raster data length does not match dimensions");
  for (double v : data) {
    if (!std::isfinite(v)) throw DataError("raster contains NaN or Inf");
    if (modality == Modality::Sar && v < 0.0)
      throw DataError("SAR raster contains negative intensity");
  }
}

BinaryChangeMask::BinaryChangeMask(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) throw GeometryError("mask dimensions must be positive");
  values.assign(static_cast<std::size_t>(w) * h, 0);
}

std::size_t BinaryChangeMask::count_set() const {
  std::size_t n = 0;
  for (auto v : values) n += v;
  return n;
}

Raster read_raster(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");

  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw FormatError("'" + path + "' is not a RIMG file");

  std::string header;
  if (!std::getline(in, header))
    throw FormatError("'" + path + "': missing header line");

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path + "': bad header: " + e.what());
  }
  static const char* required[] = {"width", "height", "bands", "modality", "resolution"};
  for (const char* key : required)
    if (!j.contains(key)) throw FormatError("'" + path + "': header missing '" + key + "'");
  if (j.size() != 5) throw FormatError("'" + path + "': header has unknown keys");
  if (!j["width"].is_number_integer() || !j["height"].is_number_integer() ||
      !j["bands"].is_number_integer() || !j["modality"].is_string() ||
      !j["resolution"].is_number())
    throw FormatError("'" + path + "': header field types are wrong");

  const int w = j["width"].get<int>();
  const int h = j["height"].get<int>();
  const int L = j["bands"].get<int>();
  if (w < 1 || h < 1 || L < 1)
    throw FormatError("'" + path + "': nonpositive dimensions");

  Raster r(w, h, L, modality_from_name(j["modality"].get<std::string>()),
           j["resolution"].get<double>());

  const std::size_t count = r.size();
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size())
    throw FormatError("'" + path + "': payload shorter than header declares");
  char extra;
  if (in.read(&extra, 1))
    throw FormatError("'" + path + "': payload longer than header declares");

  for (std::size_t i = 0; i < count; ++i)
    r.data[i] = static_cast<double>(get_f32_le(payload.data() + 4 * i));
  r.validate();
  return r;
}

void write_raster(const Raster& r, const std::string& path) {
  r.validate();
  nlohmann::json j;
  j["width"] = r.width;
  j["height"] = r.height;
  j["bands"] = r.bands;
  j["modality"] = modality_name(r.modality);
  j["resolution"] = r.resolution;

  std::string buf;
  buf.reserve(8 + 64 + r.size() * 4);
  buf.append(kMagic, 8);
  buf += j.dump();
  buf += '\n';
  for (double v : r.data) put_f32_le(buf, static_cast<float>(v));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

std::pair<Raster, double> normalize(const Raster& r) {
  r.validate();
  double maxv = -std::numeric_limits<double>::infinity();
  for (double v : r.data) maxv = std::max(maxv, v);
  if (maxv <= 0.0) throw DegenerateError("normalize: image has no positive value");
  Raster out = r;
  for (double& v : out.data) v /= maxv;
  return {std::move(out), maxv};
}

namespace {

int next_pgm_token(std::istream& in) {
  // skips whitespace and '#' comments, then reads one unsigned integer
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw FormatError("PGM: expected integer token");
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 30) throw FormatError("PGM: integer overflow in header");
    c = in.get();
  }
  if (c != EOF) in.unget();
  return static_cast<int>(v);
}

}  // namespace

BinaryChangeMask read_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  char p, five;
  in.get(p);
  in.get(five);
  if (!in || p != 'P' || five != '5') throw FormatError("'" + path + "' is not a PGM P5 file");
  const int w = next_pgm_token(in);
  const int h = next_pgm_token(in);
  const int maxval = next_pgm_token(in);
  if (w < 1 || h < 1) throw FormatError("'" + path + "': nonpositive dimensions");
  if (maxval != 255) throw FormatError("'" + path + "': maxval must be 255");
  in.get();  // single whitespace byte after maxval

  BinaryChangeMask m(w, h);
  std::vector<unsigned char> payload(m.values.size());
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size())
    throw FormatError("'" + path + "': truncated payload");
  for (std::size_t i = 0; i < payload.size(); ++i) {
    if (payload[i] == 0)
      m.values[i] = 0;
    else if (payload[i] == 255)
      m.values[i] = 1;
    else
      throw FormatError("'" + path + "': non-binary pixel value");
  }
  return m;
}

void write_mask(const BinaryChangeMask& m, const std::string& path) {
  if (m.width < 1 || m.height < 1 ||
      m.values.size() != static_cast<std::size_t>(m.width) * m.height)
    throw GeometryError("mask dimensions do not match payload");
  for (auto v : m.values)
    if (v != 0 && v != 1) throw DataError("mask values must be 0 or 1");

  std::string buf = "P5\n" + std::to_string(m.width) + " " + std::to_string(m.height) + "\n255\n";
  for (auto v : m.values) buf.push_back(v ? static_cast<char>(255) : 0);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace palmcd
