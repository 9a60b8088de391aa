#include "cine/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cine/error.hpp"

namespace cine {
namespace {

static_assert(std::endian::native == std::endian::little, "TNS1 I/O assumes a little-endian host");

template <typename T>
constexpr const char* dtype_name();
template <>
constexpr const char* dtype_name<std::uint8_t>() { return "u8"; }
template <>
constexpr const char* dtype_name<float>() { return "f32"; }
template <>
constexpr const char* dtype_name<double>() { return "f64"; }

struct Header {
  std::string dtype;
  Shape shape;
};

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

Header read_header(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing TNS1 header");
  std::istringstream hs(line);
  std::string magic;
  Header h;
  std::size_t ndim = 0;
  hs >> magic >> h.dtype >> ndim;
  if (magic != "TNS1" || !hs) throw IoError(path.string() + ": not a TNS1 file");
  for (std::size_t i = 0; i < ndim; ++i) {
    std::size_t d = 0;
    if (!(hs >> d)) throw IoError(path.string() + ": truncated TNS1 header");
    h.shape.push_back(d);
  }
  return h;
}

template <typename T>
void write_payload(const std::filesystem::path& path, const Shape& shape, const T* data, std::size_t n) {
  std::ofstream out = open_out(path);
  out << "TNS1 " << dtype_name<T>() << ' ' << shape.size();
  for (std::size_t d : shape) out << ' ' << d;
  out << '\n';
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(T)));
  if (!out) throw IoError("failed writing " + path.string());
}

template <typename S>
std::vector<S> read_values(std::istream& in, std::size_t n, const std::filesystem::path& path) {
  std::vector<S> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(S)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(S))) throw IoError(path.string() + ": truncated payload");
  return v;
}

template <typename T>
Tensor<T> read_converting(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const Header h = read_header(in, path);
  const std::size_t n = shape_size(h.shape);
  std::vector<T> out(n);
  if (h.dtype == "f32") {
    const auto v = read_values<float>(in, n, path);
    std::copy(v.begin(), v.end(), out.begin());
  } else if (h.dtype == "f64") {
    const auto v = read_values<double>(in, n, path);
    std::copy(v.begin(), v.end(), out.begin());
  } else {
    throw IoError(path.string() + ": expected a real dtype, found " + h.dtype);
  }
  return Tensor<T>(h.shape, std::move(out));
}

}  // namespace

template <typename T>
void write_tns(const std::filesystem::path& path, const Tensor<T>& tensor) {
  write_payload(path, tensor.shape(), tensor.data(), tensor.size());
}

template <typename T>
Tensor<T> read_tns(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  const Header h = read_header(in, path);
  if (h.dtype != dtype_name<T>()) {
    throw IoError(path.string() + ": dtype " + h.dtype + ", expected " + dtype_name<T>());
  }
  return Tensor<T>(h.shape, read_values<T>(in, shape_size(h.shape), path));
}

template <typename T>
Tensor<T> read_tns_real(const std::filesystem::path& path) {
  return read_converting<T>(path);
}

template <typename T>
void write_tns_complex(const std::filesystem::path& path, const ComplexTensor<T>& tensor) {
  Shape shape = tensor.shape();
  shape.push_back(2);
  std::vector<T> interleaved(2 * tensor.size());
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    interleaved[2 * i] = tensor.real[i];
    interleaved[2 * i + 1] = tensor.imag[i];
  }
  write_payload(path, shape, interleaved.data(), interleaved.size());
}

template <typename T>
ComplexTensor<T> read_tns_complex(const std::filesystem::path& path) {
  const Tensor<T> raw = read_converting<T>(path);
  if (raw.rank() == 0 || raw.shape().back() != 2) {
    throw IoError(path.string() + ": complex tensor needs trailing extent 2, got " + shape_string(raw.shape()));
  }
  const Shape shape(raw.shape().begin(), raw.shape().end() - 1);
  ComplexTensor<T> out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.real[i] = raw[2 * i];
    out.imag[i] = raw[2 * i + 1];
  }
  return out;
}

template void write_tns(const std::filesystem::path&, const Tensor<std::uint8_t>&);
template void write_tns(const std::filesystem::path&, const Tensor<float>&);
template void write_tns(const std::filesystem::path&, const Tensor<double>&);
template Tensor<std::uint8_t> read_tns(const std::filesystem::path&);
template Tensor<float> read_tns(const std::filesystem::path&);
template Tensor<double> read_tns(const std::filesystem::path&);
template Tensor<float> read_tns_real(const std::filesystem::path&);
template Tensor<double> read_tns_real(const std::filesystem::path&);
template void write_tns_complex(const std::filesystem::path&, const ComplexTensor<float>&);
template void write_tns_complex(const std::filesystem::path&, const ComplexTensor<double>&);
template ComplexTensor<float> read_tns_complex(const std::filesystem::path&);
template ComplexTensor<double> read_tns_complex(const std::filesystem::path&);

void KeyValues::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
    return;
  }
  index_[key] = entries_.size();
  entries_.emplace_back(key, value);
}

const std::string& KeyValues::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw ConfigError("missing key '" + key + "'");
  return entries_[it->second].second;
}

std::string KeyValues::get_or(const std::string& key, const std::string& fallback) const {
  auto it = index_.find(key);
  return it == index_.end() ? fallback : entries_[it->second].second;
}

std::string KeyValues::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

namespace {
std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}
}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.contains(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv.set(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KeyValues read_key_values(const std::filesystem::path& path) { return KeyValues::parse(read_text(path)); }

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) { write_text(path, kv.serialize()); }

void write_pgm(const std::filesystem::path& path, const Tensor<std::uint8_t>& pixels) {
  if (pixels.rank() != 2) throw DimensionError("PGM image must be 2-D, got " + shape_string(pixels.shape()));
  std::ofstream out = open_out(path);
  out << "P5\n" << pixels.dim(1) << ' ' << pixels.dim(0) << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

Tensor<std::uint8_t> read_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 255 || !in) throw IoError(path.string() + ": not an 8-bit P5 PGM");
  in.get();
  Tensor<std::uint8_t> out({h, w});
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (in.gcount() != static_cast<std::streamsize>(out.size())) throw IoError(path.string() + ": truncated PGM");
  return out;
}

}  // namespace cine
