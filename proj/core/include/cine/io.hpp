#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cine/tensor.hpp"

namespace cine {

// TNS1 tensor files: an ASCII header line "TNS1 <dtype> <ndim> <d0> <d1> ...\n"
// followed by row-major little-endian scalars. dtype is one of u8, f32, f64.
// Complex tensors carry a trailing extent 2 (real, imag interleaved per element).

template <typename T>
void write_tns(const std::filesystem::path& path, const Tensor<T>& tensor);

// Reads a tensor whose stored dtype matches T exactly.
template <typename T>
Tensor<T> read_tns(const std::filesystem::path& path);

// Reads f32 or f64 data, converting to T.
template <typename T>
Tensor<T> read_tns_real(const std::filesystem::path& path);

template <typename T>
void write_tns_complex(const std::filesystem::path& path, const ComplexTensor<T>& tensor);

template <typename T>
ComplexTensor<T> read_tns_complex(const std::filesystem::path& path);

// Ordered key=value documents: one pair per line, '#' starts a comment line.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value);
  bool contains(const std::string& key) const { return index_.count(key) != 0; }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const& { return entries_; }
  // Ranging over entries() of a temporary would dangle.
  void entries() && = delete;

  std::string serialize() const;
  static KeyValues parse(const std::string& text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

// 8-bit binary PGM (P5). Rows of `pixels` are image rows.
void write_pgm(const std::filesystem::path& path, const Tensor<std::uint8_t>& pixels);
Tensor<std::uint8_t> read_pgm(const std::filesystem::path& path);

}  // namespace cine
