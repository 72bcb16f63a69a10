#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace motionmix::io {

// Shared container: 8-byte magic, u32-LE-prefixed JSON header, then
// u32-LE-prefixed binary records. All multi-byte values are little-endian.
inline constexpr std::string_view kDatasetMagic = "MMIXDS01";
inline constexpr std::string_view kCheckpointMagic = "MMIXCK01";
inline constexpr int kFormatVersion = 1;

class ByteWriter {
 public:
  void put_u32(std::uint32_t v);
  void put_i32(std::int32_t v);
  void put_f64(double v);
  void put_f64s(std::span<const double> v);
  void put_bytes(std::string_view s);
  void put_record(const ByteWriter& payload);  // u32 length + bytes

  const std::vector<unsigned char>& bytes() const { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const unsigned char> data) : data_(data) {}

  std::uint32_t get_u32();
  std::int32_t get_i32();
  double get_f64();
  void get_f64s(std::span<double> out);
  std::string_view get_bytes(std::size_t n);
  ByteReader get_record();

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const;
  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);

// Writes magic and header; returns the writer to continue with records.
ByteWriter begin_container(std::string_view magic, const nlohmann::json& header);
// Validates magic and version, returns the header and leaves `reader` at the
// first record.
nlohmann::json open_container(ByteReader& reader, std::string_view magic);

}  // namespace motionmix::io
