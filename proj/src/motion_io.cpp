#include "motionmix/motion_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "motionmix/error.hpp"

namespace motionmix::io {

void ByteWriter::put_u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void ByteWriter::put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }

void ByteWriter::put_f64(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

void ByteWriter::put_f64s(std::span<const double> v) {
  buf_.reserve(buf_.size() + 8 * v.size());
  for (double x : v) put_f64(x);
}

void ByteWriter::put_bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

void ByteWriter::put_record(const ByteWriter& payload) {
  put_u32(static_cast<std::uint32_t>(payload.buf_.size()));
  buf_.insert(buf_.end(), payload.buf_.begin(), payload.buf_.end());
}

void ByteReader::need(std::size_t n) const {
  if (remaining() < n) throw IoError("truncated file: needed " + std::to_string(n) +
                                     " bytes, " + std::to_string(remaining()) + " left");
}

std::uint32_t ByteReader::get_u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 4;
  return v;
}

std::int32_t ByteReader::get_i32() { return static_cast<std::int32_t>(get_u32()); }

double ByteReader::get_f64() {
  need(8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += 8;
  return std::bit_cast<double>(bits);
}

void ByteReader::get_f64s(std::span<double> out) {
  need(8 * out.size());
  for (double& v : out) v = get_f64();
}

std::string_view ByteReader::get_bytes(std::size_t n) {
  need(n);
  std::string_view s(reinterpret_cast<const char*>(data_.data() + pos_), n);
  pos_ += n;
  return s;
}

ByteReader ByteReader::get_record() {
  const std::uint32_t len = get_u32();
  need(len);
  ByteReader sub(data_.subspan(pos_, len));
  pos_ += len;
  return sub;
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

ByteWriter begin_container(std::string_view magic, const nlohmann::json& header) {
  ByteWriter w;
  w.put_bytes(magic);
  const std::string text = header.dump();
  w.put_u32(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text);
  return w;
}

nlohmann::json open_container(ByteReader& reader, std::string_view magic) {
  if (reader.remaining() < magic.size() || reader.get_bytes(magic.size()) != magic) {
    throw IoError("bad magic: expected " + std::string(magic));
  }
  const std::uint32_t len = reader.get_u32();
  const std::string_view text = reader.get_bytes(len);
  nlohmann::json header = nlohmann::json::parse(text, nullptr, false);
  if (header.is_discarded() || !header.is_object()) throw IoError("malformed header");
  if (header.value("version", -1) != kFormatVersion) {
    throw IoError("unsupported format version " + header.value("version", nlohmann::json()).dump());
  }
  return header;
}

}  // namespace motionmix::io
