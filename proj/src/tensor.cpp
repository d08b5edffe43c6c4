#include "tubekit/tensor.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tubekit/error.hpp"

namespace tubekit {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'T', 'K', 'T', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

Tensor::Tensor(std::vector<std::size_t> shape, float fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_numel(shape_)) {
    throw InvalidInput("tensor data holds " + std::to_string(data_.size()) + " values for shape " +
                       shape_string(shape_));
  }
}

std::string encode_tensors(const TensorStore& store) {
  json header = json::array();
  for (const auto& [name, t] : store) {
    header.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f32"}});
  }
  const std::string h = header.dump();
  std::string out(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(h.size()));
  out += h;
  for (const auto& [name, t] : store) {
    for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

TensorStore decode_tensors(std::string_view bytes, const std::string& source) {
  auto fail = [&](const std::string& what) -> ParseError { return ParseError(source + ": " + what); };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw fail("not a TKT1 tensor file");
  const std::size_t header_len = get_u32(bytes, 4);
  if (bytes.size() < 8 + header_len) throw fail("truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(8, header_len));
  } catch (const json::parse_error& e) {
    throw fail(std::string("malformed header: ") + e.what());
  }
  if (!header.is_array()) throw fail("header must be a JSON array");

  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
  };
  std::vector<Entry> entries;
  std::set<std::string> names;
  std::size_t total = 0;
  try {
    for (const auto& e : header) {
      Entry entry{e.at("name").get<std::string>(), e.at("shape").get<std::vector<std::size_t>>()};
      if (e.at("dtype").get<std::string>() != "f32") throw fail("tensor '" + entry.name + "' has unsupported dtype");
      if (!names.insert(entry.name).second) throw fail("duplicate tensor name '" + entry.name + "'");
      total += shape_numel(entry.shape);
      entries.push_back(std::move(entry));
    }
  } catch (const json::exception& e) {
    throw fail(std::string("malformed header entry: ") + e.what());
  }

  const std::size_t payload = bytes.size() - 8 - header_len;
  if (payload < total * 4) {
    throw fail("truncated payload: " + std::to_string(payload) + " bytes where header claims " +
               std::to_string(total * 4));
  }
  if (payload > total * 4) throw fail("payload has " + std::to_string(payload - total * 4) + " trailing bytes");

  TensorStore store;
  std::size_t at = 8 + header_len;
  for (auto& e : entries) {
    std::vector<float> data(shape_numel(e.shape));
    for (auto& f : data) {
      f = std::bit_cast<float>(get_u32(bytes, at));
      at += 4;
    }
    store.emplace(e.name, Tensor(std::move(e.shape), std::move(data)));
  }
  return store;
}

void save_tensors(const TensorStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot open for writing");
  const std::string bytes = encode_tensors(store);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorStore load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string() + ": cannot open for reading");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_tensors(bytes, path.string());
}

}  // namespace tubekit
