#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tubekit {

// Dense row-major float32 array.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, float fill = 0.0f);
  // Throws InvalidInput if data.size() differs from the product of shape.
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const { return data_.size(); }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// Named float32 tensors, ordered by name.
using TensorStore = std::map<std::string, Tensor>;

// Named-tensor container: "TKT1", u32 little-endian header length, a UTF-8
// JSON header [{"name","shape","dtype":"f32"},...] and the little-endian
// float32 payloads concatenated in header order. Writers emit entries in
// name order.
std::string encode_tensors(const TensorStore& store);
// Throws ParseError on bad magic, malformed header, duplicate names, an
// unsupported dtype, or a payload shorter or longer than the header claims.
TensorStore decode_tensors(std::string_view bytes, const std::string& source = "<memory>");

void save_tensors(const TensorStore& store, const std::filesystem::path& path);
TensorStore load_tensors(const std::filesystem::path& path);

}  // namespace tubekit
