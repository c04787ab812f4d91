#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sig/common/error.hpp"

namespace sig::grad {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape);

/// One named tensor of trainable values.
template <typename T>
struct ParamGroup {
  Shape shape;
  std::vector<T> values;
};

/// Named parameter groups, iterated in lexicographic name order. Shapes are
/// fixed once a group is added.
template <typename T>
class ParamStore {
 public:
  using Map = std::map<std::string, ParamGroup<T>, std::less<>>;

  void add(std::string_view view, Shape shape, std::vector<T> values) {
    const std::string name(view);
    if (groups_.count(name) != 0) throw_config_error("duplicate parameter group '" + name + "'");
    if (numel(shape) != static_cast<std::int64_t>(values.size())) {
      throw_shape_error("group '" + name + "' has shape " + shape_string(shape) + " but " +
                        std::to_string(values.size()) + " values");
    }
    groups_.emplace(name, ParamGroup<T>{std::move(shape), std::move(values)});
  }

  bool contains(std::string_view name) const { return groups_.find(name) != groups_.end(); }

  const ParamGroup<T>& group(std::string_view name) const {
    auto it = groups_.find(name);
    if (it == groups_.end()) throw_config_error("unknown parameter group '" + std::string(name) + "'");
    return it->second;
  }

  std::span<T> values(std::string_view name) {
    auto it = groups_.find(name);
    if (it == groups_.end()) throw_config_error("unknown parameter group '" + std::string(name) + "'");
    return it->second.values;
  }
  std::span<const T> values(std::string_view name) const { return group(name).values; }
  const Shape& shape(std::string_view name) const { return group(name).shape; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(groups_.size());
    for (const auto& [name, _] : groups_) out.push_back(name);
    return out;
  }

  std::size_t size() const { return groups_.size(); }
  bool empty() const { return groups_.empty(); }

  std::int64_t total_values() const {
    std::int64_t n = 0;
    for (const auto& [_, g] : groups_) n += static_cast<std::int64_t>(g.values.size());
    return n;
  }

  bool all_finite() const {
    for (const auto& [_, g] : groups_)
      for (T v : g.values)
        if (!std::isfinite(v)) return false;
    return true;
  }

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, g] : groups_) {
      out.add(name, g.shape, std::vector<U>(g.values.begin(), g.values.end()));
    }
    return out;
  }

  auto begin() const { return groups_.begin(); }
  auto end() const { return groups_.end(); }

 private:
  Map groups_;
};

/// Gradient values keyed by group name. Only groups that were active when
/// the gradient was computed carry an entry.
template <typename T>
using Gradients = std::map<std::string, std::vector<T>, std::less<>>;

/// Canonical group names.
std::string micro_planes_name(int scene);
std::string basis_weights_name(int scene);
inline constexpr std::string_view kBasisPlanes = "basis_planes";
inline constexpr std::string_view kRendererMlp = "renderer_mlp";
inline constexpr std::string_view kEncoder = "encoder";
inline constexpr std::string_view kDecoder = "decoder";

}  // namespace sig::grad
