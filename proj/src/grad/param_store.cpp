#include "sig/grad/param_store.hpp"

namespace sig::grad {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string micro_planes_name(int scene) { return "micro_planes[" + std::to_string(scene) + "]"; }
std::string basis_weights_name(int scene) { return "basis_weights[" + std::to_string(scene) + "]"; }

}  // namespace sig::grad
