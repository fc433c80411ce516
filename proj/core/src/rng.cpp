#include "nscmi/rng.hpp"

namespace nscmi {

std::uint64_t derive_seed(std::uint64_t master, Stream tag, std::uint64_t index) noexcept {
  const auto tag_bits = static_cast<std::uint64_t>(tag);
  const std::uint64_t base = mix64(master ^ mix64(tag_bits));
  return mix64(base + index * 0x9e3779b97f4a7c15ULL);
}

}  // namespace nscmi
