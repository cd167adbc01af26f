#include "tiode/params.hpp"

#include <cstring>

#include "tiode/errors.hpp"
#include "tiode/rng.hpp"

namespace tiode {

Tensor& ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (index_.count(name)) throw UsageError("ParamStore::add: duplicate block '" + name + "'");
  if (!init.all_finite()) throw ShapeError("ParamStore::add: non-finite init for '" + name + "'");
  index_[name] = blocks_.size();
  blocks_.push_back(ParamBlock{name, std::move(init), trainable});
  return blocks_.back().value;
}

bool ParamStore::has(const std::string& name) const { return index_.count(name) > 0; }

const ParamBlock& ParamStore::block(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("ParamStore: unknown block '" + name + "'");
  return blocks_[it->second];
}

ParamBlock& ParamStore::block(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw UsageError("ParamStore: unknown block '" + name + "'");
  return blocks_[it->second];
}

std::size_t ParamStore::total_scalars(bool trainable_only) const {
  std::size_t n = 0;
  for (const auto& b : blocks_) {
    if (trainable_only && !b.trainable) continue;
    n += b.value.size();
  }
  return n;
}

std::uint64_t ParamStore::checksum(const std::string& name) const {
  const Tensor& t = block(name).value;
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
  for (std::size_t i = 0; i < t.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

bool ParamStore::all_finite() const {
  for (const auto& b : blocks_) {
    if (!b.value.all_finite()) return false;
  }
  return true;
}

}  // namespace tiode
