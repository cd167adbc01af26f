#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "tiode/tensor.hpp"

namespace tiode {

struct ParamBlock {
  std::string name;
  Tensor value;
  bool trainable = true;
};

// Ordered collection of named parameter blocks. Insertion order is the
// canonical order used by the checkpoint format, so it must be
// deterministic across runs.
class ParamStore {
public:
  Tensor& add(const std::string& name, Tensor init, bool trainable = true);
  bool has(const std::string& name) const;
  const ParamBlock& block(const std::string& name) const;
  ParamBlock& block(const std::string& name);
  const Tensor& at(const std::string& name) const { return block(name).value; }
  Tensor& at(const std::string& name) { return block(name).value; }

  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  std::vector<ParamBlock>& blocks() { return blocks_; }
  std::size_t size() const { return blocks_.size(); }

  std::size_t total_scalars(bool trainable_only = false) const;
  // FNV-1a over the raw bytes of one block; used to assert frozen blocks
  // never move during training.
  std::uint64_t checksum(const std::string& name) const;
  bool all_finite() const;

private:
  std::vector<ParamBlock> blocks_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace tiode
