#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

#include "tiode/sim.hpp"
#include "tiode/tensor.hpp"

namespace tiode {

nlohmann::json sim_config_to_json(const SimConfig& cfg);
SimConfig sim_config_from_json(const nlohmann::json& j);

// Per-feature affine normalization x -> (x - mean) / std computed from
// the train split; std floored at 1e-8 so constant features stay finite.
struct FeatureNorm {
  std::vector<double> mean;
  std::vector<double> std;

  void apply(Tensor& features) const;
  void invert(Tensor& features) const;
  double denorm(double v, std::size_t dim) const { return v * std[dim] + mean[dim]; }
};

// Train/valid/test trajectory sets plus windowing lengths. Features are
// held in physical units; `norm` (train-split statistics, computed at
// load) maps them to zero-mean/unit-variance model inputs and back.
struct DatasetSplit {
  int condition_len = 12;
  int prediction_len = 12;
  TrajectorySet train;
  TrajectorySet valid;
  TrajectorySet test;
  FeatureNorm norm;

  const TrajectorySet& split(const std::string& name) const;
  // Normalized feature frame [N,d] of one sample at one step.
  Tensor normalized_frame(const TrajectorySet& set, std::size_t s, std::size_t t) const;
  void compute_norm();
  void validate() const;
};

inline constexpr int kDatasetFormatVersion = 1;

// Directory layout: meta.json plus <split>_traj.f64 ([S,T,N,d]) and
// <split>_adj.f64 ([S,N,N]); little-endian 64-bit floats, row-major,
// shapes authoritative in meta.json. Raw (denormalized) units on disk.
void write_dataset(const DatasetSplit& ds, const std::filesystem::path& dir);

// Inverse of write_dataset; validates invariants and normalizes features
// from train-split statistics.
DatasetSplit load_dataset(const std::filesystem::path& dir);

// Little-endian f64 blob helpers (shape comes from the caller).
void write_f64_blob(const std::filesystem::path& file, const Tensor& t);
Tensor read_f64_blob(const std::filesystem::path& file, const Shape& shape);

}  // namespace tiode
