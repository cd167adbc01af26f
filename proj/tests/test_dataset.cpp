#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tiode/dataset.hpp"
#include "tiode/errors.hpp"

using namespace tiode;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tiode_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

DatasetSplit make_dataset(std::uint64_t seed, int t_len = 8) {
  SimConfig cfg;
  cfg.system = System::kSprings;
  cfg.n_particles = 3;
  cfg.n_timesteps = t_len;
  cfg.sample_stride = 10;
  cfg.seed = seed;
  DatasetSplit ds;
  ds.condition_len = 3;
  ds.prediction_len = 2;
  ds.train = simulate_springs(cfg, 4);
  ds.train.split = "train";
  cfg.seed = seed + 1;
  ds.valid = simulate_springs(cfg, 2);
  ds.valid.split = "valid";
  cfg.seed = seed + 2;
  ds.test = simulate_springs(cfg, 2);
  ds.test.split = "test";
  return ds;
}

}  // namespace

TEST_CASE("write/load round trip is bit exact") {
  TempDir tmp;
  DatasetSplit ds = make_dataset(7);
  write_dataset(ds, tmp.path);
  DatasetSplit back = load_dataset(tmp.path);

  CHECK(back.train.features.bitwise_equal(ds.train.features));
  CHECK(back.train.adjacency.bitwise_equal(ds.train.adjacency));
  CHECK(back.test.adjacency.bitwise_equal(ds.test.adjacency));

  // Writing the loaded dataset back must reproduce the blobs bit-exactly.
  TempDir tmp2;
  write_dataset(back, tmp2.path);
  for (const char* f : {"train_traj.f64", "train_adj.f64", "valid_traj.f64", "test_traj.f64"}) {
    std::ifstream a(tmp.path / f, std::ios::binary), b(tmp2.path / f, std::ios::binary);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
  }
}

TEST_CASE("meta shape disagreement with blob length is rejected") {
  TempDir tmp;
  DatasetSplit ds = make_dataset(9);
  write_dataset(ds, tmp.path);
  // Truncate one blob behind meta.json's back.
  fs::resize_file(tmp.path / "train_traj.f64", 16);
  CHECK_THROWS_AS(load_dataset(tmp.path), IoError);
}

TEST_CASE("blob size matches the format arithmetic") {
  TempDir tmp;
  // S=1, T=2, N=2, d=4 -> 16 doubles -> 128 bytes.
  Tensor t = Tensor::zeros({1, 2, 2, 4});
  write_f64_blob(tmp.path / "x.f64", t);
  CHECK(fs::file_size(tmp.path / "x.f64") == 128);
  Tensor back = read_f64_blob(tmp.path / "x.f64", {1, 2, 2, 4});
  CHECK(back.bitwise_equal(t));
}

TEST_CASE("normalization round trip and degenerate variance guard") {
  TempDir tmp;
  DatasetSplit ds = make_dataset(11);
  // Make one feature dimension exactly constant across the train split.
  Tensor& f = ds.train.features;
  for (std::size_t i = 0; i < f.size(); i += 4) f[i + 3] = 2.5;
  write_dataset(ds, tmp.path);
  DatasetSplit back = load_dataset(tmp.path);

  Tensor normed = back.train.features;
  back.norm.apply(normed);
  CHECK(normed.all_finite());
  // Constant dimension normalizes to 0 via the std floor, no NaN.
  for (std::size_t i = 3; i < normed.size(); i += 4) {
    CHECK(normed[i] == doctest::Approx(0.0));
  }

  // denormalize(normalize(x)) = x to 1e-12.
  Tensor round = normed;
  back.norm.invert(round);
  for (std::size_t i = 0; i < round.size(); ++i) {
    CHECK(std::abs(round[i] - back.train.features[i]) < 1e-12);
  }
}

TEST_CASE("optional dynamic adjacency file is picked up") {
  TempDir tmp;
  DatasetSplit ds = make_dataset(13);
  write_dataset(ds, tmp.path);
  const std::size_t s = ds.train.n_samples(), t = ds.train.n_steps(), n = ds.train.n_nodes();
  write_f64_blob(tmp.path / "train_adj_dyn.f64", Tensor::zeros({s, t, n, n}));
  DatasetSplit back = load_dataset(tmp.path);
  CHECK(back.train.has_dynamic_adjacency());
  CHECK(!back.test.has_dynamic_adjacency());
}
