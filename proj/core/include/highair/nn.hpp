#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "highair/tensor.hpp"

namespace highair::nn {

using Rng = std::mt19937_64;

enum class Activation { kLinear, kTanh, kRelu };

struct DenseLayer {
  ad::Tensor weight;  // [in x out]
  ad::Tensor bias;    // [out]
  Activation activation = Activation::kLinear;
};

struct FnnParams {
  std::vector<DenseLayer> layers;

  std::size_t input_size() const;
  std::size_t output_size() const;
};

// Gates are packed column-wise in the order input, forget, candidate, output.
struct LstmParams {
  ad::Tensor w_input;   // [input_size x 4*hidden]
  ad::Tensor w_hidden;  // [hidden x 4*hidden]
  ad::Tensor bias;      // [4*hidden]
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
};

struct LstmState {
  ad::Tensor h;  // [rows x hidden]
  ad::Tensor c;
};

// Named, ordered view over parameter tensors. Entries share storage with the
// owning parameter structs, so updates through either are visible to both.
class ParamSet {
 public:
  void add(std::string name, ad::Tensor tensor);
  void add_fnn(const std::string& prefix, const FnnParams& fnn);
  void add_lstm(const std::string& prefix, const LstmParams& lstm);

  const ad::Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad() const;
  // Copies values (not handles) from `other`; names and shapes must match.
  void copy_values_from(const ParamSet& other) const;

 private:
  std::vector<std::pair<std::string, ad::Tensor>> entries_;
};

// ---- construction ----------------------------------------------------------

// Xavier-uniform in +-sqrt(6/(fan_in+fan_out)); the same bound the samples obey.
double xavier_bound(std::size_t fan_in, std::size_t fan_out);
double uniform01(Rng& rng);

// dims = {in, h1, ..., out}; one activation per layer.
FnnParams make_fnn(std::span<const std::size_t> dims, std::span<const Activation> activations, Rng& rng);
FnnParams make_fnn(std::initializer_list<std::size_t> dims, std::initializer_list<Activation> activations,
                   Rng& rng);
// Weights per gate block use the (input, hidden) fan; biases zero except forget = 1.
LstmParams make_lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng);

// ---- forward ---------------------------------------------------------------

ad::Tensor fnn_forward(ad::Tape& tape, const FnnParams& params, const ad::Tensor& x);
LstmState lstm_zero_state(const LstmParams& params, std::size_t rows);
LstmState lstm_step(ad::Tape& tape, const LstmParams& params, const ad::Tensor& x, const LstmState& prev);
LstmState lstm_unroll(ad::Tape& tape, const LstmParams& params, std::span<const ad::Tensor> inputs,
                      LstmState initial);

// ---- optimizer -------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // One bias-corrected update of every parameter, then zeroes the gradients.
  // Throws std::invalid_argument naming a parameter whose gradient is missing.
  void step(const ParamSet& params);

  std::uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

// ---- checkpoint ------------------------------------------------------------
//
// Layout (all integers little-endian):
//   "HAIRCKPT" | u32 version | u64 manifest_len | manifest JSON bytes |
//   u32 count | count x { u32 name_len | name | u32 ndim | u64 dims[ndim] |
//                         f64 payload[prod(dims)] }

struct Checkpoint {
  nlohmann::json manifest;
  std::vector<std::pair<std::string, ad::Tensor>> tensors;

  const ad::Tensor& tensor(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& manifest, const ParamSet& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Loads values into `params`; every name must be present with a matching shape.
void load_into(const Checkpoint& checkpoint, const ParamSet& params);

// FNV-1a over the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& config);

}  // namespace highair::nn
