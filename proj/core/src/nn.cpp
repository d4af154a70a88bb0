#include "highair/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "highair/errors.hpp"

namespace highair::nn {

std::size_t FnnParams::input_size() const { return layers.empty() ? 0 : layers.front().weight.shape()[0]; }
std::size_t FnnParams::output_size() const { return layers.empty() ? 0 : layers.back().weight.shape()[1]; }

// ---- ParamSet --------------------------------------------------------------

void ParamSet::add(std::string name, ad::Tensor tensor) {
  if (contains(name)) throw std::invalid_argument("ParamSet: duplicate parameter name '" + name + "'");
  entries_.emplace_back(std::move(name), std::move(tensor));
}

void ParamSet::add_fnn(const std::string& prefix, const FnnParams& fnn) {
  for (std::size_t i = 0; i < fnn.layers.size(); ++i) {
    add(prefix + ".layer" + std::to_string(i) + ".weight", fnn.layers[i].weight);
    add(prefix + ".layer" + std::to_string(i) + ".bias", fnn.layers[i].bias);
  }
}

void ParamSet::add_lstm(const std::string& prefix, const LstmParams& lstm) {
  add(prefix + ".w_input", lstm.w_input);
  add(prefix + ".w_hidden", lstm.w_hidden);
  add(prefix + ".bias", lstm.bias);
}

const ad::Tensor& ParamSet::get(const std::string& name) const {
  for (const auto& [n, t] : entries_)
    if (n == name) return t;
  throw std::out_of_range("ParamSet: no parameter named '" + name + "'");
}

bool ParamSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

void ParamSet::zero_grad() const {
  for (const auto& e : entries_) {
    auto t = e.second;
    t.zero_grad();
  }
}

void ParamSet::copy_values_from(const ParamSet& other) const {
  if (other.size() != size()) throw std::invalid_argument("ParamSet::copy_values_from: size mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [name, dst] = entries_[i];
    const auto& [other_name, src] = other.entries_[i];
    if (name != other_name || dst.shape() != src.shape()) {
      throw std::invalid_argument("ParamSet::copy_values_from: mismatch at '" + name + "'");
    }
    auto d = dst;
    std::copy(src.data().begin(), src.data().end(), d.mutable_data().begin());
  }
}

// ---- construction ----------------------------------------------------------

double xavier_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

void fill_uniform(ad::Tensor& t, double bound, Rng& rng) {
  for (double& v : t.mutable_data()) v = bound * (2.0 * uniform01(rng) - 1.0);
}

}  // namespace

FnnParams make_fnn(std::span<const std::size_t> dims, std::span<const Activation> activations, Rng& rng) {
  if (dims.size() < 2 || activations.size() != dims.size() - 1) {
    throw std::invalid_argument("make_fnn: need n+1 dims for n activations");
  }
  FnnParams fnn;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer;
    layer.weight = ad::Tensor::zeros({dims[i], dims[i + 1]}, true);
    fill_uniform(layer.weight, xavier_bound(dims[i], dims[i + 1]), rng);
    layer.bias = ad::Tensor::zeros({dims[i + 1]}, true);
    layer.activation = activations[i];
    fnn.layers.push_back(std::move(layer));
  }
  return fnn;
}

FnnParams make_fnn(std::initializer_list<std::size_t> dims, std::initializer_list<Activation> activations,
                   Rng& rng) {
  return make_fnn(std::span<const std::size_t>(dims.begin(), dims.size()),
                  std::span<const Activation>(activations.begin(), activations.size()), rng);
}

LstmParams make_lstm(std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  LstmParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = ad::Tensor::zeros({input_size, 4 * hidden_size}, true);
  p.w_hidden = ad::Tensor::zeros({hidden_size, 4 * hidden_size}, true);
  p.bias = ad::Tensor::zeros({4 * hidden_size}, true);
  fill_uniform(p.w_input, xavier_bound(input_size, hidden_size), rng);
  fill_uniform(p.w_hidden, xavier_bound(hidden_size, hidden_size), rng);
  auto bias = p.bias.mutable_data();
  std::fill(bias.begin() + static_cast<std::ptrdiff_t>(hidden_size),
            bias.begin() + static_cast<std::ptrdiff_t>(2 * hidden_size), 1.0);
  return p;
}

// ---- forward ---------------------------------------------------------------

ad::Tensor fnn_forward(ad::Tape& tape, const FnnParams& params, const ad::Tensor& x) {
  if (params.layers.empty()) throw std::invalid_argument("fnn_forward: empty network");
  if (x.ndim() != 2 || x.shape()[1] != params.input_size()) {
    throw ShapeError("fnn_forward: input " + ad::shape_to_string(x.shape()) + " does not match input size " +
                     std::to_string(params.input_size()));
  }
  ad::Tensor h = x;
  for (const auto& layer : params.layers) {
    h = ad::affine(tape, h, layer.weight, layer.bias);
    switch (layer.activation) {
      case Activation::kTanh:
        h = ad::tanh(tape, h);
        break;
      case Activation::kRelu:
        h = ad::relu(tape, h);
        break;
      case Activation::kLinear:
        break;
    }
  }
  return h;
}

LstmState lstm_zero_state(const LstmParams& params, std::size_t rows) {
  return {ad::Tensor::zeros({rows, params.hidden_size}), ad::Tensor::zeros({rows, params.hidden_size})};
}

LstmState lstm_step(ad::Tape& tape, const LstmParams& params, const ad::Tensor& x, const LstmState& prev) {
  const std::size_t hs = params.hidden_size;
  if (x.ndim() != 2 || x.shape()[1] != params.input_size) {
    throw ShapeError("lstm_step: input " + ad::shape_to_string(x.shape()) + " does not match input size " +
                     std::to_string(params.input_size));
  }
  const ad::Shape state_shape{x.shape()[0], hs};
  if (prev.h.shape() != state_shape || prev.c.shape() != state_shape) {
    throw ShapeError("lstm_step: state " + ad::shape_to_string(prev.h.shape()) + "/" +
                     ad::shape_to_string(prev.c.shape()) + " expected " + ad::shape_to_string(state_shape));
  }
  const ad::Tensor z =
      ad::add(tape, ad::affine(tape, x, params.w_input, params.bias), ad::matmul(tape, prev.h, params.w_hidden));
  auto [h, c] = ad::lstm_cell(tape, z, prev.c);
  return {h, c};
}

LstmState lstm_unroll(ad::Tape& tape, const LstmParams& params, std::span<const ad::Tensor> inputs,
                      LstmState initial) {
  for (const auto& x : inputs) initial = lstm_step(tape, params, x, initial);
  return initial;
}

// ---- Adam ------------------------------------------------------------------

void Adam::step(const ParamSet& params) {
  if (names_.empty()) {
    for (const auto& [name, t] : params) {
      names_.push_back(name);
      first_moment_.emplace_back(t.size(), 0.0);
      second_moment_.emplace_back(t.size(), 0.0);
    }
  } else if (names_.size() != params.size()) {
    throw std::invalid_argument("Adam::step: parameter set changed between steps");
  }
  std::size_t i = 0;
  for (const auto& [name, t] : params) {
    if (name != names_[i]) throw std::invalid_argument("Adam::step: parameter set changed between steps");
    if (!t.has_grad()) throw std::invalid_argument("Adam::step: parameter '" + name + "' has no gradient");
    ++i;
  }

  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  i = 0;
  for (const auto& entry : params) {
    ad::Tensor t = entry.second;
    auto value = t.mutable_data();
    auto grad = t.mutable_grad();
    auto& m = first_moment_[i];
    auto& v = second_moment_[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      value[j] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      grad[j] = 0.0;
    }
    ++i;
  }
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'H', 'A', 'I', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFFu);
  os.write(bytes, sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char bytes[sizeof(T)];
  is.read(reinterpret_cast<char*>(bytes), sizeof(T));
  if (!is) throw DataError("checkpoint: unexpected end of file");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<std::make_unsigned_t<T>>(bytes[i]) << (8 * i);
  return static_cast<T>(u);
}

}  // namespace

const ad::Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw DataError("checkpoint: missing tensor '" + name + "'");
}

void write_checkpoint(const std::filesystem::path& path, const nlohmann::json& manifest, const ParamSet& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("checkpoint: cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(os, kVersion);
  const std::string text = manifest.dump();
  put_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.shape()) put_le<std::uint64_t>(os, d);
    for (double v : t.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw DataError("checkpoint: write to '" + path.string() + "' failed");
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open '" + path.string() + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
    throw DataError("checkpoint: '" + path.string() + "' is not a checkpoint file");
  }
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion) throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const auto manifest_len = get_le<std::uint64_t>(is);
  std::string text(manifest_len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(manifest_len));
  if (!is) throw DataError("checkpoint: truncated manifest");

  Checkpoint ck;
  ck.manifest = nlohmann::json::parse(text);
  const auto count = get_le<std::uint32_t>(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = get_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto ndim = get_le<std::uint32_t>(is);
    ad::Shape shape(ndim);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    std::vector<double> data(ad::shape_size(shape));
    for (double& v : data) v = std::bit_cast<double>(get_le<std::uint64_t>(is));
    ck.tensors.emplace_back(std::move(name), ad::Tensor::from(std::move(shape), std::move(data)));
  }
  return ck;
}

void load_into(const Checkpoint& checkpoint, const ParamSet& params) {
  for (const auto& [name, dst] : params) {
    const ad::Tensor& src = checkpoint.tensor(name);
    if (src.shape() != dst.shape()) {
      throw DataError("checkpoint: tensor '" + name + "' has shape " + ad::shape_to_string(src.shape()) +
                      ", model expects " + ad::shape_to_string(dst.shape()));
    }
    auto d = dst;
    std::copy(src.data().begin(), src.data().end(), d.mutable_data().begin());
  }
}

std::uint64_t config_hash(const nlohmann::json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : config.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace highair::nn
