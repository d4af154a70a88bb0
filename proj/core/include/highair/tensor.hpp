#pragma once

// Minimal reverse-mode automatic differentiation over dense float64 tensors.
//
// A Tensor is a shared handle to a node holding the value (row-major) and,
// for tensors that require gradients, an accumulated gradient buffer. Ops are
// free functions that take the Tape explicitly; an op is recorded only when
// the tape is enabled and at least one input requires a gradient. There is no
// global autograd state.
//
//   ad::Tape tape;
//   auto y = ad::tanh(tape, ad::matmul(tape, x, w));
//   auto loss = ad::sum_all(tape, ad::mul(tape, y, y));
//   tape.backward(loss);   // w.grad() now holds dloss/dw
//   tape.reset();

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace highair::ad {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;
  bool has_grad = false;  // set once a gradient buffer is allocated
  bool requires_grad = false;
};

class Tensor {
 public:
  // An empty 0x0 matrix.
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // Row-major nested initializer, handy in tests.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                       bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::size_t ndim() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const { return node_->data; }
  std::span<double> mutable_data() { return node_->data; }
  double item() const;
  double at(std::size_t row, std::size_t col) const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return node_->has_grad; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad();  // allocates a zero gradient if absent
  void zero_grad();
  void clear_grad() {
    node_->grad.clear();
    node_->has_grad = false;
  }

  // Deep copy of the value; the copy never shares the gradient buffer.
  Tensor clone(bool requires_grad = false) const;
  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  const std::shared_ptr<TensorNode>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  std::shared_ptr<TensorNode> node_;
};

// Ordered record of executed ops. Single-threaded; reset between steps.
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool enabled) : enabled_(enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool enabled() const { return enabled_; }
  void set_enabled(bool enabled) { enabled_ = enabled; }

  // True when an op over `inputs` must be recorded.
  bool should_record(std::initializer_list<const Tensor*> inputs) const;
  bool should_record(std::span<const Tensor> inputs) const;

  // `backward` reads the output gradient and accumulates into input gradients.
  void record(std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and runs the recorded closures in reverse.
  void backward(const Tensor& loss);
  void reset();
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<std::function<void()>> entries_;
  bool enabled_ = true;
  bool consumed_ = false;
};

// ---- forward ops -----------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// x w + b with b of shape [K] or [1 x K]; one fused op.
Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& x, double factor);
// Matrix [N x K] plus a row of K values (shape [K] or [1 x K]).
Tensor broadcast_add_row(Tape& tape, const Tensor& m, const Tensor& row);
Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis);
Tensor concat(Tape& tape, std::initializer_list<Tensor> parts, std::size_t axis);
// Reductions drop the reduced axis.
Tensor sum(Tape& tape, const Tensor& x, std::size_t axis);
Tensor mean(Tape& tape, const Tensor& x, std::size_t axis);
Tensor sum_all(Tape& tape, const Tensor& x);
Tensor mean_all(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor relu(Tape& tape, const Tensor& x);
// Half-open range [begin, end) along `axis`.
Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end);
// out[i] = x[index[i]] for a matrix x.
Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index);
// out[s] = mean of x rows i with segment[i] == s; empty segments give zero rows.
Tensor segment_mean(Tape& tape, const Tensor& x, std::span<const std::size_t> segment,
                    std::size_t num_segments);

// Fused LSTM cell. z holds the pre-activations packed as input, forget,
// candidate, output gates [N x 4H]; returns (h, c).
std::pair<Tensor, Tensor> lstm_cell(Tape& tape, const Tensor& z, const Tensor& c_prev);

}  // namespace highair::ad
