#include "highair/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "highair/errors.hpp"

namespace highair::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using NodePtr = std::shared_ptr<TensorNode>;

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  std::ostringstream os;
  os << op << ": incompatible shapes " << shape_to_string(a) << " and " << shape_to_string(b);
  throw ShapeError(os.str());
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const std::string& why) {
  std::ostringstream os;
  os << op << ": " << why << " (got " << shape_to_string(a) << ")";
  throw ShapeError(os.str());
}

std::vector<double>& grad_buffer(const NodePtr& node) {
  if (!node->has_grad) {
    node->grad.assign(node->data.size(), 0.0);
    node->has_grad = true;
  }
  return node->grad;
}

Tensor result(Shape shape, std::vector<double> data, bool tracked) {
  return Tensor::from(std::move(shape), std::move(data), tracked);
}

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.ndim() != 2) shape_fail(op, t.shape(), "expected a matrix");
}

using ArrayMap = Eigen::Map<Eigen::ArrayXd>;

void sigmoid_inplace(double* p, std::size_t n) {
  ArrayMap a(p, static_cast<Eigen::Index>(n));
  a = (1.0 + (-a).exp()).inverse();
}

// tanh(x) = sign(x) (1 - e) / (1 + e) with e = exp(-2|x|); absolute error stays at rounding level.
void tanh_inplace(double* p, std::size_t n) {
  ArrayMap a(p, static_cast<Eigen::Index>(n));
  const Eigen::ArrayXd e = (-2.0 * a.abs()).exp();
  a = a.sign() * (1.0 - e) / (1.0 + e);
}

template <typename Forward, typename Derivative>
Tensor unary(Tape& tape, const Tensor& x, Forward f, Derivative df) {
  std::vector<double> out(x.size());
  std::transform(x.data().begin(), x.data().end(), out.begin(), f);
  const bool track = tape.should_record({&x});
  Tensor y = result(x.shape(), std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), df] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& gx = grad_buffer(xn);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += yn->grad[i] * df(xn->data[i], yn->data[i]);
    });
  }
  return y;
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

// ---- Tensor ----------------------------------------------------------------

Tensor::Tensor() : node_(std::make_shared<TensorNode>()) { node_->shape = {0, 0}; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> data(shape_size(shape), value);
  return from(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("Tensor: shape " + shape_to_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
  const std::size_t n = rows.size();
  const std::size_t m = n ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(n * m);
  for (const auto& row : rows) {
    if (row.size() != m) throw ShapeError("Tensor::matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return from({n, m}, std::move(data), requires_grad);
}

std::size_t Tensor::rows() const {
  if (ndim() != 2) shape_fail("Tensor::rows", shape(), "expected a matrix");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  if (ndim() != 2) shape_fail("Tensor::cols", shape(), "expected a matrix");
  return shape()[1];
}

double Tensor::item() const {
  if (size() != 1) shape_fail("Tensor::item", shape(), "expected exactly one element");
  return node_->data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  return node_->data.at(row * cols() + col);
}

std::span<double> Tensor::mutable_grad() { return grad_buffer(node_); }

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

Tensor Tensor::clone(bool requires_grad) const { return from(shape(), node_->data, requires_grad); }

// ---- Tape ------------------------------------------------------------------

bool Tape::should_record(std::initializer_list<const Tensor*> inputs) const {
  if (!enabled_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor* t) { return t->requires_grad(); });
}

bool Tape::should_record(std::span<const Tensor> inputs) const {
  if (!enabled_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
}

void Tape::record(std::function<void()> backward) {
  if (consumed_) throw std::logic_error("Tape::record: tape already consumed by backward(); reset() first");
  entries_.push_back(std::move(backward));
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw std::logic_error("Tape::backward: called twice without reset()");
  if (loss.size() != 1) shape_fail("Tape::backward", loss.shape(), "loss must be a scalar");
  if (!loss.requires_grad()) {
    throw std::logic_error("Tape::backward: loss does not depend on any tensor that requires grad");
  }
  grad_buffer(loss.node())[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  consumed_ = true;
}

void Tape::reset() {
  entries_.clear();
  consumed_ = false;
}

// ---- ops -------------------------------------------------------------------

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0]) shape_fail("matmul", a.shape(), b.shape());
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  std::vector<double> out(n * m);
  {
    Eigen::Map<const RowMat> A(a.data().data(), n, k);
    Eigen::Map<const RowMat> B(b.data().data(), k, m);
    Eigen::Map<RowMat> C(out.data(), n, m);
    C.noalias() = A * B;
  }
  const bool track = tape.should_record({&a, &b});
  Tensor c = result({n, m}, std::move(out), track);
  if (track) {
    tape.record([an = a.node(), bn = b.node(), cn = c.node(), n, k, m] {
      if (!cn->has_grad) return;
      Eigen::Map<const RowMat> dC(cn->grad.data(), n, m);
      if (an->requires_grad) {
        Eigen::Map<const RowMat> B(bn->data.data(), k, m);
        Eigen::Map<RowMat> dA(grad_buffer(an).data(), n, k);
        dA.noalias() += dC * B.transpose();
      }
      if (bn->requires_grad) {
        Eigen::Map<const RowMat> A(an->data.data(), n, k);
        Eigen::Map<RowMat> dB(grad_buffer(bn).data(), k, m);
        dB.noalias() += A.transpose() * dC;
      }
    });
  }
  return c;
}

namespace {

// sign_b = +1 for add, -1 for sub.
Tensor add_like(Tape& tape, const Tensor& a, const Tensor& b, double sign_b, const char* op) {
  if (a.shape() != b.shape()) shape_fail(op, a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + sign_b * b.data()[i];
  const bool track = tape.should_record({&a, &b});
  Tensor c = result(a.shape(), std::move(out), track);
  if (track) {
    tape.record([an = a.node(), bn = b.node(), cn = c.node(), sign_b] {
      if (!cn->has_grad) return;
      if (an->requires_grad) {
        auto& g = grad_buffer(an);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += cn->grad[i];
      }
      if (bn->requires_grad) {
        auto& g = grad_buffer(bn);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign_b * cn->grad[i];
      }
    });
  }
  return c;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return add_like(tape, a, b, 1.0, "add"); }
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return add_like(tape, a, b, -1.0, "sub"); }

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  const bool track = tape.should_record({&a, &b});
  Tensor c = result(a.shape(), std::move(out), track);
  if (track) {
    tape.record([an = a.node(), bn = b.node(), cn = c.node()] {
      if (!cn->has_grad) return;
      if (an->requires_grad) {
        auto& g = grad_buffer(an);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += cn->grad[i] * bn->data[i];
      }
      if (bn->requires_grad) {
        auto& g = grad_buffer(bn);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += cn->grad[i] * an->data[i];
      }
    });
  }
  return c;
}

Tensor scale(Tape& tape, const Tensor& x, double factor) {
  return unary(
      tape, x, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor broadcast_add_row(Tape& tape, const Tensor& m, const Tensor& row) {
  require_matrix("broadcast_add_row", m);
  const std::size_t n = m.shape()[0], k = m.shape()[1];
  const bool row_ok = (row.ndim() == 1 && row.shape()[0] == k) ||
                      (row.ndim() == 2 && row.shape()[0] == 1 && row.shape()[1] == k);
  if (!row_ok) shape_fail("broadcast_add_row", m.shape(), row.shape());
  std::vector<double> out(m.data().begin(), m.data().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] += row.data()[j];
  const bool track = tape.should_record({&m, &row});
  Tensor c = result({n, k}, std::move(out), track);
  if (track) {
    tape.record([mn = m.node(), rn = row.node(), cn = c.node(), n, k] {
      if (!cn->has_grad) return;
      if (mn->requires_grad) {
        auto& g = grad_buffer(mn);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += cn->grad[i];
      }
      if (rn->requires_grad) {
        auto& g = grad_buffer(rn);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < k; ++j) g[j] += cn->grad[i * k + j];
      }
    });
  }
  return c;
}

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) shape_fail("concat", first, "axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size()) shape_fail("concat", first, s);
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != first[d]) shape_fail("concat", first, s);
    out_shape[axis] += s[axis];
  }
  const AxisSplit os = split_axis(out_shape, axis);
  std::vector<double> out(shape_size(out_shape));
  std::size_t offset = 0;  // running position along axis
  std::vector<std::size_t> offsets;
  offsets.reserve(parts.size());
  for (const auto& p : parts) {
    const AxisSplit ps = split_axis(p.shape(), axis);
    const std::size_t chunk = ps.len * ps.inner;
    for (std::size_t o = 0; o < ps.outer; ++o) {
      std::copy_n(p.data().begin() + o * chunk, chunk, out.begin() + o * os.len * os.inner + offset * os.inner);
    }
    offsets.push_back(offset);
    offset += ps.len;
  }
  const bool track = tape.should_record(parts);
  Tensor c = result(out_shape, std::move(out), track);
  if (track) {
    std::vector<NodePtr> nodes;
    nodes.reserve(parts.size());
    for (const auto& p : parts) nodes.push_back(p.node());
    tape.record([nodes = std::move(nodes), offsets = std::move(offsets), cn = c.node(), axis, os] {
      if (!cn->has_grad) return;
      for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
        const auto& pn = nodes[idx];
        if (!pn->requires_grad) continue;
        const AxisSplit ps = split_axis(pn->shape, axis);
        const std::size_t chunk = ps.len * ps.inner;
        auto& g = grad_buffer(pn);
        for (std::size_t o = 0; o < ps.outer; ++o) {
          const double* src = cn->grad.data() + o * os.len * os.inner + offsets[idx] * os.inner;
          double* dst = g.data() + o * chunk;
          for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return c;
}

Tensor concat(Tape& tape, std::initializer_list<Tensor> parts, std::size_t axis) {
  return concat(tape, std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

namespace {

Tensor reduce_axis(Tape& tape, const Tensor& x, std::size_t axis, bool average, const char* op) {
  if (axis >= x.ndim()) shape_fail(op, x.shape(), "axis out of range");
  const AxisSplit s = split_axis(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  const double factor = average ? (s.len ? 1.0 / static_cast<double>(s.len) : 0.0) : 1.0;
  std::vector<double> out(s.outer * s.inner, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t l = 0; l < s.len; ++l)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += x.data()[(o * s.len + l) * s.inner + i];
  if (average)
    for (double& v : out) v *= factor;
  const bool track = tape.should_record({&x});
  Tensor y = result(std::move(out_shape), std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), s, factor] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& g = grad_buffer(xn);
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t l = 0; l < s.len; ++l)
          for (std::size_t i = 0; i < s.inner; ++i) g[(o * s.len + l) * s.inner + i] += factor * yn->grad[o * s.inner + i];
    });
  }
  return y;
}

Tensor reduce_all(Tape& tape, const Tensor& x, bool average) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double factor = average ? (x.size() ? 1.0 / static_cast<double>(x.size()) : 0.0) : 1.0;
  const bool track = tape.should_record({&x});
  Tensor y = result({}, {total * factor}, track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), factor] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& g = grad_buffer(xn);
      const double d = yn->grad[0] * factor;
      for (double& v : g) v += d;
    });
  }
  return y;
}

}  // namespace

Tensor sum(Tape& tape, const Tensor& x, std::size_t axis) { return reduce_axis(tape, x, axis, false, "sum"); }
Tensor mean(Tape& tape, const Tensor& x, std::size_t axis) { return reduce_axis(tape, x, axis, true, "mean"); }
Tensor sum_all(Tape& tape, const Tensor& x) { return reduce_all(tape, x, false); }
Tensor mean_all(Tape& tape, const Tensor& x) { return reduce_all(tape, x, true); }

namespace {

template <typename Inplace, typename Derivative>
Tensor vector_unary(Tape& tape, const Tensor& x, Inplace f, Derivative df) {
  std::vector<double> out(x.data().begin(), x.data().end());
  f(out.data(), out.size());
  const bool track = tape.should_record({&x});
  Tensor y = result(x.shape(), std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), df] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& gx = grad_buffer(xn);
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += yn->grad[i] * df(yn->data[i]);
    });
  }
  return y;
}

}  // namespace

Tensor tanh(Tape& tape, const Tensor& x) {
  return vector_unary(tape, x, tanh_inplace, [](double y) { return 1.0 - y * y; });
}

Tensor sigmoid(Tape& tape, const Tensor& x) {
  return vector_unary(tape, x, sigmoid_inplace, [](double y) { return y * (1.0 - y); });
}

Tensor relu(Tape& tape, const Tensor& x) {
  return unary(
      tape, x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor slice(Tape& tape, const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.ndim()) shape_fail("slice", x.shape(), "axis out of range");
  if (begin > end || end > x.shape()[axis]) {
    shape_fail("slice", x.shape(),
               "range [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of bounds on axis " +
                   std::to_string(axis));
  }
  const AxisSplit s = split_axis(x.shape(), axis);
  const std::size_t len = end - begin;
  Shape out_shape = x.shape();
  out_shape[axis] = len;
  std::vector<double> out(s.outer * len * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.data().begin() + (o * s.len + begin) * s.inner, len * s.inner, out.begin() + o * len * s.inner);
  }
  const bool track = tape.should_record({&x});
  Tensor y = result(std::move(out_shape), std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), s, begin, len] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& g = grad_buffer(xn);
      for (std::size_t o = 0; o < s.outer; ++o) {
        const double* src = yn->grad.data() + o * len * s.inner;
        double* dst = g.data() + (o * s.len + begin) * s.inner;
        for (std::size_t i = 0; i < len * s.inner; ++i) dst[i] += src[i];
      }
    });
  }
  return y;
}

Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> index) {
  require_matrix("gather_rows", x);
  const std::size_t n = x.shape()[0], k = x.shape()[1];
  std::vector<double> out(index.size() * k);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= n) shape_fail("gather_rows", x.shape(), "row index " + std::to_string(index[r]) + " out of range");
    std::copy_n(x.data().begin() + index[r] * k, k, out.begin() + r * k);
  }
  const bool track = tape.should_record({&x});
  Tensor y = result({index.size(), k}, std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), idx = std::vector<std::size_t>(index.begin(), index.end()), k] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& g = grad_buffer(xn);
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t j = 0; j < k; ++j) g[idx[r] * k + j] += yn->grad[r * k + j];
    });
  }
  return y;
}

Tensor segment_mean(Tape& tape, const Tensor& x, std::span<const std::size_t> segment, std::size_t num_segments) {
  require_matrix("segment_mean", x);
  const std::size_t m = x.shape()[0], k = x.shape()[1];
  if (segment.size() != m) {
    shape_fail("segment_mean", x.shape(), "segment ids cover " + std::to_string(segment.size()) + " rows");
  }
  std::vector<double> counts(num_segments, 0.0);
  for (std::size_t s : segment) {
    if (s >= num_segments) shape_fail("segment_mean", x.shape(), "segment id " + std::to_string(s) + " out of range");
    counts[s] += 1.0;
  }
  std::vector<double> inv(num_segments);
  for (std::size_t s = 0; s < num_segments; ++s) inv[s] = counts[s] > 0.0 ? 1.0 / counts[s] : 0.0;
  std::vector<double> out(num_segments * k, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t j = 0; j < k; ++j) out[segment[r] * k + j] += x.data()[r * k + j];
  for (std::size_t s = 0; s < num_segments; ++s)
    for (std::size_t j = 0; j < k; ++j) out[s * k + j] *= inv[s];
  const bool track = tape.should_record({&x});
  Tensor y = result({num_segments, k}, std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), yn = y.node(), seg = std::vector<std::size_t>(segment.begin(), segment.end()),
                 inv = std::move(inv), k] {
      if (!yn->has_grad || !xn->requires_grad) return;
      auto& g = grad_buffer(xn);
      for (std::size_t r = 0; r < seg.size(); ++r)
        for (std::size_t j = 0; j < k; ++j) g[r * k + j] += inv[seg[r]] * yn->grad[seg[r] * k + j];
    });
  }
  return y;
}

Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || x.shape()[1] != w.shape()[0]) shape_fail("affine", x.shape(), w.shape());
  const std::size_t n = x.shape()[0], k = x.shape()[1], m = w.shape()[1];
  const bool row_ok = (b.ndim() == 1 && b.shape()[0] == m) || (b.ndim() == 2 && b.shape()[0] == 1 && b.shape()[1] == m);
  if (!row_ok) shape_fail("affine", w.shape(), b.shape());
  std::vector<double> out(n * m);
  {
    Eigen::Map<const RowMat> X(x.data().data(), n, k);
    Eigen::Map<const RowMat> W(w.data().data(), k, m);
    Eigen::Map<const Eigen::RowVectorXd> B(b.data().data(), m);
    Eigen::Map<RowMat> Y(out.data(), n, m);
    Y.rowwise() = B;
    Y.noalias() += X * W;
  }
  const bool track = tape.should_record({&x, &w, &b});
  Tensor y = result({n, m}, std::move(out), track);
  if (track) {
    tape.record([xn = x.node(), wn = w.node(), bn = b.node(), yn = y.node(), n, k, m] {
      if (!yn->has_grad) return;
      Eigen::Map<const RowMat> dY(yn->grad.data(), n, m);
      if (xn->requires_grad) {
        Eigen::Map<const RowMat> W(wn->data.data(), k, m);
        Eigen::Map<RowMat> dX(grad_buffer(xn).data(), n, k);
        dX.noalias() += dY * W.transpose();
      }
      if (wn->requires_grad) {
        Eigen::Map<const RowMat> X(xn->data.data(), n, k);
        Eigen::Map<RowMat> dW(grad_buffer(wn).data(), k, m);
        dW.noalias() += X.transpose() * dY;
      }
      if (bn->requires_grad) {
        Eigen::Map<Eigen::RowVectorXd> dB(grad_buffer(bn).data(), m);
        dB += dY.colwise().sum();
      }
    });
  }
  return y;
}

std::pair<Tensor, Tensor> lstm_cell(Tape& tape, const Tensor& z, const Tensor& c_prev) {
  require_matrix("lstm_cell", z);
  require_matrix("lstm_cell", c_prev);
  const std::size_t n = z.shape()[0], hs = c_prev.shape()[1];
  if (c_prev.shape()[0] != n || z.shape()[1] != 4 * hs) shape_fail("lstm_cell", z.shape(), c_prev.shape());

  // Activated gates, same packing as z.
  std::vector<double> gates(z.data().begin(), z.data().end());
  std::vector<double> c(n * hs), h(n * hs), tc(n * hs);
  for (std::size_t r = 0; r < n; ++r) {
    double* g = gates.data() + r * 4 * hs;
    sigmoid_inplace(g, 2 * hs);
    tanh_inplace(g + 2 * hs, hs);
    sigmoid_inplace(g + 3 * hs, hs);
    for (std::size_t j = 0; j < hs; ++j) c[r * hs + j] = g[hs + j] * c_prev.data()[r * hs + j] + g[j] * g[2 * hs + j];
  }
  std::copy(c.begin(), c.end(), tc.begin());
  tanh_inplace(tc.data(), tc.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < hs; ++j) h[r * hs + j] = gates[r * 4 * hs + 3 * hs + j] * tc[r * hs + j];

  const bool track = tape.should_record({&z, &c_prev});
  Tensor h_out = result({n, hs}, std::move(h), track);
  Tensor c_out = result({n, hs}, std::move(c), track);
  if (track) {
    tape.record([zn = z.node(), pn = c_prev.node(), hn = h_out.node(), cn = c_out.node(), gates = std::move(gates),
                 tc = std::move(tc), n, hs] {
      if (!hn->has_grad && !cn->has_grad) return;
      std::vector<double> dz(n * 4 * hs);
      std::vector<double>* dprev = pn->requires_grad ? &grad_buffer(pn) : nullptr;
      for (std::size_t r = 0; r < n; ++r) {
        const double* g = gates.data() + r * 4 * hs;
        double* d = dz.data() + r * 4 * hs;
        for (std::size_t j = 0; j < hs; ++j) {
          const std::size_t idx = r * hs + j;
          const double i = g[j], f = g[hs + j], cand = g[2 * hs + j], o = g[3 * hs + j], t = tc[idx];
          const double dh = hn->has_grad ? hn->grad[idx] : 0.0;
          const double dc = (cn->has_grad ? cn->grad[idx] : 0.0) + dh * o * (1.0 - t * t);
          d[j] = dc * cand * i * (1.0 - i);
          d[hs + j] = dc * pn->data[idx] * f * (1.0 - f);
          d[2 * hs + j] = dc * i * (1.0 - cand * cand);
          d[3 * hs + j] = dh * t * o * (1.0 - o);
          if (dprev) (*dprev)[idx] += dc * f;
        }
      }
      if (zn->requires_grad) {
        auto& gz = grad_buffer(zn);
        for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += dz[i];
      }
    });
  }
  return {h_out, c_out};
}

}  // namespace highair::ad
