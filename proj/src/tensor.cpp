#include "interlat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace interlat {

const char* dtype_name(DType dtype) {
  return dtype == DType::F32 ? "f32" : "f64";
}

size_t dtype_size(DType dtype) {
  return dtype == DType::F32 ? 4 : 8;
}

size_t shape_numel(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

struct TensorImpl {
  Shape shape;
  DType dtype = DType::F64;
  std::vector<float> f32;
  std::vector<double> f64;
  bool requires_grad = false;
  std::shared_ptr<TensorImpl> grad;

  size_t numel() const { return shape_numel(shape); }
  double at(size_t i) const {
    return dtype == DType::F32 ? static_cast<double>(f32[i]) : f64[i];
  }
  void set(size_t i, double v) {
    if (dtype == DType::F32) {
      f32[i] = static_cast<float>(v);
    } else {
      f64[i] = v;
    }
  }
};

namespace {

std::shared_ptr<TensorImpl> make_impl(Shape shape, DType dtype) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->dtype = dtype;
  if (dtype == DType::F32) {
    impl->f32.assign(impl->numel(), 0.0f);
  } else {
    impl->f64.assign(impl->numel(), 0.0);
  }
  return impl;
}

std::shared_ptr<TensorImpl> clone_impl(const TensorImpl& src) {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = src.shape;
  impl->dtype = src.dtype;
  impl->f32 = src.f32;
  impl->f64 = src.f64;
  return impl;
}

void check_finite(const TensorImpl& impl, const char* op) {
  size_t n = impl.numel();
  if (impl.dtype == DType::F32) {
    for (size_t i = 0; i < n; ++i) {
      if (!std::isfinite(impl.f32[i])) {
        fail(ErrorKind::NonFinite,
             std::string("non-finite value produced by '") + op + "'");
      }
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      if (!std::isfinite(impl.f64[i])) {
        fail(ErrorKind::NonFinite,
             std::string("non-finite value produced by '") + op + "'");
      }
    }
  }
}

void require_same_dtype(const Tensor& a, const Tensor& b, const char* op) {
  if (a.dtype() != b.dtype()) {
    fail(ErrorKind::DtypeMismatch,
         std::string(op) + ": operands have dtypes " + dtype_name(a.dtype()) +
             " and " + dtype_name(b.dtype()));
  }
}

// Shape broadcasting follows trailing-alignment: shorter rank is padded with
// leading 1s, and each dim pair must be equal or contain a 1.
Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  size_t rank = std::max(a.size(), b.size());
  Shape out(rank, 1);
  for (size_t d = 0; d < rank; ++d) {
    size_t da = d < rank - a.size() ? 1 : a[d - (rank - a.size())];
    size_t db = d < rank - b.size() ? 1 : b[d - (rank - b.size())];
    if (da != db && da != 1 && db != 1) {
      fail(ErrorKind::ShapeMismatch, std::string(op) + ": cannot broadcast " +
                                         shape_str(a) + " with " +
                                         shape_str(b));
    }
    out[d] = std::max(da, db);
  }
  return out;
}

std::vector<size_t> row_major_strides(const Shape& shape) {
  std::vector<size_t> strides(shape.size(), 1);
  for (size_t d = shape.size(); d-- > 1;) {
    strides[d - 1] = strides[d] * shape[d];
  }
  return strides;
}

// Strides (in elements) of `in` aligned to broadcast result `out`; broadcast
// dims get stride 0 so the same input element is revisited.
std::vector<size_t> aligned_strides(const Shape& in, const Shape& out) {
  std::vector<size_t> strides(out.size(), 0);
  std::vector<size_t> in_strides = row_major_strides(in);
  size_t offset = out.size() - in.size();
  for (size_t d = 0; d < in.size(); ++d) {
    if (in[d] != 1) strides[offset + d] = in_strides[d];
  }
  return strides;
}

// Visits every index of `out_shape` in ascending row-major order, tracking the
// element offsets of two broadcast inputs. body(out_idx, a_idx, b_idx).
template <class F>
void for_each_broadcast(const Shape& out_shape, const std::vector<size_t>& sa,
                        const std::vector<size_t>& sb, F&& body) {
  size_t n = shape_numel(out_shape);
  size_t rank = out_shape.size();
  std::vector<size_t> coord(rank, 0);
  size_t ia = 0, ib = 0;
  for (size_t i = 0; i < n; ++i) {
    body(i, ia, ib);
    for (size_t d = rank; d-- > 0;) {
      ++coord[d];
      ia += sa[d];
      ib += sb[d];
      if (coord[d] < out_shape[d]) break;
      ia -= sa[d] * out_shape[d];
      ib -= sb[d] * out_shape[d];
      coord[d] = 0;
    }
  }
}

enum class EwOp { Add, Sub, Mul, Div };

}  // namespace

// ---------------------------------------------------------------------------
// Tensor handle

Tensor::Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

Tensor Tensor::zeros(const Shape& shape, DType dtype) {
  return Tensor(make_impl(shape, dtype));
}

Tensor Tensor::ones(const Shape& shape, DType dtype) {
  return full(shape, 1.0, dtype);
}

Tensor Tensor::full(const Shape& shape, double value, DType dtype) {
  if (!std::isfinite(value)) {
    fail(ErrorKind::NonFinite, "full: fill value is not finite");
  }
  auto impl = make_impl(shape, dtype);
  size_t n = impl->numel();
  for (size_t i = 0; i < n; ++i) impl->set(i, value);
  return Tensor(impl);
}

Tensor Tensor::scalar(double value, DType dtype) {
  return full({1}, value, dtype);
}

Tensor Tensor::from_data(const Shape& shape, const std::vector<double>& data,
                         DType dtype) {
  if (data.size() != shape_numel(shape)) {
    fail(ErrorKind::ElementCountMismatch,
         "from_data: " + std::to_string(data.size()) +
             " values for shape " + shape_str(shape));
  }
  auto impl = make_impl(shape, dtype);
  for (size_t i = 0; i < data.size(); ++i) impl->set(i, data[i]);
  check_finite(*impl, "from_data");
  return Tensor(impl);
}

Tensor Tensor::randn(const Shape& shape, Rng& rng, double stddev,
                     DType dtype) {
  auto impl = make_impl(shape, dtype);
  size_t n = impl->numel();
  for (size_t i = 0; i < n; ++i) impl->set(i, rng.normal() * stddev);
  check_finite(*impl, "randn");
  return Tensor(impl);
}

const Shape& Tensor::shape() const { return impl_->shape; }
size_t Tensor::rank() const { return impl_->shape.size(); }
size_t Tensor::numel() const { return impl_->numel(); }
DType Tensor::dtype() const { return impl_->dtype; }
bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor Tensor::with_requires_grad(bool flag) const {
  auto impl = clone_impl(*impl_);
  impl->requires_grad = flag;
  return Tensor(impl);
}

double Tensor::value_at(size_t i) const {
  if (i >= impl_->numel()) {
    fail(ErrorKind::AxisOutOfRange,
         "value_at: index " + std::to_string(i) + " out of range for " +
             std::to_string(impl_->numel()) + " elements");
  }
  return impl_->at(i);
}

double Tensor::item() const {
  if (impl_->numel() != 1) {
    fail(ErrorKind::ElementCountMismatch,
         "item: tensor has " + std::to_string(impl_->numel()) + " elements");
  }
  return impl_->at(0);
}

std::vector<double> Tensor::to_vector() const {
  size_t n = impl_->numel();
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = impl_->at(i);
  return out;
}

Tensor Tensor::grad() const {
  if (!impl_->grad) return Tensor();
  return Tensor(impl_->grad);
}

bool Tensor::has_grad() const { return impl_ && impl_->grad != nullptr; }

Tensor Tensor::detach() const {
  return Tensor(clone_impl(*impl_));
}

const float* Tensor::data_f32() const {
  if (impl_->dtype != DType::F32) {
    fail(ErrorKind::DtypeMismatch, "data_f32 on f64 tensor");
  }
  return impl_->f32.data();
}

const double* Tensor::data_f64() const {
  if (impl_->dtype != DType::F64) {
    fail(ErrorKind::DtypeMismatch, "data_f64 on f32 tensor");
  }
  return impl_->f64.data();
}

// ---------------------------------------------------------------------------
// Tape

namespace {
thread_local Tape* g_current_tape = nullptr;
}

Tape* Tape::current() { return g_current_tape; }

TapeScope::TapeScope(Tape& tape) : previous_(g_current_tape) {
  g_current_tape = &tape;
}

TapeScope::~TapeScope() { g_current_tape = previous_; }

size_t Tape::size() const { return nodes_.size(); }

TensorImpl* Tape::grad_slot(const std::shared_ptr<TensorImpl>& owner) {
  auto it = grad_index_.find(owner.get());
  if (it != grad_index_.end()) return grads_[it->second].second.get();
  auto slot = make_impl(owner->shape, owner->dtype);
  grad_index_.emplace(owner.get(), grads_.size());
  grads_.emplace_back(owner, slot);
  return slot.get();
}

TensorImpl* Tape::find_grad(const TensorImpl* owner) {
  auto it = grad_index_.find(owner);
  if (it == grad_index_.end()) return nullptr;
  return grads_[it->second].second.get();
}

namespace {

// Records a node on the active tape when gradients can flow. The output impl
// is flagged requires_grad so downstream ops keep recording.
void record(const char* op, std::vector<std::shared_ptr<TensorImpl>> inputs,
            const std::shared_ptr<TensorImpl>& output,
            std::function<void(Tape&, Tape::Node&)> pull) {
  Tape* tape = Tape::current();
  if (!tape) return;
  bool any = false;
  for (const auto& in : inputs) any = any || in->requires_grad;
  if (!any) return;
  output->requires_grad = true;
  tape->nodes_.push_back(
      Tape::Node{op, std::move(inputs), output, std::move(pull)});
}

void accumulate_into(TensorImpl& slot, size_t idx, double v) {
  if (slot.dtype == DType::F32) {
    slot.f32[idx] += static_cast<float>(v);
  } else {
    slot.f64[idx] += v;
  }
}

}  // namespace

void Tape::backward(const Tensor& root) {
  if (nodes_.empty()) {
    fail(ErrorKind::EmptyTape, "backward: tape recorded no operations");
  }
  if (root.numel() != 1) {
    fail(ErrorKind::NonScalarRoot,
         "backward: root has " + std::to_string(root.numel()) +
             " elements, expected 1");
  }
  grads_.clear();
  grad_index_.clear();
  TensorImpl* seed = grad_slot(root.impl());
  for (size_t i = 0; i < seed->numel(); ++i) seed->set(i, 1.0);
  for (size_t n = nodes_.size(); n-- > 0;) {
    Node& node = nodes_[n];
    if (find_grad(node.output.get()) == nullptr) continue;
    node.pull(*this, node);
  }
  // Gradients are committed to leaves only: tensors that are no node's
  // output. Interior values keep their accumulation slots tape-private.
  std::unordered_set<const TensorImpl*> interior;
  for (const Node& node : nodes_) interior.insert(node.output.get());
  for (auto& [owner, slot] : grads_) {
    if (owner->requires_grad && interior.find(owner.get()) == interior.end()) {
      check_finite(*slot, "backward");
      owner->grad = slot;
    }
  }
}

// ---------------------------------------------------------------------------
// Elementwise ops with trailing broadcast

namespace {

Tensor elementwise(const Tensor& a, const Tensor& b, EwOp op,
                   const char* name) {
  require_same_dtype(a, b, name);
  Shape out_shape = broadcast_shape(a.shape(), b.shape(), name);
  auto out = make_impl(out_shape, a.dtype());
  auto sa = aligned_strides(a.shape(), out_shape);
  auto sb = aligned_strides(b.shape(), out_shape);
  const TensorImpl& ia = *a.impl();
  const TensorImpl& ib = *b.impl();
  for_each_broadcast(out_shape, sa, sb,
                     [&](size_t i, size_t oa, size_t ob) {
                       double x = ia.at(oa);
                       double y = ib.at(ob);
                       double r = op == EwOp::Add   ? x + y
                                  : op == EwOp::Sub ? x - y
                                  : op == EwOp::Mul ? x * y
                                                    : x / y;
                       out->set(i, r);
                     });
  check_finite(*out, name);
  record(name, {a.impl(), b.impl()}, out,
         [op, out_shape, sa, sb](Tape& tape, Tape::Node& node) {
           TensorImpl* gout = tape.find_grad(node.output.get());
           TensorImpl* ga = tape.grad_slot(node.inputs[0]);
           TensorImpl* gb = tape.grad_slot(node.inputs[1]);
           const TensorImpl& va = *node.inputs[0];
           const TensorImpl& vb = *node.inputs[1];
           for_each_broadcast(
               out_shape, sa, sb, [&](size_t i, size_t oa, size_t ob) {
                 double g = gout->at(i);
                 switch (op) {
                   case EwOp::Add:
                     accumulate_into(*ga, oa, g);
                     accumulate_into(*gb, ob, g);
                     break;
                   case EwOp::Sub:
                     accumulate_into(*ga, oa, g);
                     accumulate_into(*gb, ob, -g);
                     break;
                   case EwOp::Mul:
                     accumulate_into(*ga, oa, g * vb.at(ob));
                     accumulate_into(*gb, ob, g * va.at(oa));
                     break;
                   case EwOp::Div: {
                     double y = vb.at(ob);
                     accumulate_into(*ga, oa, g / y);
                     accumulate_into(*gb, ob, -g * va.at(oa) / (y * y));
                     break;
                   }
                 }
               });
         });
  return Tensor(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwOp::Add, "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwOp::Sub, "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwOp::Mul, "mul");
}

Tensor divide(const Tensor& a, const Tensor& b) {
  return elementwise(a, b, EwOp::Div, "divide");
}

Tensor sqrt_elem(const Tensor& x) {
  auto out = make_impl(x.shape(), x.dtype());
  const TensorImpl& ix = *x.impl();
  size_t n = ix.numel();
  for (size_t i = 0; i < n; ++i) out->set(i, std::sqrt(ix.at(i)));
  check_finite(*out, "sqrt_elem");
  record("sqrt_elem", {x.impl()}, out, [](Tape& tape, Tape::Node& node) {
    TensorImpl* gout = tape.find_grad(node.output.get());
    TensorImpl* gx = tape.grad_slot(node.inputs[0]);
    const TensorImpl& y = *node.output;
    size_t n = gout->numel();
    for (size_t i = 0; i < n; ++i) {
      accumulate_into(*gx, i, gout->at(i) * 0.5 / y.at(i));
    }
  });
  return Tensor(out);
}

Tensor scale(const Tensor& x, double factor) {
  if (!std::isfinite(factor)) {
    fail(ErrorKind::NonFinite, "scale: factor is not finite");
  }
  auto out = make_impl(x.shape(), x.dtype());
  const TensorImpl& ix = *x.impl();
  size_t n = ix.numel();
  for (size_t i = 0; i < n; ++i) out->set(i, ix.at(i) * factor);
  check_finite(*out, "scale");
  record("scale", {x.impl()}, out, [factor](Tape& tape, Tape::Node& node) {
    TensorImpl* gout = tape.find_grad(node.output.get());
    TensorImpl* gx = tape.grad_slot(node.inputs[0]);
    size_t n = gout->numel();
    for (size_t i = 0; i < n; ++i) {
      accumulate_into(*gx, i, gout->at(i) * factor);
    }
  });
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// matmul: trailing two axes are the matrix, leading axes broadcast

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_same_dtype(a, b, "matmul");
  if (a.rank() < 2 || b.rank() < 2) {
    fail(ErrorKind::ShapeMismatch, "matmul: operands must have rank >= 2, got " +
                                       shape_str(a.shape()) + " and " +
                                       shape_str(b.shape()));
  }
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  size_t p = as[as.size() - 2];
  size_t q = as[as.size() - 1];
  size_t q2 = bs[bs.size() - 2];
  size_t r = bs[bs.size() - 1];
  if (q != q2) {
    fail(ErrorKind::ShapeMismatch, "matmul: inner dims disagree, " +
                                       shape_str(as) + " x " + shape_str(bs));
  }
  Shape batch_a(as.begin(), as.end() - 2);
  Shape batch_b(bs.begin(), bs.end() - 2);
  Shape batch = broadcast_shape(batch_a, batch_b, "matmul");
  Shape out_shape = batch;
  out_shape.push_back(p);
  out_shape.push_back(r);
  auto out = make_impl(out_shape, a.dtype());

  // Batch strides expressed in elements of the underlying flat arrays.
  auto sa = aligned_strides(batch_a, batch);
  auto sb = aligned_strides(batch_b, batch);
  for (auto& s : sa) s *= p * q;
  for (auto& s : sb) s *= q * r;

  const TensorImpl& ia = *a.impl();
  const TensorImpl& ib = *b.impl();
  size_t n_batch = shape_numel(batch);
  Shape batch_or_one = batch.empty() ? Shape{1} : batch;
  auto sa2 = sa.empty() ? std::vector<size_t>{0} : sa;
  auto sb2 = sb.empty() ? std::vector<size_t>{0} : sb;
  for_each_broadcast(batch_or_one, sa2, sb2,
                     [&](size_t ob, size_t oa_base, size_t ob_base) {
                       size_t oo = ob * p * r;
                       for (size_t i = 0; i < p; ++i) {
                         for (size_t j = 0; j < r; ++j) {
                           double acc = 0.0;
                           for (size_t k = 0; k < q; ++k) {
                             acc += ia.at(oa_base + i * q + k) *
                                    ib.at(ob_base + k * r + j);
                           }
                           out->set(oo + i * r + j, acc);
                         }
                       }
                     });
  check_finite(*out, "matmul");
  (void)n_batch;

  record("matmul", {a.impl(), b.impl()}, out,
         [batch_or_one, sa2, sb2, p, q, r](Tape& tape, Tape::Node& node) {
           TensorImpl* gout = tape.find_grad(node.output.get());
           TensorImpl* ga = tape.grad_slot(node.inputs[0]);
           TensorImpl* gb = tape.grad_slot(node.inputs[1]);
           const TensorImpl& va = *node.inputs[0];
           const TensorImpl& vb = *node.inputs[1];
           for_each_broadcast(
               batch_or_one, sa2, sb2,
               [&](size_t ob, size_t oa_base, size_t ob_base) {
                 size_t oo = ob * p * r;
                 // dA[i,k] += sum_j G[i,j] * B[k,j]
                 for (size_t i = 0; i < p; ++i) {
                   for (size_t k = 0; k < q; ++k) {
                     double acc = 0.0;
                     for (size_t j = 0; j < r; ++j) {
                       acc += gout->at(oo + i * r + j) *
                              vb.at(ob_base + k * r + j);
                     }
                     accumulate_into(*ga, oa_base + i * q + k, acc);
                   }
                 }
                 // dB[k,j] += sum_i A[i,k] * G[i,j]
                 for (size_t k = 0; k < q; ++k) {
                   for (size_t j = 0; j < r; ++j) {
                     double acc = 0.0;
                     for (size_t i = 0; i < p; ++i) {
                       acc += va.at(oa_base + i * q + k) *
                              gout->at(oo + i * r + j);
                     }
                     accumulate_into(*gb, ob_base + k * r + j, acc);
                   }
                 }
               });
         });
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// softmax along an axis, max-subtracted for stability

Tensor softmax(const Tensor& x, size_t axis) {
  if (axis >= x.rank()) {
    fail(ErrorKind::AxisOutOfRange, "softmax: axis " + std::to_string(axis) +
                                        " for rank " +
                                        std::to_string(x.rank()));
  }
  const Shape& shape = x.shape();
  size_t len = shape[axis];
  size_t outer = 1, inner = 1;
  for (size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  auto out = make_impl(shape, x.dtype());
  const TensorImpl& ix = *x.impl();
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      double mx = -std::numeric_limits<double>::infinity();
      for (size_t j = 0; j < len; ++j) {
        mx = std::max(mx, ix.at((o * len + j) * inner + in));
      }
      double denom = 0.0;
      for (size_t j = 0; j < len; ++j) {
        size_t idx = (o * len + j) * inner + in;
        double e = std::exp(ix.at(idx) - mx);
        out->set(idx, e);
        denom += e;
      }
      for (size_t j = 0; j < len; ++j) {
        size_t idx = (o * len + j) * inner + in;
        out->set(idx, out->at(idx) / denom);
      }
    }
  }
  check_finite(*out, "softmax");
  record("softmax", {x.impl()}, out,
         [outer, inner, len](Tape& tape, Tape::Node& node) {
           TensorImpl* gout = tape.find_grad(node.output.get());
           TensorImpl* gx = tape.grad_slot(node.inputs[0]);
           const TensorImpl& y = *node.output;
           for (size_t o = 0; o < outer; ++o) {
             for (size_t in = 0; in < inner; ++in) {
               double dot = 0.0;
               for (size_t j = 0; j < len; ++j) {
                 size_t idx = (o * len + j) * inner + in;
                 dot += gout->at(idx) * y.at(idx);
               }
               for (size_t j = 0; j < len; ++j) {
                 size_t idx = (o * len + j) * inner + in;
                 accumulate_into(*gx, idx, y.at(idx) * (gout->at(idx) - dot));
               }
             }
           }
         });
  return Tensor(out);
}

// ---------------------------------------------------------------------------
// reductions and shape ops

Tensor reduce_sum(const Tensor& x, size_t axis, bool keepdim) {
  if (axis >= x.rank()) {
    fail(ErrorKind::AxisOutOfRange, "reduce_sum: axis " +
                                        std::to_string(axis) + " for rank " +
                                        std::to_string(x.rank()));
  }
  const Shape& shape = x.shape();
  size_t len = shape[axis];
  size_t outer = 1, inner = 1;
  for (size_t d = 0; d < axis; ++d) outer *= shape[d];
  for (size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  Shape out_shape = shape;
  if (keepdim) {
    out_shape[axis] = 1;
  } else {
    out_shape.erase(out_shape.begin() + static_cast<long>(axis));
    if (out_shape.empty()) out_shape = {1};
  }
  auto out = make_impl(out_shape, x.dtype());
  const TensorImpl& ix = *x.impl();
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      double acc = 0.0;
      for (size_t j = 0; j < len; ++j) {
        acc += ix.at((o * len + j) * inner + in);
      }
      out->set(o * inner + in, acc);
    }
  }
  check_finite(*out, "reduce_sum");
  record("reduce_sum", {x.impl()}, out,
         [outer, inner, len](Tape& tape, Tape::Node& node) {
           TensorImpl* gout = tape.find_grad(node.output.get());
           TensorImpl* gx = tape.grad_slot(node.inputs[0]);
           for (size_t o = 0; o < outer; ++o) {
             for (size_t in = 0; in < inner; ++in) {
               double g = gout->at(o * inner + in);
               for (size_t j = 0; j < len; ++j) {
                 accumulate_into(*gx, (o * len + j) * inner + in, g);
               }
             }
           }
         });
  return Tensor(out);
}

Tensor reshape(const Tensor& x, const Shape& new_shape) {
  if (shape_numel(new_shape) != x.numel()) {
    fail(ErrorKind::ElementCountMismatch,
         "reshape: " + shape_str(x.shape()) + " to " + shape_str(new_shape));
  }
  auto out = clone_impl(*x.impl());
  out->shape = new_shape;
  record("reshape", {x.impl()}, out, [](Tape& tape, Tape::Node& node) {
    TensorImpl* gout = tape.find_grad(node.output.get());
    TensorImpl* gx = tape.grad_slot(node.inputs[0]);
    size_t n = gout->numel();
    for (size_t i = 0; i < n; ++i) accumulate_into(*gx, i, gout->at(i));
  });
  return Tensor(out);
}

namespace {

void validate_perm(const std::vector<size_t>& perm, size_t rank) {
  if (perm.size() != rank) {
    fail(ErrorKind::InvalidPermutation,
         "transpose: permutation length " + std::to_string(perm.size()) +
             " for rank " + std::to_string(rank));
  }
  std::vector<bool> seen(rank, false);
  for (size_t p : perm) {
    if (p >= rank || seen[p]) {
      fail(ErrorKind::InvalidPermutation, "transpose: invalid permutation");
    }
    seen[p] = true;
  }
}

}  // namespace

Tensor transpose(const Tensor& x, const std::vector<size_t>& perm) {
  validate_perm(perm, x.rank());
  const Shape& in_shape = x.shape();
  Shape out_shape(perm.size());
  for (size_t d = 0; d < perm.size(); ++d) out_shape[d] = in_shape[perm[d]];
  auto in_strides = row_major_strides(in_shape);
  std::vector<size_t> strides(perm.size());
  for (size_t d = 0; d < perm.size(); ++d) strides[d] = in_strides[perm[d]];
  auto out = make_impl(out_shape, x.dtype());
  const TensorImpl& ix = *x.impl();
  std::vector<size_t> zero(perm.size(), 0);
  for_each_broadcast(out_shape, strides, zero,
                     [&](size_t i, size_t src, size_t) {
                       out->set(i, ix.at(src));
                     });
  record("transpose", {x.impl()}, out,
         [out_shape, strides](Tape& tape, Tape::Node& node) {
           TensorImpl* gout = tape.find_grad(node.output.get());
           TensorImpl* gx = tape.grad_slot(node.inputs[0]);
           std::vector<size_t> zero(out_shape.size(), 0);
           for_each_broadcast(out_shape, strides, zero,
                              [&](size_t i, size_t src, size_t) {
                                accumulate_into(*gx, src, gout->at(i));
                              });
         });
  return Tensor(out);
}

Tensor sum_all(const Tensor& x) {
  Tensor flat = reshape(x, {x.numel()});
  return reduce_sum(flat, 0, false);
}

Tensor mean_all(const Tensor& x) {
  return scale(sum_all(x), 1.0 / static_cast<double>(x.numel()));
}

void backward(const Tensor& root) {
  Tape* tape = Tape::current();
  if (!tape) {
    fail(ErrorKind::EmptyTape, "backward: no active tape");
  }
  tape->backward(root);
}

// ---------------------------------------------------------------------------
// finite-difference gradient check

namespace {

double eval_scalar(const std::function<Tensor(const std::vector<Tensor>&)>& fn,
                   const std::vector<Tensor>& inputs) {
  try {
    Tensor out = fn(inputs);
    if (out.numel() != 1) {
      fail(ErrorKind::NonScalarRoot,
           "finite_diff_check: function result is not scalar");
    }
    return out.item();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::NonFinite) {
      fail(ErrorKind::NonFiniteEvaluation,
           std::string("finite_diff_check: ") + e.what());
    }
    throw;
  }
}

Tensor perturbed(const Tensor& t, size_t coord, double delta) {
  std::vector<double> data = t.to_vector();
  data[coord] += delta;
  return Tensor::from_data(t.shape(), data, t.dtype());
}

}  // namespace

double finite_diff_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& inputs, double eps) {
  if (!(eps > 0.0)) {
    fail(ErrorKind::ConfigInvalid, "finite_diff_check: eps must be positive");
  }
  std::vector<size_t> checked;
  for (size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].requires_grad()) {
      if (inputs[i].dtype() != DType::F64) {
        fail(ErrorKind::DtypeMismatch,
             "finite_diff_check: gradient checks run at f64");
      }
      checked.push_back(i);
    }
  }
  if (checked.empty()) {
    fail(ErrorKind::ConfigInvalid,
         "finite_diff_check: no input has requires_grad set");
  }

  // Analytic gradients from one taped evaluation.
  std::vector<std::vector<double>> analytic(inputs.size());
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor root;
    try {
      root = fn(inputs);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NonFinite) {
        fail(ErrorKind::NonFiniteEvaluation,
             std::string("finite_diff_check: ") + e.what());
      }
      throw;
    }
    if (root.numel() != 1) {
      fail(ErrorKind::NonScalarRoot,
           "finite_diff_check: function result is not scalar");
    }
    tape.backward(root);
    for (size_t i : checked) {
      if (!inputs[i].has_grad()) {
        fail(ErrorKind::ConfigInvalid,
             "finite_diff_check: no gradient reached input " +
                 std::to_string(i));
      }
      analytic[i] = inputs[i].grad().to_vector();
    }
  }

  double worst = 0.0;
  for (size_t i : checked) {
    size_t n = inputs[i].numel();
    for (size_t c = 0; c < n; ++c) {
      std::vector<Tensor> plus = inputs;
      std::vector<Tensor> minus = inputs;
      plus[i] = perturbed(inputs[i], c, eps);
      minus[i] = perturbed(inputs[i], c, -eps);
      double fp = eval_scalar(fn, plus);
      double fm = eval_scalar(fn, minus);
      double central = (fp - fm) / (2.0 * eps);
      double a = analytic[i][c];
      double err = std::abs(a - central) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& fn,
                         const Tensor& input, double eps) {
  return finite_diff_check(
      [&fn](const std::vector<Tensor>& xs) { return fn(xs[0]); },
      std::vector<Tensor>{input}, eps);
}

}  // namespace interlat
