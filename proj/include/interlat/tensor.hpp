#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "interlat/error.hpp"
#include "interlat/rng.hpp"

namespace interlat {

enum class DType : uint8_t { F32 = 0, F64 = 1 };

const char* dtype_name(DType dtype);
size_t dtype_size(DType dtype);

using Shape = std::vector<size_t>;

size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

struct TensorImpl;

// Immutable value handle: ops return fresh tensors and never mutate inputs.
// Scalars are rank-1 tensors of shape (1). Every op validates that its result
// is finite and throws ErrorKind::NonFinite otherwise.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl);

  static Tensor zeros(const Shape& shape, DType dtype = DType::F64);
  static Tensor ones(const Shape& shape, DType dtype = DType::F64);
  static Tensor full(const Shape& shape, double value,
                     DType dtype = DType::F64);
  static Tensor scalar(double value, DType dtype = DType::F64);
  static Tensor from_data(const Shape& shape, const std::vector<double>& data,
                          DType dtype = DType::F64);
  static Tensor randn(const Shape& shape, Rng& rng, double stddev = 1.0,
                      DType dtype = DType::F64);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  size_t rank() const;
  size_t numel() const;
  DType dtype() const;

  // Leaf marking: returns a copy of the value with the flag set. Gradients
  // are only committed to tensors whose flag is true.
  bool requires_grad() const;
  Tensor with_requires_grad(bool flag = true) const;

  double value_at(size_t i) const;  // row-major linear index
  double item() const;              // single-element tensors only
  std::vector<double> to_vector() const;

  Tensor grad() const;  // empty handle when no gradient has been committed
  bool has_grad() const;
  Tensor detach() const;  // value copy without grad flag

  const float* data_f32() const;
  const double* data_f64() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Single-writer reverse-mode tape. Ops record nodes onto the thread's active
// tape (installed via TapeScope) whenever any input requires grad. backward()
// replays nodes in reverse recording order with a deterministic schedule and
// commits gradients to requires_grad leaves.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  struct Node {
    const char* op;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    std::shared_ptr<TensorImpl> output;
    std::function<void(Tape&, Node&)> pull;
  };

  size_t size() const;
  void backward(const Tensor& root);

  static Tape* current();

  // Gradient accumulation slots used by pull closures during backward().
  TensorImpl* grad_slot(const std::shared_ptr<TensorImpl>& owner);
  TensorImpl* find_grad(const TensorImpl* owner);

  std::vector<Node> nodes_;

 private:
  std::vector<std::pair<std::shared_ptr<TensorImpl>, std::shared_ptr<TensorImpl>>>
      grads_;
  std::unordered_map<const TensorImpl*, size_t> grad_index_;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Differentiable ops. Elementwise ops broadcast with trailing alignment;
// matmul multiplies the trailing two axes and broadcasts leading batch axes.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor softmax(const Tensor& x, size_t axis);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor divide(const Tensor& a, const Tensor& b);
Tensor sqrt_elem(const Tensor& x);
Tensor scale(const Tensor& x, double factor);
Tensor reduce_sum(const Tensor& x, size_t axis, bool keepdim = false);
Tensor reshape(const Tensor& x, const Shape& new_shape);
Tensor transpose(const Tensor& x, const std::vector<size_t>& perm);
Tensor sum_all(const Tensor& x);   // shape (1)
Tensor mean_all(const Tensor& x);  // shape (1)

// Runs backward on the thread's active tape.
void backward(const Tensor& root);

// Max over all coordinates of relative error between the tape gradient and a
// central finite difference, for every input with requires_grad set (f64
// only). |analytic - central| / max(1, |analytic|).
double finite_diff_check(
    const std::function<Tensor(const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& inputs, double eps = 1e-4);
double finite_diff_check(const std::function<Tensor(const Tensor&)>& fn,
                         const Tensor& input, double eps = 1e-4);

}  // namespace interlat
