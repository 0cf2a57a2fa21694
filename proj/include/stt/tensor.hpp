#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "stt/common.hpp"

namespace stt {

// Masking value: the most negative finite float rather than a true -inf, so
// softmax max-subtraction never produces NaN; masked probabilities still
// underflow to exactly zero.
constexpr float NEG_INF = -std::numeric_limits<float>::max();
// Anything at or below this is treated as masked.
constexpr float MASK_THRESHOLD = -1e30f;

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense row-major float32 tensor with define-by-run reverse-mode autodiff.
// Ops record parent links and a backward closure; backward() walks the graph
// in reverse topological order exactly once. A graph is confined to one
// thread; kernels may parallelize internally.
class Tensor {
 public:
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;  // allocated on demand, same size as value
  bool requires_grad = false;
  const char* op_name = "leaf";
  std::vector<TensorPtr> parents;
  std::function<void(Tensor&)> backward_fn;

  std::size_t numel() const { return value.size(); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }
  void ensureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
  }
  void zeroGrad() { grad.assign(value.size(), 0.0f); }
};

std::size_t shapeNumel(const std::vector<int>& shape);
std::string shapeToString(const std::vector<int>& shape);

// Constructors.
TensorPtr makeTensor(std::vector<int> shape, bool requires_grad = false);
TensorPtr makeConst(std::vector<int> shape, std::vector<float> values);
TensorPtr makeScalar(float v);
// Glorot-uniform initialized parameter (requires_grad = true).
TensorPtr makeParam(std::vector<int> shape, Rng& rng);

// --- Forward ops (each records its backward) ---------------------------------

// c = a @ b for 2-D a [n x k], b [k x m].
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
// c = a @ b^T for 2-D a [n x k], b [m x k].
TensorPtr matmulNT(const TensorPtr& a, const TensorPtr& b);
// Elementwise sum; b may broadcast as a suffix of a's shape (e.g. bias rows).
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
// Elementwise product, equal shapes.
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
// Concatenation along the last dimension of 2-D tensors sharing dim 0.
TensorPtr concatCols(const std::vector<TensorPtr>& parts);
// Columns [c0, c1) of a 2-D tensor.
TensorPtr sliceCols(const TensorPtr& t, int c0, int c1);
// Rows of `table` [V x d] gathered by ids; error on out-of-range ids.
TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids);
// Row-wise softmax over the last dimension of a 2-D tensor. Throws
// ContractViolation if a row is entirely masked.
TensorPtr softmaxRows(const TensorPtr& t);
// Layer normalization over the last dimension with affine parameters.
TensorPtr layerNorm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                    float eps = 1e-5f);
TensorPtr relu(const TensorPtr& t);
TensorPtr scale(const TensorPtr& t, float s);
// Swaps the two dimensions of a 2-D tensor.
TensorPtr transpose2d(const TensorPtr& t);
// logits + mask where mask entries are 0 or NEG_INF; mask must not require
// gradients. Shapes must match.
TensorPtr maskedAdd(const TensorPtr& logits, const TensorPtr& mask);
// Mean cross-entropy over rows whose target is not ignore_id; errors when no
// row is supervised.
TensorPtr crossEntropyMean(const TensorPtr& logits, const std::vector<int>& targets,
                           int ignore_id);
// Inverted dropout; identity when p == 0.
TensorPtr dropout(const TensorPtr& t, float p, Rng& rng);
TensorPtr sumAll(const TensorPtr& t);
// Relative-position logits for self-attention: q [n x dk], e [(2*clip+1) x dk]
// -> [n x n], entry (i, j) = dot(q_i, e_{clamp(j-i)}).
TensorPtr relativeLogits(const TensorPtr& q, const TensorPtr& e, int clip);

// Accumulates d(loss)/d(param) into every reachable tensor with requires_grad.
// Repeated calls without zeroing accumulate. loss must be scalar.
void backward(const TensorPtr& loss);

}  // namespace stt
