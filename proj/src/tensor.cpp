#include "stt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "stt/kernels.hpp"

namespace stt {

std::size_t shapeNumel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw DataError("tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shapeToString(const std::vector<int>& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

[[noreturn]] void shapeError(const char* op, const std::vector<int>& a, const std::vector<int>& b) {
  throw DataError(std::string(op) + ": incompatible shapes " + shapeToString(a) + " and " +
                  shapeToString(b));
}

void require2d(const TensorPtr& t, const char* op) {
  if (t->rank() != 2) throw DataError(std::string(op) + ": expected a 2-D tensor, got " +
                                      shapeToString(t->shape));
}

TensorPtr makeOp(std::vector<int> shape, const char* op, std::vector<TensorPtr> parents) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value.resize(shapeNumel(t->shape));
  t->op_name = op;
  for (const TensorPtr& p : parents)
    if (p->requires_grad) t->requires_grad = true;
  t->parents = std::move(parents);
  return t;
}

}  // namespace

TensorPtr makeTensor(std::vector<int> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value.assign(shapeNumel(t->shape), 0.0f);
  t->requires_grad = requires_grad;
  return t;
}

TensorPtr makeConst(std::vector<int> shape, std::vector<float> values) {
  if (shapeNumel(shape) != values.size())
    throw DataError("makeConst: value count does not match shape " + shapeToString(shape));
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->value = std::move(values);
  return t;
}

TensorPtr makeScalar(float v) { return makeConst({1}, {v}); }

TensorPtr makeParam(std::vector<int> shape, Rng& rng) {
  auto t = makeTensor(shape, true);
  float fan_in = static_cast<float>(shape.size() >= 2 ? shape[shape.size() - 2] : shape.back());
  float fan_out = static_cast<float>(shape.back());
  float a = std::sqrt(6.0f / (fan_in + fan_out));
  for (float& v : t->value) v = rng.uniformSigned(a);
  return t;
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
  require2d(a, "matmul");
  require2d(b, "matmul");
  if (a->dim(1) != b->dim(0)) shapeError("matmul", a->shape, b->shape);
  int n = a->dim(0), k = a->dim(1), m = b->dim(1);
  TensorPtr out = makeOp({n, m}, "matmul", {a, b});
  kernels::gemmNN(a->value.data(), b->value.data(), out->value.data(), n, k, m, false);
  Tensor* pa = a.get();
  Tensor* pb = b.get();
  out->backward_fn = [pa, pb, n, k, m](Tensor& self) {
    if (pa->requires_grad) {
      pa->ensureGrad();  // dA += G @ B^T
      kernels::gemmNT(self.grad.data(), pb->value.data(), pa->grad.data(), n, m, k, true);
    }
    if (pb->requires_grad) {
      pb->ensureGrad();  // dB += A^T @ G
      kernels::gemmTN(pa->value.data(), self.grad.data(), pb->grad.data(), n, k, m, true);
    }
  };
  return out;
}

TensorPtr matmulNT(const TensorPtr& a, const TensorPtr& b) {
  require2d(a, "matmulNT");
  require2d(b, "matmulNT");
  if (a->dim(1) != b->dim(1)) shapeError("matmulNT", a->shape, b->shape);
  int n = a->dim(0), k = a->dim(1), m = b->dim(0);
  TensorPtr out = makeOp({n, m}, "matmulNT", {a, b});
  kernels::gemmNT(a->value.data(), b->value.data(), out->value.data(), n, k, m, false);
  Tensor* pa = a.get();
  Tensor* pb = b.get();
  out->backward_fn = [pa, pb, n, k, m](Tensor& self) {
    if (pa->requires_grad) {
      pa->ensureGrad();  // dA += G @ B
      kernels::gemmNN(self.grad.data(), pb->value.data(), pa->grad.data(), n, m, k, true);
    }
    if (pb->requires_grad) {
      pb->ensureGrad();  // dB += G^T @ A
      kernels::gemmTN(self.grad.data(), pa->value.data(), pb->grad.data(), n, m, k, true);
    }
  };
  return out;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
  bool same = a->shape == b->shape;
  bool suffix = false;
  if (!same) {
    // b broadcasts when its shape is a suffix of a's.
    if (b->rank() < a->rank()) {
      suffix = std::equal(b->shape.begin(), b->shape.end(),
                          a->shape.end() - b->rank());
    }
    if (!suffix) shapeError("add", a->shape, b->shape);
  }
  TensorPtr out = makeOp(a->shape, "add", {a, b});
  std::size_t nb = b->numel();
  for (std::size_t i = 0; i < out->numel(); ++i)
    out->value[i] = a->value[i] + b->value[i % nb];
  Tensor* pa = a.get();
  Tensor* pb = b.get();
  out->backward_fn = [pa, pb, nb](Tensor& self) {
    if (pa->requires_grad) {
      pa->ensureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i % nb] += self.grad[i];
    }
  };
  return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
  if (a->shape != b->shape) shapeError("mul", a->shape, b->shape);
  TensorPtr out = makeOp(a->shape, "mul", {a, b});
  for (std::size_t i = 0; i < out->numel(); ++i) out->value[i] = a->value[i] * b->value[i];
  Tensor* pa = a.get();
  Tensor* pb = b.get();
  out->backward_fn = [pa, pb](Tensor& self) {
    if (pa->requires_grad) {
      pa->ensureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pa->grad[i] += self.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      pb->ensureGrad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pb->grad[i] += self.grad[i] * pa->value[i];
    }
  };
  return out;
}

TensorPtr concatCols(const std::vector<TensorPtr>& parts) {
  if (parts.empty()) throw DataError("concatCols: no inputs");
  int rows = parts[0]->dim(0);
  int cols = 0;
  for (const TensorPtr& p : parts) {
    require2d(p, "concatCols");
    if (p->dim(0) != rows) shapeError("concatCols", parts[0]->shape, p->shape);
    cols += p->dim(1);
  }
  TensorPtr out = makeOp({rows, cols}, "concatCols", parts);
  int offset = 0;
  for (const TensorPtr& p : parts) {
    int pc = p->dim(1);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < pc; ++c)
        out->value[static_cast<std::size_t>(r) * cols + offset + c] =
            p->value[static_cast<std::size_t>(r) * pc + c];
    offset += pc;
  }
  std::vector<Tensor*> raw;
  for (const TensorPtr& p : parts) raw.push_back(p.get());
  out->backward_fn = [raw, rows, cols](Tensor& self) {
    int offset = 0;
    for (Tensor* p : raw) {
      int pc = p->dim(1);
      if (p->requires_grad) {
        p->ensureGrad();
        for (int r = 0; r < rows; ++r)
          for (int c = 0; c < pc; ++c)
            p->grad[static_cast<std::size_t>(r) * pc + c] +=
                self.grad[static_cast<std::size_t>(r) * cols + offset + c];
      }
      offset += pc;
    }
  };
  return out;
}

TensorPtr sliceCols(const TensorPtr& t, int c0, int c1) {
  require2d(t, "sliceCols");
  if (c0 < 0 || c1 > t->dim(1) || c0 >= c1)
    throw DataError("sliceCols: bad column range [" + std::to_string(c0) + ", " +
                    std::to_string(c1) + ") for " + shapeToString(t->shape));
  int rows = t->dim(0), cols = t->dim(1), w = c1 - c0;
  TensorPtr out = makeOp({rows, w}, "sliceCols", {t});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < w; ++c)
      out->value[static_cast<std::size_t>(r) * w + c] =
          t->value[static_cast<std::size_t>(r) * cols + c0 + c];
  Tensor* pt = t.get();
  out->backward_fn = [pt, rows, cols, w, c0](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < w; ++c)
        pt->grad[static_cast<std::size_t>(r) * cols + c0 + c] +=
            self.grad[static_cast<std::size_t>(r) * w + c];
  };
  return out;
}

TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids) {
  require2d(table, "embedding");
  int v = table->dim(0), d = table->dim(1);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] < 0 || ids[i] >= v)
      throw DataError("embedding: id " + std::to_string(ids[i]) + " at position " +
                      std::to_string(i) + " outside table of " + std::to_string(v) + " rows");
  if (ids.empty()) throw DataError("embedding: empty id list");
  int n = static_cast<int>(ids.size());
  TensorPtr out = makeOp({n, d}, "embedding", {table});
  for (int i = 0; i < n; ++i)
    std::copy_n(table->value.begin() + static_cast<std::size_t>(ids[i]) * d, d,
                out->value.begin() + static_cast<std::size_t>(i) * d);
  Tensor* pt = table.get();
  std::vector<int> ids_copy = ids;
  out->backward_fn = [pt, ids_copy, d](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (std::size_t i = 0; i < ids_copy.size(); ++i)
      for (int c = 0; c < d; ++c)
        pt->grad[static_cast<std::size_t>(ids_copy[i]) * d + c] +=
            self.grad[i * static_cast<std::size_t>(d) + c];
  };
  return out;
}

TensorPtr softmaxRows(const TensorPtr& t) {
  require2d(t, "softmax");
  int rows = t->dim(0), cols = t->dim(1);
  TensorPtr out = makeOp(t->shape, "softmax", {t});
  int bad = kernels::softmaxRows(t->value.data(), out->value.data(), rows, cols, MASK_THRESHOLD);
  if (bad >= 0)
    throw ContractViolation("softmax row " + std::to_string(bad) +
                            " is fully masked (no attendable positions)");
  Tensor* pt = t.get();
  out->backward_fn = [pt, rows, cols](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    kernels::softmaxRowsBackward(self.value.data(), self.grad.data(), pt->grad.data(), rows, cols,
                                 true);
  };
  return out;
}

TensorPtr layerNorm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta, float eps) {
  require2d(x, "layerNorm");
  int rows = x->dim(0), cols = x->dim(1);
  if (gamma->shape != std::vector<int>{cols}) shapeError("layerNorm", x->shape, gamma->shape);
  if (beta->shape != std::vector<int>{cols}) shapeError("layerNorm", x->shape, beta->shape);
  TensorPtr out = makeOp(x->shape, "layerNorm", {x, gamma, beta});
  auto xhat = std::make_shared<std::vector<float>>(x->numel());
  auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(rows));
  kernels::layerNormRows(x->value.data(), gamma->value.data(), beta->value.data(),
                         out->value.data(), xhat->data(), inv_std->data(), rows, cols, eps);
  Tensor* px = x.get();
  Tensor* pg = gamma.get();
  Tensor* pb = beta.get();
  out->backward_fn = [px, pg, pb, xhat, inv_std, rows, cols](Tensor& self) {
    if (px->requires_grad) {
      px->ensureGrad();
      kernels::layerNormRowsBackwardX(self.grad.data(), pg->value.data(), xhat->data(),
                                      inv_std->data(), px->grad.data(), rows, cols, true);
    }
    if (pg->requires_grad || pb->requires_grad) {
      pg->ensureGrad();
      pb->ensureGrad();
      kernels::layerNormRowsBackwardParams(self.grad.data(), xhat->data(), pg->grad.data(),
                                           pb->grad.data(), rows, cols);
    }
  };
  return out;
}

TensorPtr relu(const TensorPtr& t) {
  TensorPtr out = makeOp(t->shape, "relu", {t});
  for (std::size_t i = 0; i < t->numel(); ++i)
    out->value[i] = t->value[i] > 0.0f ? t->value[i] : 0.0f;
  Tensor* pt = t.get();
  out->backward_fn = [pt](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pt->value[i] > 0.0f) pt->grad[i] += self.grad[i];
  };
  return out;
}

TensorPtr scale(const TensorPtr& t, float s) {
  TensorPtr out = makeOp(t->shape, "scale", {t});
  for (std::size_t i = 0; i < t->numel(); ++i) out->value[i] = t->value[i] * s;
  Tensor* pt = t.get();
  out->backward_fn = [pt, s](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pt->grad[i] += self.grad[i] * s;
  };
  return out;
}

TensorPtr transpose2d(const TensorPtr& t) {
  require2d(t, "transpose");
  int rows = t->dim(0), cols = t->dim(1);
  TensorPtr out = makeOp({cols, rows}, "transpose", {t});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      out->value[static_cast<std::size_t>(c) * rows + r] =
          t->value[static_cast<std::size_t>(r) * cols + c];
  Tensor* pt = t.get();
  out->backward_fn = [pt, rows, cols](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c)
        pt->grad[static_cast<std::size_t>(r) * cols + c] +=
            self.grad[static_cast<std::size_t>(c) * rows + r];
  };
  return out;
}

TensorPtr maskedAdd(const TensorPtr& logits, const TensorPtr& mask) {
  if (logits->shape != mask->shape) shapeError("maskedAdd", logits->shape, mask->shape);
  if (mask->requires_grad) throw DataError("maskedAdd: mask must not require gradients");
  for (float v : mask->value)
    if (v != 0.0f && v != NEG_INF)
      throw DataError("maskedAdd: mask entries must be 0 or -inf");
  TensorPtr out = makeOp(logits->shape, "maskedAdd", {logits, mask});
  for (std::size_t i = 0; i < out->numel(); ++i)
    out->value[i] = mask->value[i] == NEG_INF ? NEG_INF : logits->value[i];
  Tensor* pl = logits.get();
  Tensor* pm = mask.get();
  out->backward_fn = [pl, pm](Tensor& self) {
    if (!pl->requires_grad) return;
    pl->ensureGrad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (pm->value[i] != NEG_INF) pl->grad[i] += self.grad[i];
  };
  return out;
}

TensorPtr crossEntropyMean(const TensorPtr& logits, const std::vector<int>& targets,
                           int ignore_id) {
  require2d(logits, "crossEntropy");
  int rows = logits->dim(0), cols = logits->dim(1);
  if (static_cast<int>(targets.size()) != rows)
    throw DataError("crossEntropy: " + std::to_string(targets.size()) + " targets for " +
                    std::to_string(rows) + " rows");
  int count = 0;
  for (int t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || t >= cols) throw DataError("crossEntropy: target id out of range");
    ++count;
  }
  if (count == 0) throw DataError("crossEntropy: every position is ignored");

  TensorPtr out = makeOp({1}, "crossEntropy", {logits});
  // Cache softmax probabilities for the backward pass.
  auto probs = std::make_shared<std::vector<float>>(logits->numel());
  double loss = 0.0;
  for (int r = 0; r < rows; ++r) {
    const float* row = logits->value.data() + static_cast<std::size_t>(r) * cols;
    float* prow = probs->data() + static_cast<std::size_t>(r) * cols;
    float mx = row[0];
    for (int c = 1; c < cols; ++c) mx = row[c] > mx ? row[c] : mx;
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      float e = std::exp(row[c] - mx);
      prow[c] = e;
      sum += e;
    }
    float inv = static_cast<float>(1.0 / sum);
    for (int c = 0; c < cols; ++c) prow[c] *= inv;
    if (targets[r] != ignore_id)
      loss += std::log(sum) + mx - row[targets[r]];
  }
  out->value[0] = static_cast<float>(loss / count);

  Tensor* pl = logits.get();
  std::vector<int> tcopy = targets;
  out->backward_fn = [pl, probs, tcopy, ignore_id, rows, cols, count](Tensor& self) {
    if (!pl->requires_grad) return;
    pl->ensureGrad();
    float g = self.grad[0] / static_cast<float>(count);
    for (int r = 0; r < rows; ++r) {
      if (tcopy[r] == ignore_id) continue;
      const float* prow = probs->data() + static_cast<std::size_t>(r) * cols;
      float* grow = pl->grad.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) grow[c] += g * prow[c];
      grow[tcopy[r]] -= g;
    }
  };
  return out;
}

TensorPtr dropout(const TensorPtr& t, float p, Rng& rng) {
  if (p < 0.0f || p >= 1.0f) throw DataError("dropout probability must be in [0, 1)");
  if (p == 0.0f) return t;
  TensorPtr out = makeOp(t->shape, "dropout", {t});
  auto mask = std::make_shared<std::vector<float>>(t->numel());
  float keep = 1.0f - p;
  float inv_keep = 1.0f / keep;
  for (std::size_t i = 0; i < t->numel(); ++i) {
    (*mask)[i] = rng.uniformFloat() < p ? 0.0f : inv_keep;
    out->value[i] = t->value[i] * (*mask)[i];
  }
  Tensor* pt = t.get();
  out->backward_fn = [pt, mask](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) pt->grad[i] += self.grad[i] * (*mask)[i];
  };
  return out;
}

TensorPtr sumAll(const TensorPtr& t) {
  TensorPtr out = makeOp({1}, "sum", {t});
  double acc = 0.0;
  for (float v : t->value) acc += v;
  out->value[0] = static_cast<float>(acc);
  Tensor* pt = t.get();
  out->backward_fn = [pt](Tensor& self) {
    if (!pt->requires_grad) return;
    pt->ensureGrad();
    for (std::size_t i = 0; i < pt->grad.size(); ++i) pt->grad[i] += self.grad[0];
  };
  return out;
}

TensorPtr relativeLogits(const TensorPtr& q, const TensorPtr& e, int clip) {
  require2d(q, "relativeLogits");
  require2d(e, "relativeLogits");
  if (clip < 0) throw DataError("relativeLogits: clip must be >= 0");
  if (e->dim(0) != 2 * clip + 1 || e->dim(1) != q->dim(1))
    shapeError("relativeLogits", q->shape, e->shape);
  int n = q->dim(0), dk = q->dim(1);
  TensorPtr out = makeOp({n, n}, "relativeLogits", {q, e});
  kernels::relativeLogits(q->value.data(), e->value.data(), out->value.data(), n, dk, clip);
  Tensor* pq = q.get();
  Tensor* pe = e.get();
  out->backward_fn = [pq, pe, n, dk, clip](Tensor& self) {
    if (pq->requires_grad) {
      pq->ensureGrad();
      kernels::relativeLogitsBackwardQ(self.grad.data(), pe->value.data(), pq->grad.data(), n, dk,
                                       clip, true);
    }
    if (pe->requires_grad) {
      pe->ensureGrad();
      kernels::relativeLogitsBackwardE(self.grad.data(), pq->value.data(), pe->grad.data(), n, dk,
                                       clip, true);
    }
  };
  return out;
}

void backward(const TensorPtr& loss) {
  if (loss->numel() != 1) throw DataError("backward: loss must be scalar");

  // Reverse topological order via iterative DFS over parent links.
  std::vector<Tensor*> order;
  std::unordered_set<Tensor*> visited;
  std::vector<std::pair<Tensor*, std::size_t>> stack;
  stack.push_back({loss.get(), 0});
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Tensor* parent = node->parents[next++].get();
      if (visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->ensureGrad();
  loss->grad[0] += 1.0f;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor* node = *it;
    if (node->backward_fn && node->requires_grad) {
      node->ensureGrad();
      node->backward_fn(*node);
    }
  }
}

}  // namespace stt
