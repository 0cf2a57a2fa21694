// Serial reference kernels. Kept deliberately naive; the unit tests hold the
// OpenMP versions to these outputs.

#include <cmath>

#include "stt/kernels.hpp"

namespace stt::kernels::serial {

void gemmNN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      float acc = accumulate ? c[i * m + j] : 0.0f;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
      c[i * m + j] = acc;
    }
  }
}

void gemmNT(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate) {
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      float acc = accumulate ? c[i * m + j] : 0.0f;
      for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * m + j] = acc;
    }
  }
}

void gemmTN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate) {
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      float acc = accumulate ? c[i * m + j] : 0.0f;
      for (int p = 0; p < n; ++p) acc += a[p * k + i] * b[p * m + j];
      c[i * m + j] = acc;
    }
  }
}

int softmaxRows(const float* x, float* y, int rows, int cols, float mask_threshold) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + static_cast<std::size_t>(r) * cols;
    float* yr = y + static_cast<std::size_t>(r) * cols;
    float mx = xr[0];
    for (int c = 1; c < cols; ++c) mx = xr[c] > mx ? xr[c] : mx;
    if (mx <= mask_threshold) return r;
    float sum = 0.0f;
    for (int c = 0; c < cols; ++c) {
      float e = xr[c] <= mask_threshold ? 0.0f : std::exp(xr[c] - mx);
      yr[c] = e;
      sum += e;
    }
    float inv = 1.0f / sum;
    for (int c = 0; c < cols; ++c) yr[c] *= inv;
  }
  return -1;
}

void softmaxRowsBackward(const float* y, const float* gy, float* gx, int rows, int cols,
                         bool accumulate) {
  for (int r = 0; r < rows; ++r) {
    const float* yr = y + static_cast<std::size_t>(r) * cols;
    const float* gr = gy + static_cast<std::size_t>(r) * cols;
    float* out = gx + static_cast<std::size_t>(r) * cols;
    float dot = 0.0f;
    for (int c = 0; c < cols; ++c) dot += yr[c] * gr[c];
    for (int c = 0; c < cols; ++c) {
      float v = yr[c] * (gr[c] - dot);
      out[c] = accumulate ? out[c] + v : v;
    }
  }
}

void layerNormRows(const float* x, const float* gamma, const float* beta, float* y, float* xhat,
                   float* inv_std, int rows, int cols, float eps) {
  for (int r = 0; r < rows; ++r) {
    const float* xr = x + static_cast<std::size_t>(r) * cols;
    float* yr = y + static_cast<std::size_t>(r) * cols;
    float* hr = xhat + static_cast<std::size_t>(r) * cols;
    float mean = 0.0f;
    for (int c = 0; c < cols; ++c) mean += xr[c];
    mean /= static_cast<float>(cols);
    float var = 0.0f;
    for (int c = 0; c < cols; ++c) {
      float d = xr[c] - mean;
      var += d * d;
    }
    var /= static_cast<float>(cols);
    float istd = 1.0f / std::sqrt(var + eps);
    inv_std[r] = istd;
    for (int c = 0; c < cols; ++c) {
      hr[c] = (xr[c] - mean) * istd;
      yr[c] = hr[c] * gamma[c] + beta[c];
    }
  }
}

void layerNormRowsBackwardX(const float* gy, const float* gamma, const float* xhat,
                            const float* inv_std, float* gx, int rows, int cols, bool accumulate) {
  for (int r = 0; r < rows; ++r) {
    const float* gr = gy + static_cast<std::size_t>(r) * cols;
    const float* hr = xhat + static_cast<std::size_t>(r) * cols;
    float* out = gx + static_cast<std::size_t>(r) * cols;
    float m1 = 0.0f, m2 = 0.0f;
    for (int c = 0; c < cols; ++c) {
      float t = gr[c] * gamma[c];
      m1 += t;
      m2 += t * hr[c];
    }
    m1 /= static_cast<float>(cols);
    m2 /= static_cast<float>(cols);
    for (int c = 0; c < cols; ++c) {
      float t = gr[c] * gamma[c];
      float v = (t - m1 - hr[c] * m2) * inv_std[r];
      out[c] = accumulate ? out[c] + v : v;
    }
  }
}

void layerNormRowsBackwardParams(const float* gy, const float* xhat, float* ggamma, float* gbeta,
                                 int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* gr = gy + static_cast<std::size_t>(r) * cols;
    const float* hr = xhat + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) {
      ggamma[c] += gr[c] * hr[c];
      gbeta[c] += gr[c];
    }
  }
}

namespace {
inline int clampOffset(int off, int clip) { return off < -clip ? -clip : (off > clip ? clip : off); }
}  // namespace

void relativeLogits(const float* q, const float* e, float* out, int n, int dk, int clip) {
  for (int i = 0; i < n; ++i) {
    const float* qi = q + static_cast<std::size_t>(i) * dk;
    for (int j = 0; j < n; ++j) {
      const float* er = e + static_cast<std::size_t>(clampOffset(j - i, clip) + clip) * dk;
      float acc = 0.0f;
      for (int d = 0; d < dk; ++d) acc += qi[d] * er[d];
      out[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
}

void relativeLogitsBackwardQ(const float* g, const float* e, float* gq, int n, int dk, int clip,
                             bool accumulate) {
  for (int i = 0; i < n; ++i) {
    float* out = gq + static_cast<std::size_t>(i) * dk;
    if (!accumulate)
      for (int d = 0; d < dk; ++d) out[d] = 0.0f;
    for (int j = 0; j < n; ++j) {
      float gij = g[static_cast<std::size_t>(i) * n + j];
      const float* er = e + static_cast<std::size_t>(clampOffset(j - i, clip) + clip) * dk;
      for (int d = 0; d < dk; ++d) out[d] += gij * er[d];
    }
  }
}

void relativeLogitsBackwardE(const float* g, const float* q, float* ge, int n, int dk, int clip,
                             bool accumulate) {
  if (!accumulate) {
    std::size_t count = static_cast<std::size_t>(2 * clip + 1) * dk;
    for (std::size_t i = 0; i < count; ++i) ge[i] = 0.0f;
  }
  for (int i = 0; i < n; ++i) {
    const float* qi = q + static_cast<std::size_t>(i) * dk;
    for (int j = 0; j < n; ++j) {
      float gij = g[static_cast<std::size_t>(i) * n + j];
      float* er = ge + static_cast<std::size_t>(clampOffset(j - i, clip) + clip) * dk;
      for (int d = 0; d < dk; ++d) er[d] += gij * qi[d];
    }
  }
}

void adamUpdate(float* p, const float* g, float* m, float* v, std::size_t count, float lr,
                float beta1, float beta2, float eps, float b1t, float b2t) {
  float inv1 = 1.0f / (1.0f - b1t);
  float inv2 = 1.0f / (1.0f - b2t);
  for (std::size_t i = 0; i < count; ++i) {
    m[i] = beta1 * m[i] + (1.0f - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0f - beta2) * g[i] * g[i];
    float mhat = m[i] * inv1;
    float vhat = v[i] * inv2;
    p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

}  // namespace stt::kernels::serial
