#include "stt/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stt::kernels {

namespace {
std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::OpenMP
#else
    Backend::Serial
#endif
};
}  // namespace

Backend backend() { return g_backend.load(std::memory_order_relaxed); }

void setBackend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

bool openmpAvailable() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int maxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void setThreads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

#define STT_DISPATCH(call)                 \
  if (backend() == Backend::OpenMP) {      \
    return omp::call;                      \
  } else {                                 \
    return serial::call;                   \
  }

void gemmNN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate) {
  STT_DISPATCH(gemmNN(a, b, c, n, k, m, accumulate))
}

void gemmNT(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate) {
  STT_DISPATCH(gemmNT(a, b, c, n, k, m, accumulate))
}

void gemmTN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate) {
  STT_DISPATCH(gemmTN(a, b, c, n, k, m, accumulate))
}

int softmaxRows(const float* x, float* y, int rows, int cols, float mask_threshold) {
  STT_DISPATCH(softmaxRows(x, y, rows, cols, mask_threshold))
}

void softmaxRowsBackward(const float* y, const float* gy, float* gx, int rows, int cols,
                         bool accumulate) {
  STT_DISPATCH(softmaxRowsBackward(y, gy, gx, rows, cols, accumulate))
}

void layerNormRows(const float* x, const float* gamma, const float* beta, float* y, float* xhat,
                   float* inv_std, int rows, int cols, float eps) {
  STT_DISPATCH(layerNormRows(x, gamma, beta, y, xhat, inv_std, rows, cols, eps))
}

void layerNormRowsBackwardX(const float* gy, const float* gamma, const float* xhat,
                            const float* inv_std, float* gx, int rows, int cols, bool accumulate) {
  STT_DISPATCH(layerNormRowsBackwardX(gy, gamma, xhat, inv_std, gx, rows, cols, accumulate))
}

void layerNormRowsBackwardParams(const float* gy, const float* xhat, float* ggamma, float* gbeta,
                                 int rows, int cols) {
  STT_DISPATCH(layerNormRowsBackwardParams(gy, xhat, ggamma, gbeta, rows, cols))
}

void relativeLogits(const float* q, const float* e, float* out, int n, int dk, int clip) {
  STT_DISPATCH(relativeLogits(q, e, out, n, dk, clip))
}

void relativeLogitsBackwardQ(const float* g, const float* e, float* gq, int n, int dk, int clip,
                             bool accumulate) {
  STT_DISPATCH(relativeLogitsBackwardQ(g, e, gq, n, dk, clip, accumulate))
}

void relativeLogitsBackwardE(const float* g, const float* q, float* ge, int n, int dk, int clip,
                             bool accumulate) {
  STT_DISPATCH(relativeLogitsBackwardE(g, q, ge, n, dk, clip, accumulate))
}

void adamUpdate(float* p, const float* g, float* m, float* v, std::size_t count, float lr,
                float beta1, float beta2, float eps, float b1t, float b2t) {
  STT_DISPATCH(adamUpdate(p, g, m, v, count, lr, beta1, beta2, eps, b1t, b2t))
}

#undef STT_DISPATCH

}  // namespace stt::kernels
