#pragma once

#include <cstddef>

namespace stt::kernels {

// The hot inner loops of the tensor engine exist twice: a plain serial
// reference and an OpenMP version parallelized over independent rows or
// elements. Each output element is written by exactly one thread, so results
// do not depend on the schedule. The benchmark tool compares the two.
enum class Backend { Serial, OpenMP };

Backend backend();
void setBackend(Backend b);
bool openmpAvailable();
int maxThreads();
void setThreads(int n);

// C[n x m] = A[n x k] * B[k x m]           (+= when accumulate)
void gemmNN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
// C[n x m] = A[n x k] * B[m x k]^T
void gemmNT(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
// C[k x m] = A[n x k]^T * B[n x m]
void gemmTN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);

// Row-wise softmax with max subtraction. Entries at or below mask_threshold
// are treated as masked; returns the index of the first row whose entries are
// all masked (an upstream contract violation), or -1.
int softmaxRows(const float* x, float* y, int rows, int cols, float mask_threshold);
// gx (+)= y .* (gy - rowdot(gy, y))
void softmaxRowsBackward(const float* y, const float* gy, float* gx, int rows, int cols,
                         bool accumulate);

// y = (x - mean) / sqrt(var + eps) * gamma + beta, per row; caches the
// normalized values and inverse stddev for the backward pass.
void layerNormRows(const float* x, const float* gamma, const float* beta, float* y, float* xhat,
                   float* inv_std, int rows, int cols, float eps);
void layerNormRowsBackwardX(const float* gy, const float* gamma, const float* xhat,
                            const float* inv_std, float* gx, int rows, int cols, bool accumulate);
void layerNormRowsBackwardParams(const float* gy, const float* xhat, float* ggamma, float* gbeta,
                                 int rows, int cols);

// Relative-position logits: out[i][j] = dot(q[i], e[clamp(j - i, -clip, clip) + clip]),
// q is [n x dk], e is [(2*clip+1) x dk], out is [n x n].
void relativeLogits(const float* q, const float* e, float* out, int n, int dk, int clip);
void relativeLogitsBackwardQ(const float* g, const float* e, float* gq, int n, int dk, int clip,
                             bool accumulate);
void relativeLogitsBackwardE(const float* g, const float* q, float* ge, int n, int dk, int clip,
                             bool accumulate);

// Bias-corrected Adam over one parameter array. b1t/b2t are beta^step.
void adamUpdate(float* p, const float* g, float* m, float* v, std::size_t count, float lr,
                float beta1, float beta2, float eps, float b1t, float b2t);

namespace serial {
void gemmNN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
void gemmNT(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
void gemmTN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
int softmaxRows(const float* x, float* y, int rows, int cols, float mask_threshold);
void softmaxRowsBackward(const float* y, const float* gy, float* gx, int rows, int cols,
                         bool accumulate);
void layerNormRows(const float* x, const float* gamma, const float* beta, float* y, float* xhat,
                   float* inv_std, int rows, int cols, float eps);
void layerNormRowsBackwardX(const float* gy, const float* gamma, const float* xhat,
                            const float* inv_std, float* gx, int rows, int cols, bool accumulate);
void layerNormRowsBackwardParams(const float* gy, const float* xhat, float* ggamma, float* gbeta,
                                 int rows, int cols);
void relativeLogits(const float* q, const float* e, float* out, int n, int dk, int clip);
void relativeLogitsBackwardQ(const float* g, const float* e, float* gq, int n, int dk, int clip,
                             bool accumulate);
void relativeLogitsBackwardE(const float* g, const float* q, float* ge, int n, int dk, int clip,
                             bool accumulate);
void adamUpdate(float* p, const float* g, float* m, float* v, std::size_t count, float lr,
                float beta1, float beta2, float eps, float b1t, float b2t);
}  // namespace serial

namespace omp {
void gemmNN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
void gemmNT(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
void gemmTN(const float* a, const float* b, float* c, int n, int k, int m, bool accumulate);
int softmaxRows(const float* x, float* y, int rows, int cols, float mask_threshold);
void softmaxRowsBackward(const float* y, const float* gy, float* gx, int rows, int cols,
                         bool accumulate);
void layerNormRows(const float* x, const float* gamma, const float* beta, float* y, float* xhat,
                   float* inv_std, int rows, int cols, float eps);
void layerNormRowsBackwardX(const float* gy, const float* gamma, const float* xhat,
                            const float* inv_std, float* gx, int rows, int cols, bool accumulate);
void layerNormRowsBackwardParams(const float* gy, const float* xhat, float* ggamma, float* gbeta,
                                 int rows, int cols);
void relativeLogits(const float* q, const float* e, float* out, int n, int dk, int clip);
void relativeLogitsBackwardQ(const float* g, const float* e, float* gq, int n, int dk, int clip,
                             bool accumulate);
void relativeLogitsBackwardE(const float* g, const float* q, float* ge, int n, int dk, int clip,
                             bool accumulate);
void adamUpdate(float* p, const float* g, float* m, float* v, std::size_t count, float lr,
                float beta1, float beta2, float eps, float b1t, float b2t);
}  // namespace omp

}  // namespace stt::kernels
