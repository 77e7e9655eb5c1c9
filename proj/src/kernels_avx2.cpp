#include "mnac/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

namespace mnac::kernels {

namespace {

void bernoulli_fold_avx2(double* pmf, std::size_t len, double p) {
    const double q = 1.0 - p;
    const __m256d vq = _mm256_set1_pd(q);
    const __m256d vp = _mm256_set1_pd(p);
    pmf[len] = pmf[len - 1] * p;
    // Descending blocks: reads at v and v-1 stay ahead of the stores.
    std::size_t v = len - 1;
    while (v >= 4) {
        __m256d x = _mm256_loadu_pd(pmf + v - 3);
        __m256d xm1 = _mm256_loadu_pd(pmf + v - 4);
        _mm256_storeu_pd(pmf + v - 3, _mm256_fmadd_pd(vq, x, _mm256_mul_pd(vp, xm1)));
        v -= 4;
    }
    for (; v > 0; --v) pmf[v] = pmf[v] * q + pmf[v - 1] * p;
    pmf[0] *= q;
}

void likelihood_fold_avx2(double* h, std::size_t len, double p) {
    const double q = 1.0 - p;
    const __m256d vq = _mm256_set1_pd(q);
    const __m256d vp = _mm256_set1_pd(p);
    std::size_t a = 0;
    for (; a + 4 <= len; a += 4) {
        __m256d x = _mm256_loadu_pd(h + a);
        __m256d xp1 = _mm256_loadu_pd(h + a + 1);
        _mm256_storeu_pd(h + a, _mm256_fmadd_pd(vq, x, _mm256_mul_pd(vp, xp1)));
    }
    for (; a < len; ++a) h[a] = q * h[a] + p * h[a + 1];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

const Kernels kAvx2{bernoulli_fold_avx2, likelihood_fold_avx2, dot_avx2, "avx2"};

}  // namespace

const Kernels& avx2() { return kAvx2; }

bool avx2_available() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }

}  // namespace mnac::kernels

#endif
