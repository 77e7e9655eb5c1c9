#include "mnac/kernels.hpp"

#include <cstdlib>

namespace mnac::kernels {

namespace {

void bernoulli_fold_scalar(double* pmf, std::size_t len, double p) {
    const double q = 1.0 - p;
    pmf[len] = pmf[len - 1] * p;
    for (std::size_t v = len - 1; v > 0; --v) {
        pmf[v] = pmf[v] * q + pmf[v - 1] * p;
    }
    pmf[0] *= q;
}

void likelihood_fold_scalar(double* h, std::size_t len, double p) {
    const double q = 1.0 - p;
    for (std::size_t a = 0; a < len; ++a) {
        h[a] = q * h[a] + p * h[a + 1];
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

const Kernels kScalar{bernoulli_fold_scalar, likelihood_fold_scalar, dot_scalar, "scalar"};

}  // namespace

const Kernels& scalar() { return kScalar; }

const Kernels& active() {
    static const Kernels* chosen = [] {
        if (std::getenv("MNAC_FORCE_SCALAR") != nullptr) return &kScalar;
#if defined(MNAC_HAVE_AVX2_TU)
        if (avx2_available()) return &avx2();
#endif
        return &kScalar;
    }();
    return *chosen;
}

}  // namespace mnac::kernels
