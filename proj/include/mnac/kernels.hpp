#pragma once

#include <cstddef>
#include <string>

namespace mnac::kernels {

// Hot inner loops of the decoders, provided as scalar reference kernels and
// (on x86-64 with AVX2) vectorized variants picked once at startup.
//
// bernoulli_fold: in-place convolution of a weight pmf with a single
//   Bernoulli(p) term. pmf[0..len-1] -> pmf[0..len], i.e. the caller must
//   provide room for len+1 entries; entry len is written.
//
// likelihood_fold: suffix recursion used by the leave-one-out factor update:
//   h[a] <- (1-p)*h[a] + p*h[a+1] for a = 0..len-1 (h[len] read, not written).
//
// dot: plain inner product of length n.
struct Kernels {
    void (*bernoulli_fold)(double* pmf, std::size_t len, double p);
    void (*likelihood_fold)(double* h, std::size_t len, double p);
    double (*dot)(const double* a, const double* b, std::size_t n);
    const char* name;
};

const Kernels& scalar();
#if defined(__x86_64__) || defined(_M_X64)
const Kernels& avx2();
bool avx2_available();
#endif

// Active kernel set: AVX2 when the CPU supports it, unless MNAC_FORCE_SCALAR
// is set in the environment.
const Kernels& active();

}  // namespace mnac::kernels
