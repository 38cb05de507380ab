#pragma once

// Scalar reference kernels. Templated so the 64-bit network path used for
// gradient checking shares the exact loop structure of the 32-bit path.

#include <cstddef>

namespace globus::simd::scalar {

template <class T>
inline void axpy(T a, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class T>
inline T dot(const T* x, const T* y, std::size_t n) {
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

template <class T>
inline void relu(T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
inline void relu_backward(const T* act, T* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) grad[i] = act[i] > T(0) ? grad[i] : T(0);
}

}  // namespace globus::simd::scalar
