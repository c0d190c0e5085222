#pragma once

#include <tnfp/tensor_core.hpp>

namespace fx {

using namespace tnfp;

inline MpvTensor ghz() {
    MpvTensor A(2, 2);
    A[0](0, 0) = 1;
    A[1](1, 1) = 1;
    return A;
}

inline MpvTensor zcl_not_rfp() {
    MpvTensor A(2, 2);
    A[0](0, 0) = 1;
    A[0](1, 1) = 1 / std::sqrt(2.0);
    A[1](1, 1) = 1 / std::sqrt(2.0);
    return A;
}

// Pauli-based AKLT matrices.
inline MpvTensor aklt() {
    MpvTensor A(3, 2);
    A[0] << 0, 1, 1, 0;
    A[1] << 0, cd(0, -1), cd(0, 1), 0;
    A[2] << 1, 0, 0, -1;
    return A;
}

inline MpvTensor random_tensor(int d, int D, std::mt19937_64& rng) {
    MpvTensor A;
    for (int i = 0; i < d; ++i) A.A.push_back(la::random_gaussian(D, D, rng));
    return A;
}

} // namespace fx
