#pragma once

#include "focalzone/common.hpp"

namespace focalzone::env {

// Half-open window [start_idx, end_idx) on the expanded feature vector.
struct FocalState {
    int start_idx = 0;
    int end_idx = 0;

    int length() const { return end_idx - start_idx; }
    bool operator==(const FocalState&) const = default;
};

// Stable integer encoding 0..3, in this order.
enum class Action { LeftShift = 0, RightShift = 1, Extend = 2, Condense = 3 };
inline constexpr int kNumActions = 4;

struct EnvParams {
    int K_prime = 0;
    int L_min = 10;
    int shift_step = 4;   // delta_s
    int resize_step = 4;  // delta_r
};

void validate_params(const EnvParams& p);
void validate_state(const FocalState& s, const EnvParams& p);

// Centered initial window: start = floor((K' - len0)/2), end = start + len0.
FocalState initial_state(int K_prime, int len0, int L_min = 2);

// Total transition: shifts saturate at the boundaries without changing the
// window length; Extend truncates independently per side; a Condense that
// would drop below L_min yields the L_min window centered at the pre-action
// midpoint, pushed inward at the boundaries.
FocalState step(const FocalState& s, Action a, const EnvParams& p);

}  // namespace focalzone::env
