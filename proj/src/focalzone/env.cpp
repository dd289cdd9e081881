#include "focalzone/env.hpp"

#include <algorithm>
#include <string>

namespace focalzone::env {

void validate_params(const EnvParams& p) {
    if (p.K_prime < 2) throw ValidationError("env: K' must be at least 2");
    if (p.L_min < 2) throw ValidationError("env: L_min must be at least 2");
    if (p.L_min > p.K_prime) throw ValidationError("env: L_min cannot exceed K'");
    if (p.shift_step < 1 || p.resize_step < 1) throw ValidationError("env: step sizes must be >= 1");
}

void validate_state(const FocalState& s, const EnvParams& p) {
    if (!(0 <= s.start_idx && s.start_idx < s.end_idx && s.end_idx <= p.K_prime))
        throw ValidationError("env: window [" + std::to_string(s.start_idx) + ", " +
                              std::to_string(s.end_idx) + ") outside [0, " + std::to_string(p.K_prime) + "]");
    if (s.length() < p.L_min)
        throw ValidationError("env: window shorter than L_min=" + std::to_string(p.L_min));
}

FocalState initial_state(int K_prime, int len0, int L_min) {
    if (len0 < L_min || len0 > K_prime)
        throw ValidationError("env: initial window length " + std::to_string(len0) +
                              " outside [L_min=" + std::to_string(L_min) + ", K'=" + std::to_string(K_prime) + "]");
    const int start = (K_prime - len0) / 2;
    return {start, start + len0};
}

FocalState step(const FocalState& s, Action a, const EnvParams& p) {
    validate_params(p);
    validate_state(s, p);
    const int len = s.length();
    FocalState n = s;
    switch (a) {
        case Action::LeftShift:
            n.start_idx -= p.shift_step;
            n.end_idx -= p.shift_step;
            if (n.start_idx < 0) n = {0, len};
            break;
        case Action::RightShift:
            n.start_idx += p.shift_step;
            n.end_idx += p.shift_step;
            if (n.end_idx > p.K_prime) n = {p.K_prime - len, p.K_prime};
            break;
        case Action::Extend:
            n.start_idx = std::max(0, n.start_idx - p.resize_step);
            n.end_idx = std::min(p.K_prime, n.end_idx + p.resize_step);
            break;
        case Action::Condense:
            n.start_idx += p.resize_step;
            n.end_idx -= p.resize_step;
            if (n.length() < p.L_min) {
                const int mid = (s.start_idx + s.end_idx) / 2;
                n.start_idx = mid - p.L_min / 2;
                n.end_idx = n.start_idx + p.L_min;
                if (n.start_idx < 0) n = {0, p.L_min};
                if (n.end_idx > p.K_prime) n = {p.K_prime - p.L_min, p.K_prime};
            }
            break;
    }
    validate_state(n, p);
    return n;
}

}  // namespace focalzone::env
