// Times the surrogate-reward engine in serial vs OpenMP-parallel mode over a
// sweep of windows and verifies the two modes agree bitwise.
#include <chrono>
#include <cstdio>
#include <vector>

#include "CLI11.hpp"

#include "focalzone/reward.hpp"

using namespace focalzone;

namespace {

double run_sweep(const RewardEngine& engine, const std::vector<env::FocalState>& states,
                 std::vector<double>& rewards) {
    rewards.clear();
    const auto t0 = std::chrono::steady_clock::now();
    for (const env::FocalState& s : states) rewards.push_back(engine.evaluate(s).reward);
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs parallel surrogate-reward benchmark"};
    int K = 16, K_prime = 64, samples_per_class = 200, subsample = 128, evals = 500;
    app.add_option("--K", K, "source dimensions")->default_val(16);
    app.add_option("--K-prime", K_prime, "expanded dimensions")->default_val(64);
    app.add_option("--samples-per-class", samples_per_class, "per class")->default_val(200);
    app.add_option("--subsample", subsample, "per-evaluation sample cap")->default_val(128);
    app.add_option("--evals", evals, "reward evaluations per mode")->default_val(500);
    CLI11_PARSE(app, argc, argv);

    try {
        SyntheticSpec spec;
        spec.K = K;
        spec.num_classes = 3;
        spec.samples_per_class = samples_per_class;
        spec.band_start = 2;
        spec.band_end = K / 2;
        spec.ar_order = 1;
        spec.coeffs = {{0.9}, {-0.9}, {0.5}};
        spec.noise_std = 0.1;
        const Dataset d = generate_synthetic(spec, 7);
        const RSMap map = make_rs_map(K, K_prime, 7);
        const std::vector<ExpandedSample> expanded = apply_rs_all(d.samples, map);

        RewardConfig cfg;
        cfg.p = 3;
        cfg.beta = 0.1;
        cfg.K_prime = K_prime;
        cfg.subsample = subsample;
        cfg.seed = 7;

        // Deterministic sweep over lengths and positions.
        std::vector<env::FocalState> states;
        Rng rng(11);
        const int L_min = 2 * cfg.p + 2 + 2;
        for (int i = 0; i < evals; ++i) {
            const int len = L_min + static_cast<int>(rng.uniform_int(K_prime - L_min + 1));
            const int start = static_cast<int>(rng.uniform_int(K_prime - len + 1));
            states.push_back({start, start + len});
        }

        const RewardEngine serial(expanded, cfg, ExecMode::Serial);
        const RewardEngine parallel(expanded, cfg, ExecMode::Parallel);
        std::vector<double> rs, rp;
        const double warm_s = run_sweep(serial, states, rs);
        const double warm_p = run_sweep(parallel, states, rp);
        (void)warm_s;
        (void)warm_p;
        const double t_serial = run_sweep(serial, states, rs);
        const double t_parallel = run_sweep(parallel, states, rp);

        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (rs[i] != rp[i]) {
                std::fprintf(stderr, "mismatch at state %zu: serial %.17g vs parallel %.17g\n", i, rs[i],
                             rp[i]);
                return 1;
            }
        }

        std::printf("%d evaluations, %d samples/eval, K'=%d, AR order %d\n", evals,
                    static_cast<int>(serial.subsample_indices().size()), K_prime, cfg.p);
        std::printf("  serial:   %8.2f ms total, %7.1f us/eval\n", t_serial, 1000.0 * t_serial / evals);
        std::printf("  parallel: %8.2f ms total, %7.1f us/eval\n", t_parallel,
                    1000.0 * t_parallel / evals);
        std::printf("  speedup: %.2fx, results bitwise identical\n", t_serial / t_parallel);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
