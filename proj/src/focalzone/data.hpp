#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "focalzone/common.hpp"

namespace focalzone {

struct Sample {
    std::vector<double> features;
    int label = 0;  // dense class index in [0, num_classes)
};

struct Dataset {
    std::vector<Sample> samples;
    int K = 0;
    int num_classes = 0;
    // Original label value for each dense index, ascending. Identity for
    // synthetic data; arbitrary integers when loaded from CSV.
    std::vector<long long> label_values;

    int I() const { return static_cast<int>(samples.size()); }
};

// Synthetic sensor rows with a planted class-dependent autoregressive band:
// dims [band_start, band_end) of a class-c sample follow
//   x_j = sum_m coeffs[c][m] * x_{j-m} + eps,   eps ~ N(0, noise_std^2),
// started from x_{band_start} = 1 + eps (exact unit impulse when noise_std=0,
// so noiseless coeffs=(0.5) yields 1, 0.5, 0.25, ...). Dims outside the band
// are independent N(0,1).
struct SyntheticSpec {
    int K = 16;
    int num_classes = 3;
    int samples_per_class = 200;
    int band_start = 0;
    int band_end = 0;  // half-open
    int ar_order = 1;
    std::vector<std::vector<double>> coeffs;  // per class, length ar_order
    double noise_std = 0.1;
};

// Throws ValidationError when invariants fail (band bounds, band width
// >= ar_order + 2, distinct per-class coefficients, stationarity).
void validate_spec(const SyntheticSpec& spec);

// True iff the AR companion matrix has spectral radius < 1.
bool ar_stationary(const std::vector<double>& coeffs);

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// CSV schema: K feature columns then one integer label column; optional
// header auto-detected by a non-numeric first row; '.' decimal, ',' delimiter.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& d, const std::string& path);

// Seeded stratified split into (train, test) of sizes round(I*f) / rest.
// Every class appears on both sides; sample order within each side follows
// the input dataset order.
std::pair<Dataset, Dataset> split(const Dataset& d, double train_fraction, std::uint64_t seed);

void validate_dataset(const Dataset& d);

}  // namespace focalzone
