#include "support/synthetic.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace testfx {

Blobs gaussian_blobs(std::size_t per_class, double separation, std::size_t noise, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    Blobs b;
    b.x = ctphish::classifiers::Matrix(2 * per_class, 2 + noise);
    // Each center sits separation/2 from the origin along (1,1)/sqrt(2).
    const double offset = separation / (2.0 * std::sqrt(2.0));
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        int label = static_cast<int>(i % 2);
        double c = label ? offset : -offset;
        b.x.at(i, 0) = c + n01(rng);
        b.x.at(i, 1) = c + n01(rng);
        for (std::size_t k = 0; k < noise; ++k) b.x.at(i, 2 + k) = n01(rng);
        b.y.push_back(label);
    }
    return b;
}

double accuracy(const ctphish::classifiers::RandomForest& f, const Blobs& b) {
    std::size_t right = 0;
    for (std::size_t i = 0; i < b.x.rows; ++i) right += (f.score(b.x.row(i)) >= 0.5 ? 1 : 0) == b.y[i];
    return static_cast<double>(right) / static_cast<double>(b.x.rows);
}

double one_nn_accuracy(const Blobs& train, const Blobs& test) {
    std::size_t right = 0;
    for (std::size_t i = 0; i < test.x.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int label = 0;
        for (std::size_t j = 0; j < train.x.rows; ++j) {
            double d = 0;
            for (std::size_t k = 0; k < test.x.cols; ++k) {
                double diff = test.x.at(i, k) - train.x.at(j, k);
                d += diff * diff;
            }
            if (d < best) {
                best = d;
                label = train.y[j];
            }
        }
        right += label == test.y[i];
    }
    return static_cast<double>(right) / static_cast<double>(test.x.rows);
}

}  // namespace testfx
