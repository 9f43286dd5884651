#pragma once

// Small seeded generators for property tests.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace testgen {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    bool coin(double p = 0.5) { return uniform() < p; }

    // Nonnegative weights summing to one; each entry is zeroed with
    // probability `sparsity` (at least one stays positive).
    std::vector<double> simplex(std::size_t n, double sparsity = 0.0) {
        std::vector<double> w(n);
        double sum = 0.0;
        for (auto& x : w) {
            x = coin(sparsity) ? 0.0 : -std::log(uniform(1e-12, 1.0));
            sum += x;
        }
        if (sum == 0.0) {
            w[static_cast<std::size_t>(integer(0, static_cast<int>(n) - 1))] = 1.0;
            sum = 1.0;
        }
        for (auto& x : w) x /= sum;
        return w;
    }

    Eigen::VectorXd gaussian_vector(Eigen::Index d, double sd = 1.0) {
        Eigen::VectorXd v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(0.0, sd);
        return v;
    }

    Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(0.0, sd);
        return m;
    }

    // Printable text with occasional quotes, commas, backslashes, newlines
    // and multi-byte UTF-8.
    std::string text(int max_len = 40) {
        static const std::vector<std::string> alphabet = {"a", "b", "z", "Q", "0", "9", " ", ",", "\"", "\\",
                                                          "\n", "\t", "{", "}", "é", "€", "/", ":", "'", "-"};
        std::string s;
        const int n = integer(0, max_len);
        for (int i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(integer(0, static_cast<int>(alphabet.size()) - 1))];
        return s;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

}  // namespace testgen
