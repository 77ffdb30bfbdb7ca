#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace monas {

struct GpHyper {
    std::vector<double> log_lengthscale;  // one per input dimension
    double log_signal_var = 0.0;
    double log_noise_var = -4.6051701859880914;  // ln(1e-2)
};

// Gaussian process regression with a Matern-5/2 ARD kernel over unit-cube
// inputs, modeling both objectives with one shared set of kernel
// hyperparameters and independent posterior solves per objective. Outputs
// are standardized internally; predictions come back in raw units.
class GpPair {
  public:
    // Hyperparameters picked by seeded random search maximizing the summed
    // log marginal likelihood of the two objectives.
    void fit(const std::vector<std::vector<double>>& xs, const std::vector<std::array<double, 2>>& ys, uint64_t seed,
             int hyper_draws = 40);

    void fit_fixed(const std::vector<std::vector<double>>& xs, const std::vector<std::array<double, 2>>& ys,
                   const GpHyper& hyper);

    // False when the kernel matrix stayed ill-conditioned at the maximum
    // jitter (1e-4); callers should fall back to a non-model proposal.
    bool ok() const { return ok_; }

    // Posterior mean/variance of each objective at x (raw output units,
    // latent function, noise-free). Variance is clamped at 0.
    void predict(const std::vector<double>& x, std::array<double, 2>& mean, std::array<double, 2>& var) const;

    const GpHyper& hyper() const { return hyper_; }
    double out_mean(int objective) const { return out_mean_[objective]; }
    double out_std(int objective) const { return out_std_[objective]; }

  private:
    bool factorize();
    double log_marginal(int objective) const;
    double kernel(const std::vector<double>& a, const std::vector<double>& b) const;

    std::vector<std::vector<double>> xs_;
    std::vector<std::array<double, 2>> ys_std_;
    std::array<double, 2> out_mean_{0.0, 0.0};
    std::array<double, 2> out_std_{1.0, 1.0};
    GpHyper hyper_;
    std::vector<double> chol_;                    // lower triangular, row-major n x n
    std::array<std::vector<double>, 2> alpha_;    // K^-1 y per objective
    int n_ = 0;
    bool ok_ = false;
};

}  // namespace monas
