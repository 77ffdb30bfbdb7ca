#include "monas/gp.hpp"

#include <algorithm>
#include <cmath>

#include "monas/errors.hpp"
#include "monas/rng.hpp"

namespace monas {

namespace {
constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kMaxJitter = 1e-4;

// In-place Cholesky of a row-major n x n matrix; returns false on failure.
bool cholesky(std::vector<double>& a, int n) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k) {
                s -= a[static_cast<size_t>(i) * n + k] * a[static_cast<size_t>(j) * n + k];
            }
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                a[static_cast<size_t>(i) * n + j] = std::sqrt(s);
            } else {
                a[static_cast<size_t>(i) * n + j] = s / a[static_cast<size_t>(j) * n + j];
            }
        }
        for (int j = i + 1; j < n; ++j) a[static_cast<size_t>(i) * n + j] = 0.0;
    }
    return true;
}

void solve_lower(const std::vector<double>& l, int n, std::vector<double>& b) {
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l[static_cast<size_t>(i) * n + k] * b[k];
        b[i] = s / l[static_cast<size_t>(i) * n + i];
    }
}

void solve_upper_t(const std::vector<double>& l, int n, std::vector<double>& b) {
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= l[static_cast<size_t>(k) * n + i] * b[k];
        b[i] = s / l[static_cast<size_t>(i) * n + i];
    }
}

}  // namespace

double GpPair::kernel(const std::vector<double>& a, const std::vector<double>& b) const {
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double ls = std::exp(hyper_.log_lengthscale[i]);
        const double d = (a[i] - b[i]) / ls;
        d2 += d * d;
    }
    const double t = kSqrt5 * std::sqrt(d2);
    return std::exp(hyper_.log_signal_var) * (1.0 + t + t * t / 3.0) * std::exp(-t);
}

bool GpPair::factorize() {
    const double noise = std::exp(hyper_.log_noise_var);
    std::vector<double> base(static_cast<size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j <= i; ++j) {
            const double k = kernel(xs_[i], xs_[j]);
            base[static_cast<size_t>(i) * n_ + j] = k;
            base[static_cast<size_t>(j) * n_ + i] = k;
        }
    }
    for (double jitter = 1e-10; jitter <= kMaxJitter; jitter *= 10.0) {
        chol_ = base;
        for (int i = 0; i < n_; ++i) chol_[static_cast<size_t>(i) * n_ + i] += noise + jitter;
        if (!cholesky(chol_, n_)) continue;
        bool good = true;
        for (int obj = 0; obj < 2 && good; ++obj) {
            alpha_[obj].resize(n_);
            for (int i = 0; i < n_; ++i) alpha_[obj][i] = ys_std_[i][obj];
            solve_lower(chol_, n_, alpha_[obj]);
            solve_upper_t(chol_, n_, alpha_[obj]);
            for (double v : alpha_[obj]) {
                if (!std::isfinite(v)) good = false;
            }
        }
        if (good) return true;
    }
    return false;
}

double GpPair::log_marginal(int objective) const {
    double fit = 0.0;
    for (int i = 0; i < n_; ++i) fit += ys_std_[i][objective] * alpha_[objective][i];
    double logdet = 0.0;
    for (int i = 0; i < n_; ++i) logdet += std::log(chol_[static_cast<size_t>(i) * n_ + i]);
    return -0.5 * fit - logdet - 0.5 * n_ * kLog2Pi;
}

void GpPair::fit(const std::vector<std::vector<double>>& xs, const std::vector<std::array<double, 2>>& ys,
                 uint64_t seed, int hyper_draws) {
    require(xs.size() == ys.size() && xs.size() >= 2, "gp.data", "GP fit needs at least 2 matching observations");
    const size_t dim = xs[0].size();
    for (const auto& x : xs) require(x.size() == dim, "gp.data", "inconsistent input dimensionality");

    xs_ = xs;
    n_ = static_cast<int>(xs.size());
    for (int obj = 0; obj < 2; ++obj) {
        double mean = 0.0;
        for (const auto& y : ys) mean += y[obj];
        mean /= n_;
        double var = 0.0;
        for (const auto& y : ys) var += (y[obj] - mean) * (y[obj] - mean);
        var /= n_;
        out_mean_[obj] = mean;
        out_std_[obj] = std::max(std::sqrt(var), 1e-12);
    }
    ys_std_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        for (int obj = 0; obj < 2; ++obj) ys_std_[i][obj] = (ys[i][obj] - out_mean_[obj]) / out_std_[obj];
    }

    Rng rng(seed);
    GpHyper candidate;
    candidate.log_lengthscale.assign(dim, std::log(0.5));
    candidate.log_signal_var = 0.0;
    candidate.log_noise_var = std::log(1e-2);

    bool have_best = false;
    GpHyper best = candidate;
    double best_lml = 0.0;
    std::vector<double> best_chol;
    std::array<std::vector<double>, 2> best_alpha;

    for (int draw = 0; draw <= hyper_draws; ++draw) {
        if (draw > 0) {
            for (size_t d = 0; d < dim; ++d) {
                candidate.log_lengthscale[d] = rng.uniform01() * (std::log(3.0) - std::log(0.05)) + std::log(0.05);
            }
            candidate.log_signal_var = rng.uniform01() * (std::log(5.0) - std::log(0.05)) + std::log(0.05);
            candidate.log_noise_var = rng.uniform01() * (std::log(0.25) - std::log(1e-4)) + std::log(1e-4);
        }
        hyper_ = candidate;
        if (!factorize()) continue;
        const double lml = log_marginal(0) + log_marginal(1);
        if (!std::isfinite(lml)) continue;
        if (!have_best || lml > best_lml) {
            have_best = true;
            best_lml = lml;
            best = hyper_;
            best_chol = chol_;
            best_alpha = alpha_;
        }
    }

    ok_ = have_best;
    if (have_best) {
        hyper_ = best;
        chol_ = std::move(best_chol);
        alpha_ = std::move(best_alpha);
    }
}

void GpPair::fit_fixed(const std::vector<std::vector<double>>& xs, const std::vector<std::array<double, 2>>& ys,
                       const GpHyper& hyper) {
    require(xs.size() == ys.size() && xs.size() >= 2, "gp.data", "GP fit needs at least 2 matching observations");
    require(hyper.log_lengthscale.size() == xs[0].size(), "gp.data", "lengthscale count must match input dimension");
    xs_ = xs;
    n_ = static_cast<int>(xs.size());
    out_mean_ = {0.0, 0.0};
    out_std_ = {1.0, 1.0};
    ys_std_.resize(n_);
    for (int i = 0; i < n_; ++i) ys_std_[i] = ys[i];
    hyper_ = hyper;
    ok_ = factorize();
}

void GpPair::predict(const std::vector<double>& x, std::array<double, 2>& mean, std::array<double, 2>& var) const {
    require(ok_, "gp.unfitted", "GP prediction requested from an unfitted or failed model");
    std::vector<double> kstar(n_);
    for (int i = 0; i < n_; ++i) kstar[i] = kernel(x, xs_[i]);
    for (int obj = 0; obj < 2; ++obj) {
        double m = 0.0;
        for (int i = 0; i < n_; ++i) m += kstar[i] * alpha_[obj][i];
        mean[obj] = m * out_std_[obj] + out_mean_[obj];
    }
    std::vector<double> v = kstar;
    solve_lower(chol_, n_, v);
    double vv = 0.0;
    for (double e : v) vv += e * e;
    const double latent = std::max(kernel(x, x) - vv, 0.0);
    for (int obj = 0; obj < 2; ++obj) var[obj] = latent * out_std_[obj] * out_std_[obj];
}

}  // namespace monas
