#pragma once

#include <cmath>

#include "monas/errors.hpp"
#include "monas/model.hpp"

namespace monas {

struct AdamParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with one deviation from the textbook update: entries whose gradient
// is exactly zero are skipped entirely (no moment decay, no step). Masked
// heads and units receive exact zeros from the backward pass, so their
// weights stay untouched across steps instead of drifting on stale momentum.
struct Adam {
    AdamParams hp;
    SuperNetwork m, v;
    long long step = 0;

    explicit Adam(const SuperNetwork& net, AdamParams params = {})
        : hp(params), m(zeros_like(net)), v(zeros_like(net)) {}

    void update(SuperNetwork& params, const SuperNetwork& grads) {
        ++step;
        const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step));
        auto tp = tensor_list(params);
        auto tg = tensor_list(grads);
        auto tm = tensor_list(m);
        auto tv = tensor_list(v);
        require(tp.size() == tg.size() && tp.size() == tm.size(), "adam.shape",
                "parameter and gradient networks differ in structure");
        for (size_t t = 0; t < tp.size(); ++t) {
            Vector& p = *tp[t];
            const Vector& g = *tg[t];
            Vector& mt = *tm[t];
            Vector& vt = *tv[t];
            require(p.size() == g.size(), "adam.shape", "tensor size mismatch");
            for (size_t i = 0; i < p.size(); ++i) {
                const double gi = g[i];
                if (gi == 0.0) continue;
                mt[i] = hp.beta1 * mt[i] + (1.0 - hp.beta1) * gi;
                vt[i] = hp.beta2 * vt[i] + (1.0 - hp.beta2) * gi * gi;
                const double mhat = mt[i] / bc1;
                const double vhat = vt[i] / bc2;
                p[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
            }
        }
    }
};

}  // namespace monas
