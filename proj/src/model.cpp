#include "monas/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "monas/errors.hpp"

namespace monas {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

// out = a * b
void mm(const Matrix& a, const Matrix& b, Matrix& out) {
    out.zero();
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

// out += a * b
void mm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

// out = a * b^T
void mm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            orow[j] = s;
        }
    }
}

// out += a^T * b
void mm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    for (int k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (int i = 0; i < a.cols; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.row(i);
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

void softmax_rows(Matrix& m) {
    for (int i = 0; i < m.rows; ++i) {
        double* row = m.row(i);
        double mx = row[0];
        for (int j = 1; j < m.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < m.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < m.cols; ++j) row[j] *= inv;
    }
}

void softmax_vec(const double* in, double* out, int n) {
    double mx = in[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, in[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
        out[j] = std::exp(in[j] - mx);
        sum += out[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < n; ++j) out[j] *= inv;
}

void layernorm_forward(const Matrix& x, const LayerNormParams& ln, Matrix& y, Matrix& xhat, Vector& rstd) {
    const int d = x.cols;
    const double invd = 1.0 / d;
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += xi[j];
        mean *= invd;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xi[j] - mean;
            var += c * c;
        }
        var *= invd;
        const double r = 1.0 / std::sqrt(var + kLnEps);
        rstd[i] = r;
        double* hi = xhat.row(i);
        double* yi = y.row(i);
        for (int j = 0; j < d; ++j) {
            hi[j] = (xi[j] - mean) * r;
            yi[j] = ln.gamma[j] * hi[j] + ln.beta[j];
        }
    }
}

// dx from dy; accumulates parameter grads.
void layernorm_backward(const Matrix& dy, const Matrix& xhat, const Vector& rstd, const LayerNormParams& ln,
                        Matrix& dx, Vector& dgamma, Vector& dbeta) {
    const int d = dy.cols;
    const double invd = 1.0 / d;
    std::vector<double> dxhat(d);
    for (int i = 0; i < dy.rows; ++i) {
        const double* dyi = dy.row(i);
        const double* hi = xhat.row(i);
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dh = dyi[j] * ln.gamma[j];
            dxhat[j] = dh;
            m1 += dh;
            m2 += dh * hi[j];
            dgamma[j] += dyi[j] * hi[j];
            dbeta[j] += dyi[j];
        }
        m1 *= invd;
        m2 *= invd;
        double* dxi = dx.row(i);
        for (int j = 0; j < d; ++j) dxi[j] = rstd[i] * (dxhat[j] - m1 - hi[j] * m2);
    }
}

struct HeadCache {
    Matrix q, k, v;  // n x d_head
    Matrix p;        // n x n, post-softmax
    Matrix o;        // n x d_head
};

struct LayerCache {
    Matrix x_in;                   // n x d
    std::vector<HeadCache> heads;  // slot per head, only active ones filled
    Matrix sum1, xhat1, x1;
    Vector rstd1;
    Matrix z, hg;                  // n x units, only active columns valid
    Matrix sum2, xhat2, x2;
    Vector rstd2;
};

struct ExampleWorkspace {
    std::vector<LayerCache> layers;
    Matrix x;        // current activations, n x d
    Vector pooled;   // d
    Vector logits;   // classes

    ExampleWorkspace(const SuperNetwork& net) {
        const int n = net.dims.seq_len;
        const int d = net.dims.d_model;
        layers.resize(net.layers.size());
        for (size_t l = 0; l < net.layers.size(); ++l) {
            LayerCache& c = layers[l];
            const int dh = net.dims.d_head;
            const int units = net.layers[l].ffn.units();
            c.x_in = Matrix(n, d);
            c.heads.resize(net.layers[l].heads.size());
            for (auto& hc : c.heads) {
                hc.q = Matrix(n, dh);
                hc.k = Matrix(n, dh);
                hc.v = Matrix(n, dh);
                hc.p = Matrix(n, n);
                hc.o = Matrix(n, dh);
            }
            c.sum1 = Matrix(n, d);
            c.xhat1 = Matrix(n, d);
            c.x1 = Matrix(n, d);
            c.rstd1.assign(n, 0.0);
            c.z = Matrix(n, units);
            c.hg = Matrix(n, units);
            c.sum2 = Matrix(n, d);
            c.xhat2 = Matrix(n, d);
            c.x2 = Matrix(n, d);
            c.rstd2.assign(n, 0.0);
        }
        x = Matrix(n, d);
        pooled.assign(d, 0.0);
        logits.assign(net.dims.classes, 0.0);
    }
};

// Forward for one example; fills the workspace caches.
void forward_example(const SuperNetwork& net, const MaskPair& mask, const int* tokens, ExampleWorkspace& ws) {
    const int n = net.dims.seq_len;
    const int d = net.dims.d_model;
    const double scale = 1.0 / std::sqrt(static_cast<double>(net.dims.d_head));

    for (int t = 0; t < n; ++t) {
        const double* te = net.tok_emb.row(tokens[t]);
        const double* pe = net.pos_emb.row(t);
        double* xt = ws.x.row(t);
        for (int j = 0; j < d; ++j) xt[j] = te[j] + pe[j];
    }

    for (size_t l = 0; l < net.layers.size(); ++l) {
        const EncoderLayer& layer = net.layers[l];
        LayerCache& c = ws.layers[l];
        c.x_in = ws.x;

        // attention: sum of active head outputs
        c.sum1 = c.x_in;  // start the residual
        for (size_t h = 0; h < layer.heads.size(); ++h) {
            if (!mask.head[l][h]) continue;
            const HeadWeights& hw = layer.heads[h];
            HeadCache& hc = c.heads[h];
            mm(c.x_in, hw.wq, hc.q);
            mm(c.x_in, hw.wk, hc.k);
            mm(c.x_in, hw.wv, hc.v);
            mm_nt(hc.q, hc.k, hc.p);
            for (double& s : hc.p.data) s *= scale;
            softmax_rows(hc.p);
            mm(hc.p, hc.v, hc.o);
            mm_acc(hc.o, hw.wo, c.sum1);
        }
        layernorm_forward(c.sum1, layer.ln1, c.x1, c.xhat1, c.rstd1);

        // FFN with masked intermediate units skipped entirely
        c.sum2 = c.x1;
        const int units = layer.ffn.units();
        for (int u = 0; u < units; ++u) {
            if (!mask.unit[l][u]) continue;
            const double bu = layer.ffn.b_in[u];
            for (int t = 0; t < n; ++t) {
                const double* x1t = c.x1.row(t);
                double z = bu;
                for (int j = 0; j < d; ++j) z += x1t[j] * layer.ffn.w_in(j, u);
                c.z(t, u) = z;
                const double g = gelu(z);
                c.hg(t, u) = g;
                const double* wo = layer.ffn.w_out.row(u);
                double* st = c.sum2.row(t);
                for (int j = 0; j < d; ++j) st[j] += g * wo[j];
            }
        }
        layernorm_forward(c.sum2, layer.ln2, c.x2, c.xhat2, c.rstd2);
        ws.x = c.x2;
    }

    const double invn = 1.0 / n;
    std::fill(ws.pooled.begin(), ws.pooled.end(), 0.0);
    for (int t = 0; t < n; ++t) {
        const double* xt = ws.x.row(t);
        for (int j = 0; j < d; ++j) ws.pooled[j] += xt[j];
    }
    for (int j = 0; j < d; ++j) ws.pooled[j] *= invn;

    for (int cidx = 0; cidx < net.dims.classes; ++cidx) {
        double s = net.b_cls[cidx];
        for (int j = 0; j < d; ++j) s += ws.pooled[j] * net.w_cls(j, cidx);
        ws.logits[cidx] = s;
    }
}

// Backward for one example given dlogits; accumulates into `g`.
void backward_example(const SuperNetwork& net, const MaskPair& mask, const int* tokens,
                      const ExampleWorkspace& ws, const Vector& dlogits, SuperNetwork& g) {
    const int n = net.dims.seq_len;
    const int d = net.dims.d_model;
    const int classes = net.dims.classes;
    const double scale = 1.0 / std::sqrt(static_cast<double>(net.dims.d_head));

    Vector dpooled(d, 0.0);
    for (int j = 0; j < d; ++j) {
        double s = 0.0;
        for (int c = 0; c < classes; ++c) {
            g.w_cls(j, c) += ws.pooled[j] * dlogits[c];
            s += net.w_cls(j, c) * dlogits[c];
        }
        dpooled[j] = s;
    }
    for (int c = 0; c < classes; ++c) g.b_cls[c] += dlogits[c];

    Matrix dx(n, d);
    const double invn = 1.0 / n;
    for (int t = 0; t < n; ++t) {
        double* dxt = dx.row(t);
        for (int j = 0; j < d; ++j) dxt[j] = dpooled[j] * invn;
    }

    Matrix dsum(n, d), dmid(n, d), dtmp(n, d);
    for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
        const EncoderLayer& layer = net.layers[l];
        const LayerCache& c = ws.layers[l];
        EncoderLayer& gl = g.layers[l];

        layernorm_backward(dx, c.xhat2, c.rstd2, layer.ln2, dsum, gl.ln2.gamma, gl.ln2.beta);

        // dsum feeds both the residual (dx1) and the FFN output
        dmid = dsum;  // becomes dx1
        const int units = layer.ffn.units();
        for (int u = 0; u < units; ++u) {
            if (!mask.unit[l][u]) continue;
            const double* wo = layer.ffn.w_out.row(u);
            double* gwo = gl.ffn.w_out.row(u);
            double gb = 0.0;
            for (int t = 0; t < n; ++t) {
                const double* dst = dsum.row(t);
                double dhg = 0.0;
                for (int j = 0; j < d; ++j) {
                    dhg += dst[j] * wo[j];
                    gwo[j] += c.hg(t, u) * dst[j];
                }
                const double dz = dhg * gelu_grad(c.z(t, u));
                gb += dz;
                const double* x1t = c.x1.row(t);
                double* dmt = dmid.row(t);
                for (int j = 0; j < d; ++j) {
                    gl.ffn.w_in(j, u) += x1t[j] * dz;
                    dmt[j] += dz * layer.ffn.w_in(j, u);
                }
            }
            gl.ffn.b_in[u] += gb;
        }

        layernorm_backward(dmid, c.xhat1, c.rstd1, layer.ln1, dsum, gl.ln1.gamma, gl.ln1.beta);

        // dsum feeds the residual (dx_in) and every active head
        dx = dsum;
        const int dh = net.dims.d_head;
        Matrix do_(n, dh), dp(n, n), ds(n, n), dq(n, dh), dk(n, dh), dv(n, dh);
        for (size_t h = 0; h < layer.heads.size(); ++h) {
            if (!mask.head[l][h]) continue;
            const HeadWeights& hw = layer.heads[h];
            const HeadCache& hc = c.heads[h];
            HeadWeights& gh = g.layers[l].heads[h];

            // out = o * wo
            mm_tn_acc(hc.o, dsum, gh.wo);
            mm_nt(dsum, hw.wo, do_);

            // o = p * v
            mm_nt(do_, hc.v, dp);
            dv.zero();
            mm_tn_acc(hc.p, do_, dv);

            // softmax rows
            for (int i = 0; i < n; ++i) {
                const double* pi = hc.p.row(i);
                const double* dpi = dp.row(i);
                double dot = 0.0;
                for (int j = 0; j < n; ++j) dot += pi[j] * dpi[j];
                double* dsi = ds.row(i);
                for (int j = 0; j < n; ++j) dsi[j] = pi[j] * (dpi[j] - dot);
            }
            for (double& v2 : ds.data) v2 *= scale;

            // s = q * k^T (pre-scale)
            mm(ds, hc.k, dq);
            dk.zero();
            mm_tn_acc(ds, hc.q, dk);

            mm_tn_acc(c.x_in, dq, gh.wq);
            mm_tn_acc(c.x_in, dk, gh.wk);
            mm_tn_acc(c.x_in, dv, gh.wv);

            mm_nt(dq, hw.wq, dtmp);
            for (size_t i = 0; i < dx.size(); ++i) dx.data[i] += dtmp.data[i];
            mm_nt(dk, hw.wk, dtmp);
            for (size_t i = 0; i < dx.size(); ++i) dx.data[i] += dtmp.data[i];
            mm_nt(dv, hw.wv, dtmp);
            for (size_t i = 0; i < dx.size(); ++i) dx.data[i] += dtmp.data[i];
        }
    }

    for (int t = 0; t < n; ++t) {
        const double* dxt = dx.row(t);
        double* gte = g.tok_emb.row(tokens[t]);
        double* gpe = g.pos_emb.row(t);
        for (int j = 0; j < d; ++j) {
            gte[j] += dxt[j];
            gpe[j] += dxt[j];
        }
    }
}

void check_batch(const SuperNetwork& net, const Batch& batch) {
    require(batch.seq_len == net.dims.seq_len, "model.batch_shape", "batch seq_len does not match the network");
    require(batch.size() > 0, "model.batch_shape", "empty batch");
    require(batch.tokens.size() == static_cast<size_t>(batch.size()) * batch.seq_len, "model.batch_shape",
            "token buffer size does not match batch size * seq_len");
    for (int tok : batch.tokens) {
        require(tok >= 0 && tok < net.dims.vocab, "model.token_range", "token id out of vocabulary range");
    }
    for (int lab : batch.labels) {
        require(lab >= 0 && lab < net.dims.classes, "model.label_range", "label out of class range");
    }
}

}  // namespace

void ModelDims::validate() const {
    require(layers > 0 && heads > 0 && ffn_units > 0, "model.dims", "layers, heads and ffn_units must be positive");
    require(d_model > 0 && d_head > 0, "model.dims", "d_model and d_head must be positive");
    require(heads * d_head == d_model, "model.dims", "heads * d_head must equal d_model");
    require(vocab > 0 && seq_len > 0 && classes >= 2, "model.dims", "vocab, seq_len must be positive and classes >= 2");
}

int MaskPair::active_heads(int layer) const {
    int k = 0;
    for (uint8_t b : head[layer]) k += b ? 1 : 0;
    return k;
}

int MaskPair::active_units(int layer) const {
    int k = 0;
    for (uint8_t b : unit[layer]) k += b ? 1 : 0;
    return k;
}

SuperNetwork make_network(const ModelDims& dims) {
    dims.validate();
    SuperNetwork net;
    net.dims = dims;
    net.tok_emb = Matrix(dims.vocab, dims.d_model);
    net.pos_emb = Matrix(dims.seq_len, dims.d_model);
    net.layers.resize(dims.layers);
    for (auto& layer : net.layers) {
        layer.heads.resize(dims.heads);
        for (auto& h : layer.heads) {
            h.wq = Matrix(dims.d_model, dims.d_head);
            h.wk = Matrix(dims.d_model, dims.d_head);
            h.wv = Matrix(dims.d_model, dims.d_head);
            h.wo = Matrix(dims.d_head, dims.d_model);
        }
        layer.ffn.w_in = Matrix(dims.d_model, dims.ffn_units);
        layer.ffn.b_in.assign(dims.ffn_units, 0.0);
        layer.ffn.w_out = Matrix(dims.ffn_units, dims.d_model);
        layer.ln1.gamma.assign(dims.d_model, 1.0);
        layer.ln1.beta.assign(dims.d_model, 0.0);
        layer.ln2.gamma.assign(dims.d_model, 1.0);
        layer.ln2.beta.assign(dims.d_model, 0.0);
    }
    net.w_cls = Matrix(dims.d_model, dims.classes);
    net.b_cls.assign(dims.classes, 0.0);
    return net;
}

SuperNetwork zeros_like(const SuperNetwork& net) {
    SuperNetwork out = net;
    zero_all(out);
    return out;
}

void random_init(SuperNetwork& net, Rng& rng) {
    auto fill_xavier = [&](Matrix& m) {
        const double std = std::sqrt(2.0 / (m.rows + m.cols));
        for (double& v : m.data) v = rng.normal(0.0, std);
    };
    for (double& v : net.tok_emb.data) v = rng.normal(0.0, 0.1);
    for (double& v : net.pos_emb.data) v = rng.normal(0.0, 0.1);
    for (auto& layer : net.layers) {
        for (auto& h : layer.heads) {
            fill_xavier(h.wq);
            fill_xavier(h.wk);
            fill_xavier(h.wv);
            fill_xavier(h.wo);
        }
        fill_xavier(layer.ffn.w_in);
        std::fill(layer.ffn.b_in.begin(), layer.ffn.b_in.end(), 0.0);
        fill_xavier(layer.ffn.w_out);
        std::fill(layer.ln1.gamma.begin(), layer.ln1.gamma.end(), 1.0);
        std::fill(layer.ln1.beta.begin(), layer.ln1.beta.end(), 0.0);
        std::fill(layer.ln2.gamma.begin(), layer.ln2.gamma.end(), 1.0);
        std::fill(layer.ln2.beta.begin(), layer.ln2.beta.end(), 0.0);
    }
    fill_xavier(net.w_cls);
    std::fill(net.b_cls.begin(), net.b_cls.end(), 0.0);
}

std::vector<Vector*> tensor_list(SuperNetwork& net) {
    std::vector<Vector*> out;
    out.push_back(&net.tok_emb.data);
    out.push_back(&net.pos_emb.data);
    for (auto& layer : net.layers) {
        for (auto& h : layer.heads) {
            out.push_back(&h.wq.data);
            out.push_back(&h.wk.data);
            out.push_back(&h.wv.data);
            out.push_back(&h.wo.data);
        }
        out.push_back(&layer.ffn.w_in.data);
        out.push_back(&layer.ffn.b_in);
        out.push_back(&layer.ffn.w_out.data);
        out.push_back(&layer.ln1.gamma);
        out.push_back(&layer.ln1.beta);
        out.push_back(&layer.ln2.gamma);
        out.push_back(&layer.ln2.beta);
    }
    out.push_back(&net.w_cls.data);
    out.push_back(&net.b_cls);
    return out;
}

std::vector<const Vector*> tensor_list(const SuperNetwork& net) {
    auto mut = tensor_list(const_cast<SuperNetwork&>(net));
    return std::vector<const Vector*>(mut.begin(), mut.end());
}

void zero_all(SuperNetwork& net) {
    for (Vector* t : tensor_list(net)) std::fill(t->begin(), t->end(), 0.0);
}

size_t total_scalars(const SuperNetwork& net) {
    size_t n = 0;
    for (const Vector* t : tensor_list(net)) n += t->size();
    return n;
}

MaskPair full_mask(const ModelDims& dims) {
    MaskPair m;
    m.head.assign(dims.layers, std::vector<uint8_t>(dims.heads, 1));
    m.unit.assign(dims.layers, std::vector<uint8_t>(dims.ffn_units, 1));
    return m;
}

MaskPair full_mask(const SuperNetwork& net) {
    MaskPair m;
    m.head.resize(net.layers.size());
    m.unit.resize(net.layers.size());
    for (size_t l = 0; l < net.layers.size(); ++l) {
        m.head[l].assign(net.layers[l].heads.size(), 1);
        m.unit[l].assign(net.layers[l].ffn.units(), 1);
    }
    return m;
}

void check_mask_shape(const SuperNetwork& net, const MaskPair& mask) {
    require(mask.head.size() == net.layers.size() && mask.unit.size() == net.layers.size(), "model.mask_shape",
            "mask layer count does not match the network");
    for (size_t l = 0; l < net.layers.size(); ++l) {
        require(mask.head[l].size() == net.layers[l].heads.size(), "model.mask_shape",
                "head mask width does not match the layer");
        require(mask.unit[l].size() == static_cast<size_t>(net.layers[l].ffn.units()), "model.mask_shape",
                "unit mask width does not match the layer");
        for (uint8_t b : mask.head[l]) require(b == 0 || b == 1, "model.mask_binary", "mask entries must be 0 or 1");
        for (uint8_t b : mask.unit[l]) require(b == 0 || b == 1, "model.mask_binary", "mask entries must be 0 or 1");
    }
}

long long active_param_count(const ModelDims& dims, const MaskPair& mask) {
    require(mask.head.size() == static_cast<size_t>(dims.layers) && mask.unit.size() == static_cast<size_t>(dims.layers),
            "model.mask_shape", "mask layer count does not match dims");
    long long count = 0;
    count += static_cast<long long>(dims.vocab) * dims.d_model;
    count += static_cast<long long>(dims.seq_len) * dims.d_model;
    count += static_cast<long long>(dims.layers) * 4 * dims.d_model;  // two norms, gamma and beta each
    count += static_cast<long long>(dims.d_model) * dims.classes + dims.classes;
    const long long head_cost = 4LL * dims.d_model * dims.d_head;
    const long long unit_cost = 2LL * dims.d_model + 1;
    for (int l = 0; l < dims.layers; ++l) {
        for (uint8_t b : mask.head[l]) {
            if (b) count += head_cost;
        }
        for (uint8_t b : mask.unit[l]) {
            if (b) count += unit_cost;
        }
    }
    return count;
}

Matrix forward_masked(const SuperNetwork& net, const MaskPair& mask, const Batch& batch, ExecPolicy policy) {
    check_mask_shape(net, mask);
    check_batch(net, batch);
    const int b = batch.size();
    Matrix logits(b, net.dims.classes);
    std::vector<uint8_t> bad(b, 0);
    parallel_for(b, policy, [&](int i) {
        ExampleWorkspace ws(net);
        forward_example(net, mask, batch.example(i), ws);
        double* out = logits.row(i);
        for (int c = 0; c < net.dims.classes; ++c) {
            out[c] = ws.logits[c];
            if (!std::isfinite(out[c])) bad[i] = 1;
        }
    });
    for (int i = 0; i < b; ++i) {
        require(!bad[i], "model.nonfinite", "forward pass produced non-finite logits");
    }
    return logits;
}

LossReport loss_and_grads(const SuperNetwork& net, const MaskPair& mask, const Batch& batch, SuperNetwork& grads,
                          ExecPolicy policy, const KdTeacher* teacher, Matrix* out_logits) {
    check_mask_shape(net, mask);
    check_batch(net, batch);
    if (teacher != nullptr) {
        require(teacher->logits != nullptr && teacher->logits->rows == batch.size() &&
                    teacher->logits->cols == net.dims.classes,
                "model.teacher_shape", "teacher logits must be batch x classes");
        require(teacher->temperature > 0.0, "model.teacher_shape", "teacher temperature must be positive");
    }

    const int b = batch.size();
    const int classes = net.dims.classes;
    const double invb = 1.0 / b;

    // Per-example gradient slots, reduced in index order afterwards: the
    // result is bitwise independent of the execution policy.
    std::vector<SuperNetwork> slots(b, zeros_like(net));
    std::vector<double> ce(b, 0.0), kd(b, 0.0);
    std::vector<uint8_t> correct(b, 0), bad(b, 0);
    Matrix logits(b, classes);

    parallel_for(b, policy, [&](int i) {
        ExampleWorkspace ws(net);
        forward_example(net, mask, batch.example(i), ws);
        for (int c = 0; c < classes; ++c) {
            logits(i, c) = ws.logits[c];
            if (!std::isfinite(ws.logits[c])) bad[i] = 1;
        }
        if (bad[i]) return;

        const int label = batch.labels[i];
        Vector probs(classes), dlogits(classes);
        softmax_vec(ws.logits.data(), probs.data(), classes);
        ce[i] = -std::log(std::max(probs[label], 1e-300));
        for (int c = 0; c < classes; ++c) dlogits[c] = (probs[c] - (c == label ? 1.0 : 0.0)) * invb;

        int arg = 0;
        for (int c = 1; c < classes; ++c) {
            if (ws.logits[c] > ws.logits[arg]) arg = c;
        }
        correct[i] = (arg == label) ? 1 : 0;

        if (teacher != nullptr) {
            const double t = teacher->temperature;
            Vector soft_s(classes), soft_t(classes), scaled(classes);
            for (int c = 0; c < classes; ++c) scaled[c] = ws.logits[c] / t;
            softmax_vec(scaled.data(), soft_s.data(), classes);
            for (int c = 0; c < classes; ++c) scaled[c] = (*teacher->logits)(i, c) / t;
            softmax_vec(scaled.data(), soft_t.data(), classes);
            double kl = 0.0;
            for (int c = 0; c < classes; ++c) {
                if (soft_t[c] > 0.0) kl += soft_t[c] * (std::log(soft_t[c]) - std::log(std::max(soft_s[c], 1e-300)));
            }
            kd[i] = kl;
            const double coef = invb / t;
            for (int c = 0; c < classes; ++c) dlogits[c] += (soft_s[c] - soft_t[c]) * coef;
        }

        backward_example(net, mask, batch.example(i), ws, dlogits, slots[i]);
    });

    for (int i = 0; i < b; ++i) {
        require(!bad[i], "model.nonfinite", "forward pass produced non-finite logits");
    }

    auto dst = tensor_list(grads);
    for (int i = 0; i < b; ++i) {
        auto src = tensor_list(slots[i]);
        require(src.size() == dst.size(), "model.grad_shape", "gradient network shape does not match");
        for (size_t t = 0; t < dst.size(); ++t) {
            require(src[t]->size() == dst[t]->size(), "model.grad_shape", "gradient tensor shape does not match");
            const Vector& s = *src[t];
            Vector& d = *dst[t];
            for (size_t j = 0; j < s.size(); ++j) d[j] += s[j];
        }
    }

    LossReport rep;
    for (int i = 0; i < b; ++i) {
        rep.ce += ce[i];
        rep.kd += kd[i];
        rep.correct += correct[i];
    }
    rep.ce *= invb;
    rep.kd *= invb;
    rep.loss = rep.ce + rep.kd;
    require(std::isfinite(rep.loss), "model.nonfinite", "loss is non-finite");
    if (out_logits != nullptr) *out_logits = std::move(logits);
    return rep;
}

SuperNetwork slice_network(const SuperNetwork& net, const MaskPair& mask) {
    check_mask_shape(net, mask);
    SuperNetwork out;
    out.dims = net.dims;
    out.tok_emb = net.tok_emb;
    out.pos_emb = net.pos_emb;
    out.w_cls = net.w_cls;
    out.b_cls = net.b_cls;
    out.layers.resize(net.layers.size());
    int max_heads = 0, max_units = 0;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const EncoderLayer& src = net.layers[l];
        EncoderLayer& dst = out.layers[l];
        for (size_t h = 0; h < src.heads.size(); ++h) {
            if (mask.head[l][h]) dst.heads.push_back(src.heads[h]);
        }
        std::vector<int> keep;
        for (int u = 0; u < src.ffn.units(); ++u) {
            if (mask.unit[l][u]) keep.push_back(u);
        }
        const int d = net.dims.d_model;
        dst.ffn.w_in = Matrix(d, static_cast<int>(keep.size()));
        dst.ffn.b_in.assign(keep.size(), 0.0);
        dst.ffn.w_out = Matrix(static_cast<int>(keep.size()), d);
        for (size_t k = 0; k < keep.size(); ++k) {
            for (int j = 0; j < d; ++j) {
                dst.ffn.w_in(j, static_cast<int>(k)) = src.ffn.w_in(j, keep[k]);
                dst.ffn.w_out(static_cast<int>(k), j) = src.ffn.w_out(keep[k], j);
            }
            dst.ffn.b_in[k] = src.ffn.b_in[keep[k]];
        }
        dst.ln1 = src.ln1;
        dst.ln2 = src.ln2;
        max_heads = std::max(max_heads, static_cast<int>(dst.heads.size()));
        max_units = std::max(max_units, static_cast<int>(keep.size()));
    }
    out.dims.heads = std::max(max_heads, 1);
    out.dims.ffn_units = std::max(max_units, 1);
    return out;
}

}  // namespace monas
