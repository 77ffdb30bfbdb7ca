#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "monas/adam.hpp"
#include "monas/checkpoint.hpp"
#include "monas/errors.hpp"
#include "monas/model.hpp"
#include "monas/rng.hpp"

using namespace monas;

// ---- oracles ----

// Central finite difference of the training loss with respect to one scalar.
static double fd_loss_derivative(SuperNetwork& net, const MaskPair& mask, const Batch& batch,
                                 const KdTeacher* teacher, Vector* tensor, size_t idx, double h) {
    SuperNetwork scratch = zeros_like(net);
    const double saved = (*tensor)[idx];
    (*tensor)[idx] = saved + h;
    const double up = loss_and_grads(net, mask, batch, scratch, ExecPolicy::Serial, teacher).loss;
    zero_all(scratch);
    (*tensor)[idx] = saved - h;
    const double down = loss_and_grads(net, mask, batch, scratch, ExecPolicy::Serial, teacher).loss;
    (*tensor)[idx] = saved;
    return (up - down) / (2.0 * h);
}

// The all-zeros mask leaves only residual-free norm chains: every layer maps
// X to LN2(LN1(X)), then mean pooling and the classifier produce the logits.
static Matrix norm_chain_oracle(const SuperNetwork& net, const Batch& batch) {
    const int d = net.dims.d_model;
    Matrix logits(batch.size(), net.dims.classes);
    for (int b = 0; b < batch.size(); ++b) {
        const int* toks = batch.example(b);
        std::vector<std::vector<double>> x(batch.seq_len, std::vector<double>(d));
        for (int t = 0; t < batch.seq_len; ++t) {
            for (int j = 0; j < d; ++j) x[t][j] = net.tok_emb(toks[t], j) + net.pos_emb(t, j);
        }
        auto apply_ln = [d](std::vector<double>& v, const LayerNormParams& ln) {
            double mean = 0.0;
            for (double e : v) mean += e;
            mean /= d;
            double var = 0.0;
            for (double e : v) var += (e - mean) * (e - mean);
            var /= d;
            const double r = 1.0 / std::sqrt(var + 1e-5);
            for (int j = 0; j < d; ++j) v[j] = ln.gamma[j] * ((v[j] - mean) * r) + ln.beta[j];
        };
        for (const EncoderLayer& layer : net.layers) {
            for (int t = 0; t < batch.seq_len; ++t) {
                apply_ln(x[t], layer.ln1);
                apply_ln(x[t], layer.ln2);
            }
        }
        std::vector<double> pooled(d, 0.0);
        for (int t = 0; t < batch.seq_len; ++t) {
            for (int j = 0; j < d; ++j) pooled[j] += x[t][j];
        }
        for (int j = 0; j < d; ++j) pooled[j] /= batch.seq_len;
        for (int c = 0; c < net.dims.classes; ++c) {
            double z = net.b_cls[c];
            for (int j = 0; j < d; ++j) z += pooled[j] * net.w_cls(j, c);
            logits(b, c) = z;
        }
    }
    return logits;
}

static bool nets_bitwise_equal(const SuperNetwork& a, const SuperNetwork& b) {
    auto ta = tensor_list(a);
    auto tb = tensor_list(b);
    if (ta.size() != tb.size()) return false;
    for (size_t t = 0; t < ta.size(); ++t) {
        if (*ta[t] != *tb[t]) return false;
    }
    return true;
}

static ModelDims small_dims() {
    ModelDims d;
    d.layers = 2;
    d.heads = 2;
    d.ffn_units = 4;
    d.d_model = 8;
    d.d_head = 4;
    d.vocab = 8;
    d.seq_len = 6;
    d.classes = 2;
    return d;
}

static Batch make_batch(const ModelDims& d, int size, uint64_t seed) {
    Batch batch;
    batch.seq_len = d.seq_len;
    Rng rng(seed);
    for (int i = 0; i < size; ++i) {
        for (int t = 0; t < d.seq_len; ++t) batch.tokens.push_back(static_cast<int>(rng.below(d.vocab)));
        batch.labels.push_back(static_cast<int>(rng.below(d.classes)));
    }
    return batch;
}

static MaskPair partial_mask(const ModelDims& d) {
    MaskPair m = full_mask(d);
    m.head[0][0] = 0;       // one head off in layer 0
    m.unit[0][1] = 0;       // one unit off in layer 0
    m.unit[1][2] = 0;       // one unit off in layer 1
    if (d.layers > 2) {
        m.head[2].assign(m.head[2].size(), 0);  // a whole MHA off
    }
    return m;
}

TEST_CASE("dims validation") {
    ModelDims d = small_dims();
    CHECK_NOTHROW(d.validate());
    d.d_head = 3;
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("model.dims"), Error);
    d = small_dims();
    d.layers = 0;
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("model.dims"), Error);
    d = small_dims();
    d.classes = 1;
    CHECK_THROWS_WITH_AS(d.validate(), doctest::Contains("model.dims"), Error);
}

TEST_CASE("full mask forward equals the physically identical slice") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(1);
    random_init(net, rng);
    const Batch batch = make_batch(d, 5, 2);
    const MaskPair full = full_mask(net);
    const Matrix a = forward_masked(net, full, batch);
    SuperNetwork copy = slice_network(net, full);
    const Matrix b = forward_masked(copy, full_mask(copy), batch);
    REQUIRE(a.rows == b.rows);
    CHECK(a.data == b.data);
    CHECK(nets_bitwise_equal(net, copy));
}

TEST_CASE("all zeros mask reduces to a norm chain") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(3);
    random_init(net, rng);
    const Batch batch = make_batch(d, 4, 4);
    MaskPair empty = full_mask(net);
    for (auto& row : empty.head) row.assign(row.size(), 0);
    for (auto& row : empty.unit) row.assign(row.size(), 0);
    const Matrix got = forward_masked(net, empty, batch);
    const Matrix want = norm_chain_oracle(net, batch);
    REQUIRE(got.rows == want.rows);
    for (size_t i = 0; i < got.data.size(); ++i) {
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-9));
    }
}

TEST_CASE("masked weights cannot influence the output") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(5);
    random_init(net, rng);
    const Batch batch = make_batch(d, 4, 6);
    MaskPair mask = partial_mask(d);
    const Matrix before = forward_masked(net, mask, batch);

    SuperNetwork poked = net;
    // Arbitrary garbage in every tensor owned by the masked head (0,0).
    for (Matrix* w : {&poked.layers[0].heads[0].wq, &poked.layers[0].heads[0].wk,
                      &poked.layers[0].heads[0].wv, &poked.layers[0].heads[0].wo}) {
        for (double& v : w->data) v += 123.456;
    }
    // Masked unit 1 of layer 0: its input column, bias, and output row.
    for (int j = 0; j < d.d_model; ++j) {
        poked.layers[0].ffn.w_in(j, 1) -= 77.0;
        poked.layers[0].ffn.w_out(1, j) += 99.0;
    }
    poked.layers[0].ffn.b_in[1] = 1e6;
    const Matrix after = forward_masked(poked, mask, batch);
    CHECK(before.data == after.data);

    // An active head does influence the output.
    poked.layers[0].heads[1].wq(0, 0) += 0.5;
    const Matrix changed = forward_masked(poked, mask, batch);
    CHECK(before.data != changed.data);
}

TEST_CASE("masked forward matches a physically pruned network") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(7);
    random_init(net, rng);
    const Batch batch = make_batch(d, 5, 8);

    auto check_mask = [&](const MaskPair& mask) {
        const Matrix a = forward_masked(net, mask, batch);
        SuperNetwork pruned = slice_network(net, mask);
        const Matrix b = forward_masked(pruned, full_mask(pruned), batch);
        REQUIRE(a.data.size() == b.data.size());
        for (size_t i = 0; i < a.data.size(); ++i) {
            const double rel = std::abs(a.data[i] - b.data[i]) /
                               std::max(1.0, std::abs(a.data[i]) + std::abs(b.data[i]));
            CHECK(rel < 1e-5);
        }
    };

    MaskPair one_head_off = full_mask(d);
    one_head_off.head[0][0] = 0;
    check_mask(one_head_off);

    Rng mask_rng(9);
    for (int rep = 0; rep < 10; ++rep) {
        MaskPair m = full_mask(d);
        for (auto& row : m.head) {
            for (auto& b : row) b = static_cast<uint8_t>(mask_rng.below(2));
        }
        for (auto& row : m.unit) {
            for (auto& b : row) b = static_cast<uint8_t>(mask_rng.below(2));
        }
        check_mask(m);
    }
}

TEST_CASE("gradients match central finite differences") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(11);
    random_init(net, rng);
    const Batch batch = make_batch(d, 4, 12);
    const MaskPair mask = partial_mask(d);

    Matrix teacher_logits(batch.size(), d.classes);
    for (double& v : teacher_logits.data) v = rng.normal() * 0.5;
    KdTeacher teacher;
    teacher.logits = &teacher_logits;
    teacher.temperature = 2.0;

    const double h = 1e-5;
    for (const KdTeacher* t : {static_cast<const KdTeacher*>(nullptr),
                               static_cast<const KdTeacher*>(&teacher)}) {
        SuperNetwork grads = zeros_like(net);
        loss_and_grads(net, mask, batch, grads, ExecPolicy::Serial, t);
        auto tn = tensor_list(net);
        auto tg = tensor_list(grads);
        for (size_t ti = 0; ti < tn.size(); ++ti) {
            for (size_t i = 0; i < tn[ti]->size(); ++i) {
                const double g = (*tg[ti])[i];
                const double fd = fd_loss_derivative(net, mask, batch, t, tn[ti], i, h);
                const double rel = std::abs(g - fd) / std::max(1.0, std::abs(g) + std::abs(fd));
                CHECK(rel < 1e-4);
            }
        }
    }
}

TEST_CASE("masked weights receive exactly zero gradient") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(13);
    random_init(net, rng);
    const Batch batch = make_batch(d, 4, 14);
    const MaskPair mask = partial_mask(d);
    SuperNetwork grads = zeros_like(net);
    loss_and_grads(net, mask, batch, grads);

    for (const Matrix* w : {&grads.layers[0].heads[0].wq, &grads.layers[0].heads[0].wk,
                            &grads.layers[0].heads[0].wv, &grads.layers[0].heads[0].wo}) {
        for (double v : w->data) CHECK(v == 0.0);
    }
    for (int j = 0; j < d.d_model; ++j) {
        CHECK(grads.layers[0].ffn.w_in(j, 1) == 0.0);
        CHECK(grads.layers[0].ffn.w_out(1, j) == 0.0);
    }
    CHECK(grads.layers[0].ffn.b_in[1] == 0.0);
    // An active head did receive gradient somewhere.
    double mag = 0.0;
    for (double v : grads.layers[0].heads[1].wq.data) mag += std::abs(v);
    CHECK(mag > 0.0);
}

TEST_CASE("a teacher equal to the student adds zero distillation loss") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(15);
    random_init(net, rng);
    const Batch batch = make_batch(d, 4, 16);
    const MaskPair mask = full_mask(d);

    SuperNetwork grads = zeros_like(net);
    Matrix logits;
    const LossReport plain = loss_and_grads(net, mask, batch, grads, ExecPolicy::Serial, nullptr, &logits);
    CHECK(plain.kd == 0.0);
    CHECK(plain.loss == plain.ce);

    KdTeacher self;
    self.logits = &logits;
    self.temperature = 2.0;
    SuperNetwork grads2 = zeros_like(net);
    const LossReport with_self = loss_and_grads(net, mask, batch, grads2, ExecPolicy::Serial, &self);
    CHECK(std::abs(with_self.kd) < 1e-12);
    CHECK(with_self.ce == plain.ce);
    CHECK(with_self.loss == with_self.ce + with_self.kd);
}

TEST_CASE("zero weights produce uniform logits and chance loss") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);  // all-zero weights
    const Batch batch = make_batch(d, 8, 18);
    SuperNetwork grads = zeros_like(net);
    Matrix logits;
    const LossReport rep = loss_and_grads(net, full_mask(d), batch, grads, ExecPolicy::Serial, nullptr, &logits);
    for (double v : logits.data) CHECK(v == 0.0);
    CHECK(rep.ce == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("serial and parallel execution agree bitwise") {
    ModelDims d = small_dims();
    d.layers = 3;
    SuperNetwork net = make_network(d);
    Rng rng(17);
    random_init(net, rng);
    const Batch batch = make_batch(d, 16, 20);
    const MaskPair mask = partial_mask(d);

    SuperNetwork gs = zeros_like(net), gp = zeros_like(net);
    Matrix ls, lp;
    const LossReport rs = loss_and_grads(net, mask, batch, gs, ExecPolicy::Serial, nullptr, &ls);
    const LossReport rp = loss_and_grads(net, mask, batch, gp, ExecPolicy::Parallel, nullptr, &lp);
    CHECK(rs.loss == rp.loss);
    CHECK(rs.ce == rp.ce);
    CHECK(rs.correct == rp.correct);
    CHECK(ls.data == lp.data);
    CHECK(nets_bitwise_equal(gs, gp));
    CHECK(forward_masked(net, mask, batch, ExecPolicy::Serial).data ==
          forward_masked(net, mask, batch, ExecPolicy::Parallel).data);
}

TEST_CASE("adam matches the textbook update when no gradient is zero") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    net.tok_emb(0, 0) = 1.0;
    Adam opt(net);

    // Two steps on a single entry; every other gradient stays zero.
    const double g1 = 0.5, g2 = -0.25;
    SuperNetwork grads = zeros_like(net);
    grads.tok_emb(0, 0) = g1;
    opt.update(net, grads);
    grads.tok_emb(0, 0) = g2;
    opt.update(net, grads);

    const AdamParams hp;
    double m = 0.0, v = 0.0, p = 1.0;
    int t = 0;
    for (double g : {g1, g2}) {
        ++t;
        m = hp.beta1 * m + (1.0 - hp.beta1) * g;
        v = hp.beta2 * v + (1.0 - hp.beta2) * g * g;
        const double mhat = m / (1.0 - std::pow(hp.beta1, t));
        const double vhat = v / (1.0 - std::pow(hp.beta2, t));
        p -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
    CHECK(net.tok_emb(0, 0) == doctest::Approx(p).epsilon(1e-15));
}

TEST_CASE("adam leaves zero gradient entries untouched") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(19);
    random_init(net, rng);
    const SuperNetwork before = net;
    Adam opt(net);
    SuperNetwork zero_grads = zeros_like(net);
    opt.update(net, zero_grads);
    CHECK(nets_bitwise_equal(net, before));

    // A skipped entry keeps its value even while others move.
    SuperNetwork grads = zeros_like(net);
    grads.tok_emb(1, 1) = 0.3;
    const double untouched = net.tok_emb(0, 0);
    opt.update(net, grads);
    CHECK(net.tok_emb(0, 0) == untouched);
    CHECK(net.tok_emb(1, 1) != before.tok_emb(1, 1));
}

TEST_CASE("checkpoints round trip bitwise") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(21);
    random_init(net, rng);
    const std::string path = (std::filesystem::temp_directory_path() / "ckpt_roundtrip.json").string();
    save_checkpoint(net, path);
    const SuperNetwork loaded = load_checkpoint(path);
    CHECK(loaded.dims == net.dims);
    CHECK(nets_bitwise_equal(loaded, net));

    // Irregular widths from physical pruning survive the round trip too.
    MaskPair m = full_mask(d);
    m.head[0][0] = 0;
    m.unit[1].assign(m.unit[1].size(), 0);
    const SuperNetwork sliced = slice_network(net, m);
    save_checkpoint(sliced, path);
    const SuperNetwork sliced_loaded = load_checkpoint(path);
    CHECK(nets_bitwise_equal(sliced_loaded, sliced));
    const Batch batch = make_batch(d, 3, 22);
    CHECK(forward_masked(sliced_loaded, full_mask(sliced_loaded), batch).data ==
          forward_masked(sliced, full_mask(sliced), batch).data);
    std::filesystem::remove(path);

    CHECK_THROWS_WITH_AS(load_checkpoint("/nonexistent/nowhere.json"), doctest::Contains("checkpoint.io"),
                         Error);
}

TEST_CASE("loss is identical across repeated evaluations") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(23);
    random_init(net, rng);
    const Batch batch = make_batch(d, 6, 24);
    SuperNetwork g1 = zeros_like(net), g2 = zeros_like(net);
    const double a = loss_and_grads(net, full_mask(d), batch, g1).loss;
    const double b = loss_and_grads(net, full_mask(d), batch, g2).loss;
    CHECK(a == b);
    CHECK(nets_bitwise_equal(g1, g2));
}

TEST_CASE("malformed inputs are rejected with structured errors") {
    const ModelDims d = small_dims();
    SuperNetwork net = make_network(d);
    Rng rng(25);
    random_init(net, rng);
    SuperNetwork grads = zeros_like(net);

    Batch wrong_len = make_batch(d, 2, 26);
    wrong_len.seq_len = d.seq_len - 1;
    wrong_len.tokens.resize(static_cast<size_t>(2) * wrong_len.seq_len);
    CHECK_THROWS_WITH_AS(forward_masked(net, full_mask(d), wrong_len),
                         doctest::Contains("model.batch_shape"), Error);

    Batch bad_tok = make_batch(d, 2, 26);
    bad_tok.tokens[0] = d.vocab;
    CHECK_THROWS_WITH_AS(forward_masked(net, full_mask(d), bad_tok),
                         doctest::Contains("model.token_range"), Error);

    Batch bad_label = make_batch(d, 2, 26);
    bad_label.labels[0] = d.classes;
    CHECK_THROWS_WITH_AS(loss_and_grads(net, full_mask(d), bad_label, grads),
                         doctest::Contains("model.label_range"), Error);

    MaskPair bad_mask = full_mask(d);
    bad_mask.head[0][0] = 2;
    CHECK_THROWS_WITH_AS(forward_masked(net, bad_mask, make_batch(d, 2, 26)),
                         doctest::Contains("model.mask_binary"), Error);

    MaskPair short_mask = full_mask(d);
    short_mask.head.pop_back();
    CHECK_THROWS_WITH_AS(forward_masked(net, short_mask, make_batch(d, 2, 26)),
                         doctest::Contains("model.mask_shape"), Error);

    Matrix bad_teacher(1, d.classes);
    KdTeacher teacher;
    teacher.logits = &bad_teacher;
    teacher.temperature = 2.0;
    CHECK_THROWS_WITH_AS(loss_and_grads(net, full_mask(d), make_batch(d, 2, 26), grads,
                                        ExecPolicy::Serial, &teacher),
                         doctest::Contains("model.teacher_shape"), Error);
    Matrix ok_teacher(2, d.classes);
    teacher.logits = &ok_teacher;
    teacher.temperature = 0.0;
    CHECK_THROWS_WITH_AS(loss_and_grads(net, full_mask(d), make_batch(d, 2, 26), grads,
                                        ExecPolicy::Serial, &teacher),
                         doctest::Contains("model.teacher_shape"), Error);
}
