#pragma once

#include <cstdint>
#include <vector>

#include "monas/exec.hpp"
#include "monas/matrix.hpp"
#include "monas/rng.hpp"

namespace monas {

// Fixed-shape transformer encoder for sequence classification. Heads and FFN
// units can be switched off per layer through binary masks; a masked entry
// contributes exactly zero to the forward pass and receives exactly zero
// gradient, so subnetworks share weights with the full network.
struct ModelDims {
    int layers = 0;
    int heads = 0;      // attention heads per layer in the full network
    int ffn_units = 0;  // FFN intermediate units per layer in the full network
    int d_model = 0;
    int d_head = 0;
    int vocab = 0;
    int seq_len = 0;    // inputs are fixed-length token sequences
    int classes = 0;

    void validate() const;
    bool operator==(const ModelDims&) const = default;
};

// Per-layer on/off bits. Row l sizes match the actual head/unit counts of
// layer l, which lets sliced networks (irregular layer widths) reuse the
// same forward path.
struct MaskPair {
    std::vector<std::vector<uint8_t>> head;
    std::vector<std::vector<uint8_t>> unit;

    int active_heads(int layer) const;
    int active_units(int layer) const;
};

struct HeadWeights {
    Matrix wq, wk, wv;  // d_model x d_head
    Matrix wo;          // d_head x d_model
};

struct FfnWeights {
    Matrix w_in;   // d_model x units
    Vector b_in;   // units
    Matrix w_out;  // units x d_model  (no output bias: a fully masked FFN
                   //  must contribute exactly zero)
    int units() const { return static_cast<int>(b_in.size()); }
};

struct LayerNormParams {
    Vector gamma, beta;  // d_model
};

struct EncoderLayer {
    std::vector<HeadWeights> heads;
    FfnWeights ffn;
    LayerNormParams ln1, ln2;  // post-attention and post-FFN norms
};

struct SuperNetwork {
    ModelDims dims;
    Matrix tok_emb;  // vocab x d_model
    Matrix pos_emb;  // seq_len x d_model
    std::vector<EncoderLayer> layers;
    Matrix w_cls;    // d_model x classes
    Vector b_cls;    // classes
};

struct Batch {
    int seq_len = 0;
    std::vector<int> tokens;  // size() * seq_len, row-major
    std::vector<int> labels;  // size()
    int size() const { return static_cast<int>(labels.size()); }
    const int* example(int i) const { return tokens.data() + static_cast<size_t>(i) * seq_len; }
};

// Soft-label distillation target. Teacher logits are treated as constants:
// no gradient flows through them.
struct KdTeacher {
    const Matrix* logits = nullptr;  // batch x classes
    double temperature = 1.0;
};

struct LossReport {
    double loss = 0.0;  // ce + kd
    double ce = 0.0;
    double kd = 0.0;
    int correct = 0;
};

SuperNetwork make_network(const ModelDims& dims);           // zero weights
SuperNetwork zeros_like(const SuperNetwork& net);           // same structure, zero weights
void random_init(SuperNetwork& net, Rng& rng);

// Every tensor of the network in a fixed traversal order. Parallel
// iteration over several same-shaped networks (params, grads, optimizer
// moments) zips these lists.
std::vector<Vector*> tensor_list(SuperNetwork& net);
std::vector<const Vector*> tensor_list(const SuperNetwork& net);
void zero_all(SuperNetwork& net);
size_t total_scalars(const SuperNetwork& net);

MaskPair full_mask(const ModelDims& dims);
MaskPair full_mask(const SuperNetwork& net);
void check_mask_shape(const SuperNetwork& net, const MaskPair& mask);

// Parameter count of the subnetwork selected by `mask`: embeddings, norms
// and classifier are unconditional; each active head costs 4*d_model*d_head
// and each active FFN unit costs 2*d_model+1.
long long active_param_count(const ModelDims& dims, const MaskPair& mask);

// Logits for a batch, batch x classes. Fails with code "model.nonfinite"
// if the pass produces non-finite values.
Matrix forward_masked(const SuperNetwork& net, const MaskPair& mask, const Batch& batch,
                      ExecPolicy policy = ExecPolicy::Serial);

// Mean cross-entropy (plus mean KL against the teacher's softened
// distribution when `teacher` is given) and its gradient, ACCUMULATED into
// `grads` (callers zero it first; summed-gradient training steps rely on
// the accumulation). Gradients are reduced over examples in index order so
// serial and parallel execution agree bitwise. Optionally outputs the
// student logits.
LossReport loss_and_grads(const SuperNetwork& net, const MaskPair& mask, const Batch& batch,
                          SuperNetwork& grads, ExecPolicy policy = ExecPolicy::Serial,
                          const KdTeacher* teacher = nullptr, Matrix* out_logits = nullptr);

// Standalone copy of the masked subnetwork with inactive heads/units
// physically removed. Its forward pass (under a full mask) reproduces the
// masked forward of the original network.
SuperNetwork slice_network(const SuperNetwork& net, const MaskPair& mask);

}  // namespace monas
