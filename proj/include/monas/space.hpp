#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "monas/model.hpp"
#include "monas/rng.hpp"

namespace monas {

// Four ways to parameterize which heads/units stay active.
//
//   Small:  3 values (h, u, l). The first l layers keep their first h heads
//           and first u units; later layers are fully pruned. Any zero
//           coordinate selects the empty network.
//   Layer:  L bits, bit l switches the whole layer (all heads and units).
//   Medium: 2L values (h_1..h_L, u_1..u_L), per-layer prefix counts.
//   Large:  L*(H+U) bits, one per head and per unit.
enum class SpaceKind { Small, Layer, Medium, Large };

std::string to_string(SpaceKind kind);
SpaceKind space_kind_from_string(const std::string& name);

struct SubNetConfig {
    SpaceKind kind = SpaceKind::Small;
    std::vector<int> values;

    bool operator==(const SubNetConfig&) const = default;
};

nlohmann::ordered_json to_json(const SubNetConfig& cfg);
SubNetConfig config_from_json(const nlohmann::json& j);

struct SearchSpace {
    SpaceKind kind = SpaceKind::Small;
    ModelDims dims;

    SearchSpace() = default;
    SearchSpace(SpaceKind k, const ModelDims& d);

    int dim() const;
    int upper(int i) const;  // inclusive; lower bound is always 0

    SubNetConfig min_config() const;  // empty network
    SubNetConfig max_config() const;  // full network

    void validate(const SubNetConfig& cfg) const;

    // Small-space configs with a zero coordinate all denote the empty
    // network; they canonicalize to (0,0,0). Other spaces are injective.
    SubNetConfig canonical(const SubNetConfig& cfg) const;

    MaskPair create_mask(const SubNetConfig& cfg) const;
    long long param_count(const SubNetConfig& cfg) const;

    // Binary spaces draw a uniform cardinality k first and then a uniform
    // k-subset of bits, which spreads parameter counts roughly uniformly
    // instead of concentrating them binomially around the midpoint. Count
    // spaces draw each coordinate uniformly.
    SubNetConfig sample_uniform(Rng& rng) const;

    // One uniformly chosen coordinate is resampled uniformly from its
    // range (possibly landing on its current value).
    SubNetConfig mutate(const SubNetConfig& cfg, Rng& rng) const;

    double log2_size() const;
    std::vector<SubNetConfig> enumerate(size_t limit) const;

    // Coordinates scaled to [0,1]^dim, for distance-based surrogate models.
    std::vector<double> encode_unit(const SubNetConfig& cfg) const;
};

}  // namespace monas
