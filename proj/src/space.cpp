#include "monas/space.hpp"

#include <algorithm>
#include <cmath>

#include "monas/errors.hpp"

namespace monas {

std::string to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::Small: return "small";
        case SpaceKind::Layer: return "layer";
        case SpaceKind::Medium: return "medium";
        case SpaceKind::Large: return "large";
    }
    fail("space.kind", "unknown space kind");
}

SpaceKind space_kind_from_string(const std::string& name) {
    if (name == "small") return SpaceKind::Small;
    if (name == "layer") return SpaceKind::Layer;
    if (name == "medium") return SpaceKind::Medium;
    if (name == "large") return SpaceKind::Large;
    fail("space.kind", "unknown space kind: " + name + " (expected small, layer, medium or large)");
}

nlohmann::ordered_json to_json(const SubNetConfig& cfg) {
    nlohmann::ordered_json j;
    j["space"] = to_string(cfg.kind);
    j["values"] = cfg.values;
    return j;
}

SubNetConfig config_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("space") && j.contains("values"), "space.config_json",
            "config JSON must be an object with \"space\" and \"values\"");
    SubNetConfig cfg;
    cfg.kind = space_kind_from_string(j.at("space").get<std::string>());
    require(j.at("values").is_array(), "space.config_json", "\"values\" must be an array of integers");
    cfg.values = j.at("values").get<std::vector<int>>();
    return cfg;
}

SearchSpace::SearchSpace(SpaceKind k, const ModelDims& d) : kind(k), dims(d) { dims.validate(); }

int SearchSpace::dim() const {
    switch (kind) {
        case SpaceKind::Small: return 3;
        case SpaceKind::Layer: return dims.layers;
        case SpaceKind::Medium: return 2 * dims.layers;
        case SpaceKind::Large: return dims.layers * (dims.heads + dims.ffn_units);
    }
    fail("space.kind", "unknown space kind");
}

int SearchSpace::upper(int i) const {
    switch (kind) {
        case SpaceKind::Small:
            if (i == 0) return dims.heads;
            if (i == 1) return dims.ffn_units;
            return dims.layers;
        case SpaceKind::Layer:
            return 1;
        case SpaceKind::Medium:
            return i < dims.layers ? dims.heads : dims.ffn_units;
        case SpaceKind::Large:
            return 1;
    }
    fail("space.kind", "unknown space kind");
}

SubNetConfig SearchSpace::min_config() const {
    SubNetConfig cfg;
    cfg.kind = kind;
    cfg.values.assign(dim(), 0);
    return cfg;
}

SubNetConfig SearchSpace::max_config() const {
    SubNetConfig cfg;
    cfg.kind = kind;
    cfg.values.resize(dim());
    for (int i = 0; i < dim(); ++i) cfg.values[i] = upper(i);
    return cfg;
}

void SearchSpace::validate(const SubNetConfig& cfg) const {
    require(cfg.kind == kind, "space.config", "config belongs to a different space");
    require(cfg.values.size() == static_cast<size_t>(dim()), "space.config", "config has the wrong number of values");
    for (int i = 0; i < dim(); ++i) {
        require(cfg.values[i] >= 0 && cfg.values[i] <= upper(i), "space.config", "config value out of range");
    }
}

SubNetConfig SearchSpace::canonical(const SubNetConfig& cfg) const {
    validate(cfg);
    if (kind == SpaceKind::Small) {
        if (cfg.values[0] == 0 || cfg.values[1] == 0 || cfg.values[2] == 0) {
            SubNetConfig zero = cfg;
            zero.values = {0, 0, 0};
            return zero;
        }
    }
    return cfg;
}

MaskPair SearchSpace::create_mask(const SubNetConfig& cfg) const {
    validate(cfg);
    MaskPair mask;
    mask.head.assign(dims.layers, std::vector<uint8_t>(dims.heads, 0));
    mask.unit.assign(dims.layers, std::vector<uint8_t>(dims.ffn_units, 0));
    switch (kind) {
        case SpaceKind::Small: {
            const int h = cfg.values[0], u = cfg.values[1], l = cfg.values[2];
            if (h == 0 || u == 0 || l == 0) break;  // empty network
            for (int layer = 0; layer < l; ++layer) {
                for (int i = 0; i < h; ++i) mask.head[layer][i] = 1;
                for (int i = 0; i < u; ++i) mask.unit[layer][i] = 1;
            }
            break;
        }
        case SpaceKind::Layer: {
            for (int layer = 0; layer < dims.layers; ++layer) {
                if (!cfg.values[layer]) continue;
                std::fill(mask.head[layer].begin(), mask.head[layer].end(), uint8_t{1});
                std::fill(mask.unit[layer].begin(), mask.unit[layer].end(), uint8_t{1});
            }
            break;
        }
        case SpaceKind::Medium: {
            for (int layer = 0; layer < dims.layers; ++layer) {
                const int h = cfg.values[layer];
                const int u = cfg.values[dims.layers + layer];
                for (int i = 0; i < h; ++i) mask.head[layer][i] = 1;
                for (int i = 0; i < u; ++i) mask.unit[layer][i] = 1;
            }
            break;
        }
        case SpaceKind::Large: {
            const int row = dims.heads + dims.ffn_units;
            for (int layer = 0; layer < dims.layers; ++layer) {
                for (int i = 0; i < dims.heads; ++i) {
                    mask.head[layer][i] = static_cast<uint8_t>(cfg.values[layer * row + i]);
                }
                for (int i = 0; i < dims.ffn_units; ++i) {
                    mask.unit[layer][i] = static_cast<uint8_t>(cfg.values[layer * row + dims.heads + i]);
                }
            }
            break;
        }
    }
    return mask;
}

long long SearchSpace::param_count(const SubNetConfig& cfg) const {
    return active_param_count(dims, create_mask(cfg));
}

SubNetConfig SearchSpace::sample_uniform(Rng& rng) const {
    SubNetConfig cfg;
    cfg.kind = kind;
    const int n = dim();
    cfg.values.assign(n, 0);
    if (kind == SpaceKind::Layer || kind == SpaceKind::Large) {
        const int k = rng.uniform_int(0, n);
        auto chosen = rng.sample_indices(n, k);
        for (int idx : chosen) cfg.values[idx] = 1;
    } else {
        for (int i = 0; i < n; ++i) cfg.values[i] = rng.uniform_int(0, upper(i));
    }
    return cfg;
}

SubNetConfig SearchSpace::mutate(const SubNetConfig& cfg, Rng& rng) const {
    validate(cfg);
    SubNetConfig out = cfg;
    const int i = rng.uniform_int(0, dim() - 1);
    out.values[i] = rng.uniform_int(0, upper(i));  // may re-draw the current value
    return out;
}

double SearchSpace::log2_size() const {
    double bits = 0.0;
    for (int i = 0; i < dim(); ++i) bits += std::log2(static_cast<double>(upper(i)) + 1.0);
    return bits;
}

std::vector<SubNetConfig> SearchSpace::enumerate(size_t limit) const {
    require(log2_size() <= 40.0, "space.too_large", "space too large to enumerate");
    std::vector<SubNetConfig> out;
    SubNetConfig cfg = min_config();
    const int n = dim();
    while (true) {
        require(out.size() < limit, "space.too_large", "enumeration exceeds the requested limit");
        out.push_back(cfg);
        int i = 0;
        while (i < n) {
            if (cfg.values[i] < upper(i)) {
                ++cfg.values[i];
                break;
            }
            cfg.values[i] = 0;
            ++i;
        }
        if (i == n) break;
    }
    return out;
}

std::vector<double> SearchSpace::encode_unit(const SubNetConfig& cfg) const {
    validate(cfg);
    std::vector<double> x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = static_cast<double>(cfg.values[i]) / upper(i);
    return x;
}

}  // namespace monas
