#include "monas/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "monas/errors.hpp"

namespace monas {

namespace {
constexpr const char* kFormat = "monas-checkpoint-v1";
}

void save_checkpoint(const SuperNetwork& net, const std::string& path) {
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["dims"] = {{"layers", net.dims.layers},   {"heads", net.dims.heads},
                 {"ffn_units", net.dims.ffn_units}, {"d_model", net.dims.d_model},
                 {"d_head", net.dims.d_head},   {"vocab", net.dims.vocab},
                 {"seq_len", net.dims.seq_len}, {"classes", net.dims.classes}};
    // Layer widths may differ from dims for sliced networks.
    std::vector<int> head_counts, unit_counts;
    for (const auto& layer : net.layers) {
        head_counts.push_back(static_cast<int>(layer.heads.size()));
        unit_counts.push_back(layer.ffn.units());
    }
    j["head_counts"] = head_counts;
    j["unit_counts"] = unit_counts;
    nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
    for (const Vector* t : tensor_list(net)) tensors.push_back(*t);
    j["tensors"] = std::move(tensors);

    std::ofstream out(path);
    require(out.good(), "checkpoint.io", "cannot open checkpoint file for writing: " + path);
    out << j.dump();
    out.close();
    require(out.good(), "checkpoint.io", "failed to write checkpoint file: " + path);
}

SuperNetwork load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "checkpoint.io", "cannot open checkpoint file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        fail("checkpoint.parse", std::string("invalid checkpoint JSON: ") + e.what());
    }
    require(j.value("format", "") == kFormat, "checkpoint.format", "unsupported checkpoint format");

    ModelDims dims;
    const auto& jd = j.at("dims");
    dims.layers = jd.at("layers").get<int>();
    dims.heads = jd.at("heads").get<int>();
    dims.ffn_units = jd.at("ffn_units").get<int>();
    dims.d_model = jd.at("d_model").get<int>();
    dims.d_head = jd.at("d_head").get<int>();
    dims.vocab = jd.at("vocab").get<int>();
    dims.seq_len = jd.at("seq_len").get<int>();
    dims.classes = jd.at("classes").get<int>();

    auto head_counts = j.at("head_counts").get<std::vector<int>>();
    auto unit_counts = j.at("unit_counts").get<std::vector<int>>();
    require(head_counts.size() == static_cast<size_t>(dims.layers) &&
                unit_counts.size() == static_cast<size_t>(dims.layers),
            "checkpoint.format", "layer width lists do not match layer count");

    SuperNetwork net = make_network(dims);
    for (int l = 0; l < dims.layers; ++l) {
        net.layers[l].heads.resize(head_counts[l]);
        for (auto& h : net.layers[l].heads) {
            h.wq = Matrix(dims.d_model, dims.d_head);
            h.wk = Matrix(dims.d_model, dims.d_head);
            h.wv = Matrix(dims.d_model, dims.d_head);
            h.wo = Matrix(dims.d_head, dims.d_model);
        }
        net.layers[l].ffn.w_in = Matrix(dims.d_model, unit_counts[l]);
        net.layers[l].ffn.b_in.assign(unit_counts[l], 0.0);
        net.layers[l].ffn.w_out = Matrix(unit_counts[l], dims.d_model);
    }

    auto tensors = tensor_list(net);
    const auto& jt = j.at("tensors");
    require(jt.is_array() && jt.size() == tensors.size(), "checkpoint.format",
            "tensor count does not match network structure");
    for (size_t t = 0; t < tensors.size(); ++t) {
        auto vals = jt[t].get<std::vector<double>>();
        require(vals.size() == tensors[t]->size(), "checkpoint.format", "tensor size does not match network structure");
        *tensors[t] = std::move(vals);
    }
    return net;
}

}  // namespace monas
