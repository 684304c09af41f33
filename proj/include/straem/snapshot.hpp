#pragma once

// JSON snapshot of an autoencoder's dimensions and parameters. Optimizer
// moments are not stored; a restored model starts Adam afresh.

#include <string>

#include <json.hpp>

#include "straem/neural.hpp"
#include "straem/streams.hpp"

namespace straem {

[[nodiscard]] inline nlohmann::json to_json(const Autoencoder& model) {
    const auto& c = model.config();
    nlohmann::json j;
    j["config"] = {{"input_dim", c.input_dim},     {"hidden_dims", c.hidden_dims}, {"learning_rate", c.learning_rate},
                   {"minibatch_size", c.minibatch_size}, {"epochs", c.epochs},   {"leaky_slope", c.leaky_slope},
                   {"seed", c.seed}};
    j["layers"] = nlohmann::json::array();
    for (const auto& layer : model.layers())
        j["layers"].push_back({{"in", layer.in},
                               {"out", layer.out},
                               {"activation", layer.activation == Activation::sigmoid ? "sigmoid" : "leaky_relu"},
                               {"weights", layer.params.weights},
                               {"bias", layer.params.bias}});
    return j;
}

[[nodiscard]] inline Autoencoder autoencoder_from_json(const nlohmann::json& j) {
    AeConfig c;
    try {
        const auto& jc = j.at("config");
        c.input_dim = jc.at("input_dim").get<std::size_t>();
        c.hidden_dims = jc.at("hidden_dims").get<std::vector<std::size_t>>();
        c.learning_rate = jc.at("learning_rate").get<double>();
        c.minibatch_size = jc.at("minibatch_size").get<std::size_t>();
        c.epochs = jc.at("epochs").get<std::size_t>();
        c.leaky_slope = jc.at("leaky_slope").get<double>();
        c.seed = jc.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& ex) {
        throw InputError(std::string("malformed model snapshot: ") + ex.what());
    }
    Autoencoder model(c);
    auto& layers = model.mutable_layers();
    const auto& jl = j.at("layers");
    if (jl.size() != layers.size()) throw InputError("model snapshot layer count does not match its config");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        auto w = jl[l].at("weights").get<std::vector<double>>();
        auto b = jl[l].at("bias").get<std::vector<double>>();
        if (w.size() != layers[l].params.weights.size() || b.size() != layers[l].params.bias.size())
            throw InputError("model snapshot layer " + std::to_string(l) + " has the wrong shape");
        layers[l].params.weights = std::move(w);
        layers[l].params.bias = std::move(b);
    }
    return model;
}

inline void save_snapshot(const Autoencoder& model, const std::string& path) { write_text_file(path, to_json(model).dump() + "\n"); }

[[nodiscard]] inline Autoencoder load_snapshot(const std::string& path) {
    return autoencoder_from_json(nlohmann::json::parse(read_text_file(path)));
}

}  // namespace straem
