#include "svdprune/flops.hpp"

#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "svdprune/errors.hpp"

namespace svdprune {
namespace {

using nlohmann::json;

// Standard per-layer transformer count: QKV/output projections, attention
// score and value matmuls, and the two MLP matmuls, as MACs, times the
// FLOPs-per-MAC convention.
double layer_stack_flops(int layers, int hidden, int ffn, double n, int flops_per_mac) {
    const double d = hidden;
    const double macs = 2.0 * n * d * d + n * n * d + n * d * static_cast<double>(ffn);
    return static_cast<double>(layers) * macs * static_cast<double>(flops_per_mac);
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer())
        throw FormatError("flops config: " + path + " must be an integer");
    const auto wide = v.get<std::int64_t>();
    if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max())
        throw FormatError("flops config: " + path + " is out of range");
    return static_cast<int>(wide);
}

void apply_section(const json& v, const std::string& name,
                   std::vector<std::pair<const char*, int*>> fields) {
    if (!v.is_object()) throw FormatError("flops config: " + name + " must be an object");
    for (const auto& [key, value] : v.items()) {
        int* slot = nullptr;
        for (const auto& [fname, ptr] : fields) {
            if (key == fname) {
                slot = ptr;
                break;
            }
        }
        if (!slot) throw FormatError("flops config: unknown key \"" + name + "." + key + "\"");
        *slot = as_int(value, name + "." + key);
    }
}

} // namespace

void FlopsConfig::validate() const {
    const std::pair<const char*, int> dims[] = {
        {"vision.layers", vision.layers},
        {"vision.hidden", vision.hidden},
        {"vision.ffn", vision.ffn},
        {"vision.tokens", vision.tokens},
        {"projector.in_dim", projector.in_dim},
        {"projector.out_dim", projector.out_dim},
        {"llm.layers", llm.layers},
        {"llm.hidden", llm.hidden},
        {"llm.ffn", llm.ffn},
        {"flops_per_mac_llm_vision", flops_per_mac_llm_vision},
        {"flops_per_mac_projector", flops_per_mac_projector},
    };
    for (const auto& [name, value] : dims) {
        if (value < 1) {
            std::ostringstream msg;
            msg << name << " must be positive, got " << value;
            throw ParamError(msg.str());
        }
    }
    if (text_tokens < 0) {
        std::ostringstream msg;
        msg << "text_tokens must be non-negative, got " << text_tokens;
        throw ParamError(msg.str());
    }
}

FlopsReport estimate_flops(int retained_vision_tokens, const FlopsConfig& cfg) {
    cfg.validate();
    const int max_tokens = cfg.max_vision_tokens();
    if (retained_vision_tokens < 1 || retained_vision_tokens > max_tokens) {
        std::ostringstream msg;
        msg << "retained vision tokens must lie in [1, " << max_tokens << "], got "
            << retained_vision_tokens;
        throw ParamError(msg.str());
    }

    const double vision = layer_stack_flops(cfg.vision.layers, cfg.vision.hidden,
                                            cfg.vision.ffn, cfg.vision.tokens,
                                            cfg.flops_per_mac_llm_vision);
    const auto projector = [&cfg](int kept) {
        const double in = cfg.projector.in_dim;
        const double out = cfg.projector.out_dim;
        return static_cast<double>(kept) * (in * out + out * out) *
               static_cast<double>(cfg.flops_per_mac_projector);
    };
    const auto llm = [&cfg](int kept) {
        return layer_stack_flops(cfg.llm.layers, cfg.llm.hidden, cfg.llm.ffn,
                                 static_cast<double>(kept) + cfg.text_tokens,
                                 cfg.flops_per_mac_llm_vision);
    };

    const double total = vision + projector(retained_vision_tokens) + llm(retained_vision_tokens);
    const double baseline = vision + projector(max_tokens) + llm(max_tokens);

    FlopsReport r;
    r.vision_gflops = vision / 1e9;
    r.projector_gflops = projector(retained_vision_tokens) / 1e9;
    r.llm_tflops = llm(retained_vision_tokens) / 1e12;
    r.total_tflops = total / 1e12;
    r.reduction_percent = 100.0 * (1.0 - total / baseline);
    return r;
}

FlopsConfig flops_config_from_json(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text.begin(), json_text.end());
    } catch (const json::exception& e) {
        throw FormatError(std::string("flops config: ") + e.what());
    }
    if (!root.is_object()) throw FormatError("flops config: top level must be a JSON object");

    FlopsConfig cfg;
    for (const auto& [key, value] : root.items()) {
        if (key == "vision") {
            apply_section(value, "vision",
                          {{"layers", &cfg.vision.layers},
                           {"hidden", &cfg.vision.hidden},
                           {"ffn", &cfg.vision.ffn},
                           {"tokens", &cfg.vision.tokens}});
        } else if (key == "projector") {
            apply_section(value, "projector",
                          {{"in_dim", &cfg.projector.in_dim},
                           {"out_dim", &cfg.projector.out_dim}});
        } else if (key == "llm") {
            apply_section(value, "llm",
                          {{"layers", &cfg.llm.layers},
                           {"hidden", &cfg.llm.hidden},
                           {"ffn", &cfg.llm.ffn}});
        } else if (key == "text_tokens") {
            cfg.text_tokens = as_int(value, "text_tokens");
        } else if (key == "flops_per_mac_llm_vision") {
            cfg.flops_per_mac_llm_vision = as_int(value, "flops_per_mac_llm_vision");
        } else if (key == "flops_per_mac_projector") {
            cfg.flops_per_mac_projector = as_int(value, "flops_per_mac_projector");
        } else {
            throw FormatError("flops config: unknown key \"" + key + "\"");
        }
    }
    return cfg;
}

} // namespace svdprune
