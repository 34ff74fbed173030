#pragma once

#include <string_view>

namespace svdprune {

/// Transformer shape parameters for the three-stage pipeline. Defaults are
/// LLaVA-1.5-7B: CLIP ViT-L/336 encoder (577 tokens including CLS), a
/// two-layer MLP projector, and Vicuna-7B.
struct FlopsConfig {
    struct Vision {
        int layers = 24;
        int hidden = 1024;
        int ffn = 4096;
        int tokens = 577;
    } vision;
    struct Projector {
        int in_dim = 1024;
        int out_dim = 4096;
    } projector;
    struct Llm {
        int layers = 32;
        int hidden = 4096;
        int ffn = 11008;
    } llm;
    int text_tokens = 50;
    int flops_per_mac_llm_vision = 2;
    int flops_per_mac_projector = 1;

    /// Largest retainable vision-token count: the encoder sequence minus the
    /// CLS token, which never reaches the projector.
    int max_vision_tokens() const { return vision.tokens - 1; }

    /// ParamError on non-positive dimensions or counts.
    void validate() const;
};

/// Per-stage totals in the customary units, plus the reduction against the
/// all-tokens baseline.
struct FlopsReport {
    double vision_gflops = 0.0;
    double projector_gflops = 0.0;
    double llm_tflops = 0.0;
    double total_tflops = 0.0;
    double reduction_percent = 0.0; // vs. max_vision_tokens retained
};

/// Analytic FLOPs estimate for a forward pass retaining the given number of
/// vision tokens.
///
/// Encoder and LLM follow the standard per-layer transformer count
/// L * (4*n*d^2 + 2*n^2*d + 2*n*d*ffn) at 2 FLOPs per MAC; the projector is
/// retained * (in_dim*out_dim + out_dim^2) at 1 FLOP per MAC. The LLM
/// sequence length is retained + text_tokens; the encoder always runs at its
/// full token count. ParamError when retained is outside
/// [1, max_vision_tokens].
FlopsReport estimate_flops(int retained_vision_tokens, const FlopsConfig& cfg = {});

/// Parses a JSON override for FlopsConfig. Keys mirror the field names
/// (nested "vision"/"projector"/"llm" objects plus the three scalars);
/// unknown keys and non-integer values are rejected. Throws FormatError.
FlopsConfig flops_config_from_json(std::string_view json_text);

} // namespace svdprune
