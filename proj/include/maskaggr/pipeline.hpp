#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "maskaggr/codec.hpp"
#include "maskaggr/error.hpp"
#include "maskaggr/grid_graph.hpp"
#include "maskaggr/masks.hpp"
#include "maskaggr/metrics.hpp"
#include "maskaggr/partition.hpp"
#include "maskaggr/synth.hpp"

namespace maskaggr {

inline constexpr const char* kVersion = "0.1.0";

// All JSON triples are outermost-first ([z, y, x]) except neighborhood
// offsets, which are written (dx, dy, dz).
struct GenConfig {
    Shape3 shape{64, 64, 8};
    std::size_t num_instances = 32;
    Anisotropy anisotropy{};
    std::uint64_t seed = 1;
};

struct CodecFitConfig {
    std::size_t q = 32;
    std::size_t samples = 4000;
    std::uint64_t seed = 7;
    // Seed of the held-out training volume (same generator settings).
    std::uint64_t volume_seed = 1001;
};

struct MaskConfig {
    // "oracle" or "file".
    std::string provider = "oracle";
    std::vector<std::string> files;
    MaskWindow window{7, 7, 5};
    std::vector<Scale> scales{{1, 1, 1}, {4, 4, 1}};
    bool empty_near_boundary = false;
    std::optional<NoiseConfig> noise;
    // Either a codec file or fit parameters; fitting wins when both are given.
    std::optional<std::string> codec_path;
    std::optional<CodecFitConfig> codec_fit;
};

struct AggregateConfig {
    // "maskaggr" or "baseline".
    std::string method = "maskaggr";
    AffinityNeighborhood neighborhood = AffinityNeighborhood::grid_graph_preset();
    std::string neighborhood_name = "grid16";
};

struct SegmentConfig {
    // "mws" or "gasp".
    std::string method = "mws";
    PartitionConfig partition{};
};

struct PipelineConfig {
    // Ground truth either generated or read from a label container.
    std::optional<GenConfig> gen = GenConfig{};
    std::optional<std::string> labels_path;
    MaskConfig masks{};
    AggregateConfig aggregate{};
    SegmentConfig segment{};
    bool postprocess = false;
    bool evaluate = true;
    bool write_mask_fields = false;
    unsigned threads = 1;
};

// Throws Config errors for inconsistent settings.
void validate(const PipelineConfig& cfg);
PipelineConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& cfg);
// Accepts a bare config or a run manifest carrying a "config" field.
PipelineConfig load_config(const std::filesystem::path& path);

std::string config_hash(const PipelineConfig& cfg);

nlohmann::json to_json(const SegmentationReport& r);

// Observer for stage timings and outcomes.
struct StageRecord {
    std::string name;
    double wall_ms = 0.0;
    bool ok = true;
};

struct PipelineOutputs {
    LabelVolume ground_truth;
    std::optional<LinearMaskCodec> codec;
    std::vector<MaskField> mask_fields;
    SignedGridGraph graph;
    Segmentation segmentation;
    std::optional<Segmentation> postprocessed;
    std::optional<SegmentationReport> report;
    std::vector<StageRecord> stages;

    const Segmentation& final_segmentation() const { return postprocessed ? *postprocessed : segmentation; }
};

// Stage-level pieces, exposed for the CLI subcommands and tests.
LabelVolume load_or_generate_labels(const PipelineConfig& cfg);
std::vector<CentralInstanceMask> sample_training_masks(const LabelVolume& labels, const MaskConfig& masks,
                                                       std::size_t count, std::uint64_t seed);
LinearMaskCodec fit_codec_for(const PipelineConfig& cfg);
ProviderPtr build_provider(const PipelineConfig& cfg, const LabelVolume& gt,
                           std::optional<LinearMaskCodec>* fitted_codec = nullptr);
SignedGridGraph build_graph(const PipelineConfig& cfg, const MaskProvider& provider,
                            std::vector<MaskField>* fields_out = nullptr);
Segmentation run_partition(const SegmentConfig& cfg, const SignedGridGraph& graph);

// In-memory run of every stage. Throws Error with the failing stage recorded
// in `stages` (last entry has ok == false).
PipelineOutputs execute(const PipelineConfig& cfg, std::vector<StageRecord>* stages = nullptr);

struct PipelineResult {
    ExitCode exit_code = ExitCode::Success;
    std::filesystem::path run_dir;
    nlohmann::json manifest;
    std::optional<SegmentationReport> report;
};

// Runs every stage, writing intermediate containers, metrics.json and
// manifest.json into run_dir. Never throws for stage failures; the error is
// recorded in the manifest and reflected in exit_code.
PipelineResult run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& run_dir);

struct SweepSpec {
    std::vector<double> flip_sigmas{0.0, 0.5, 1.0};
    std::vector<std::string> methods{"maskaggr", "baseline"};
    std::vector<std::uint64_t> noise_seeds{0};
};

struct SweepRow {
    double flip_sigma;
    std::string method;
    std::uint64_t noise_seed;
    SegmentationReport report;
    double mean_variance;
};

std::vector<SweepRow> run_sweep(const PipelineConfig& base, const SweepSpec& spec);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace maskaggr
