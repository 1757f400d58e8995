// Command line front end: volume generation, mask export, codec fitting,
// affinity aggregation, partitioning, postprocessing, evaluation and full
// pipeline runs.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "maskaggr/aggregation.hpp"
#include "maskaggr/codec.hpp"
#include "maskaggr/io.hpp"
#include "maskaggr/metrics.hpp"
#include "maskaggr/partition.hpp"
#include "maskaggr/pipeline.hpp"
#include "maskaggr/synth.hpp"

using namespace maskaggr;
using nlohmann::json;

namespace {

Scale scale_zyx(const std::vector<std::int64_t>& v) { return {v[2], v[1], v[0]}; }
MaskWindow window_zyx(const std::vector<std::int64_t>& v) { return {v[2], v[1], v[0]}; }

std::vector<Scale> scales_zyx(const std::vector<std::int64_t>& flat)
{
    if (flat.empty() || flat.size() % 3 != 0)
        throw Error(ErrorKind::Config, "--scale takes triples sz sy sx");
    std::vector<Scale> out;
    for (std::size_t i = 0; i < flat.size(); i += 3)
        out.push_back({flat[i + 2], flat[i + 1], flat[i]});
    return out;
}

template <class T>
std::vector<T> split_list(const std::string& s)
{
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        if constexpr (std::is_same_v<T, std::string>)
            out.push_back(item);
        else if constexpr (std::is_floating_point_v<T>)
            out.push_back(static_cast<T>(std::stod(item)));
        else
            out.push_back(static_cast<T>(std::stoull(item)));
    }
    return out;
}

struct ProviderOptions {
    std::string labels;
    std::vector<std::string> mask_files;
    std::vector<std::int64_t> window{5, 7, 7};
    std::vector<std::int64_t> scales{1, 1, 1};
    bool empty_near_boundary = false;
    double flip_sigma = 0.0;
    int smoothing_radius = 0;
    std::uint64_t noise_seed = 0;
    std::string codec;

    void add_to(CLI::App* app, bool allow_files)
    {
        app->add_option("--labels", labels, "Ground-truth label container (oracle masks)");
        if (allow_files)
            app->add_option("--masks", mask_files, "Mask-field containers (one per scale)");
        app->add_option("--window", window, "Mask window Kz Ky Kx")->expected(3);
        app->add_option("--scale", scales, "Mask scale sz sy sx (repeatable)")->expected(3, 30);
        app->add_flag("--empty-near-boundary", empty_near_boundary, "Single-pixel masks near label transitions");
        app->add_option("--flip-sigma", flip_sigma, "Std of additive logit noise");
        app->add_option("--smoothing-radius", smoothing_radius, "Noise correlation radius");
        app->add_option("--noise-seed", noise_seed, "Noise seed");
        app->add_option("--codec", codec, "Codec container applied to every mask");
    }

    ProviderPtr build() const
    {
        ProviderPtr p;
        if (!mask_files.empty()) {
            std::vector<std::filesystem::path> paths(mask_files.begin(), mask_files.end());
            p = file_provider(paths);
        } else if (!labels.empty()) {
            p = std::make_shared<OracleProvider>(io::read_volume(labels), window_zyx(window), scales_zyx(scales),
                                                 empty_near_boundary);
        } else {
            throw Error(ErrorKind::Config, "need --labels or --masks");
        }
        if (flip_sigma > 0.0)
            p = perturb(p, {flip_sigma, smoothing_radius, noise_seed});
        if (!codec.empty())
            p = codec_provider(p, read_codec(codec));
        return p;
    }
};

int report_error(const Error& e)
{
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return static_cast<int>(exit_code_for(e.kind()));
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Instance segmentation from aggregated central instance masks"};
    app.require_subcommand(1);
    unsigned threads = 1;
    app.add_option("--threads", threads, "Worker cap (0 = all cores); never changes results");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic anisotropic Voronoi label volume");
    std::vector<std::int64_t> gen_shape{8, 64, 64};
    std::size_t gen_instances = 32;
    std::vector<double> gen_aniso{10.0, 1.0, 1.0};
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--shape", gen_shape, "Z Y X")->expected(3);
    gen->add_option("--instances", gen_instances, "Number of instances");
    gen->add_option("--anisotropy", gen_aniso, "Distance weights az ay ax")->expected(3);
    gen->add_option("--seed", gen_seed, "Seed");
    gen->add_option("--out", gen_out, "Output container")->required();

    // masks export
    auto* masks = app.add_subcommand("masks", "Mask-field operations");
    masks->require_subcommand(1);
    auto* masks_export = masks->add_subcommand("export", "Write the mask field of a provider for one scale");
    ProviderOptions export_opts;
    export_opts.add_to(masks_export, true);
    std::string export_out;
    masks_export->add_option("--out", export_out, "Output container")->required();

    // codec fit / apply
    auto* codec = app.add_subcommand("codec", "Linear latent codec");
    codec->require_subcommand(1);
    auto* codec_fit = codec->add_subcommand("fit", "Fit a codec on ground-truth masks");
    std::string fit_labels;
    std::vector<std::int64_t> fit_window{5, 7, 7};
    std::vector<std::int64_t> fit_scales{1, 1, 1};
    bool fit_empty = false;
    std::size_t fit_q = 32;
    std::size_t fit_samples = 4000;
    std::uint64_t fit_seed = 7;
    std::string fit_out;
    codec_fit->add_option("--labels", fit_labels, "Training label container")->required();
    codec_fit->add_option("--window", fit_window, "Kz Ky Kx")->expected(3);
    codec_fit->add_option("--scale", fit_scales, "sz sy sx (repeatable)")->expected(3, 30);
    codec_fit->add_flag("--empty-near-boundary", fit_empty, "Single-pixel masks near label transitions");
    codec_fit->add_option("--q", fit_q, "Latent dimension");
    codec_fit->add_option("--samples", fit_samples, "Number of sampled masks");
    codec_fit->add_option("--seed", fit_seed, "Sampling and eigensolver seed");
    codec_fit->add_option("--out", fit_out, "Output codec container")->required();

    auto* codec_apply = codec->add_subcommand("apply", "Round-trip a mask field through a codec");
    std::string apply_codec;
    std::string apply_in;
    std::string apply_out;
    codec_apply->add_option("--codec", apply_codec, "Codec container")->required();
    codec_apply->add_option("--masks", apply_in, "Input mask field")->required();
    codec_apply->add_option("--out", apply_out, "Output mask field")->required();

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "Compute the signed grid graph");
    ProviderOptions agg_opts;
    agg_opts.add_to(aggregate, true);
    std::string agg_method = "maskaggr";
    std::string agg_neighborhood = "grid16";
    std::string agg_out;
    aggregate->add_option("--method", agg_method, "maskaggr | baseline");
    aggregate->add_option("--neighborhood", agg_neighborhood, "grid16 | compact");
    aggregate->add_option("--out", agg_out, "Output graph base name")->required();

    // segment
    auto* segment = app.add_subcommand("segment", "Partition a signed grid graph");
    std::string seg_graph;
    std::string seg_method = "mws";
    double seg_fraction = 0.10;
    std::uint64_t seg_seed = 0;
    bool seg_unit = false;
    std::string seg_out;
    segment->add_option("--graph", seg_graph, "Graph base name")->required();
    segment->add_option("--method", seg_method, "mws | gasp");
    segment->add_option("--long-range-fraction", seg_fraction, "Fraction of long-range edges kept");
    segment->add_option("--seed", seg_seed, "Long-range subsampling seed");
    segment->add_flag("--unit-weights", seg_unit, "GASP with unit instead of evidence weights");
    segment->add_option("--out", seg_out, "Output segmentation container")->required();

    // postprocess
    auto* post = app.add_subcommand("postprocess", "Remove small segments and regrow the rest");
    std::string post_seg;
    std::string post_graph;
    std::size_t post_min = 200;
    std::string post_out;
    post->add_option("--seg", post_seg, "Segmentation container")->required();
    post->add_option("--graph", post_graph, "Graph base name")->required();
    post->add_option("--min-size", post_min, "Minimum segment size (strict)");
    post->add_option("--out", post_out, "Output container")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Compare a segmentation against ground truth");
    std::string eval_seg;
    std::string eval_gt;
    std::string eval_out;
    eval->add_option("--seg", eval_seg, "Segmentation container")->required();
    eval->add_option("--gt", eval_gt, "Ground-truth container")->required();
    eval->add_option("--out", eval_out, "Write the JSON report here as well");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "Run every stage from a JSON config");
    std::string pipe_config;
    std::string pipe_out;
    std::string pipe_agg;
    std::string pipe_seg;
    double pipe_sigma = -1.0;
    std::int64_t pipe_noise_seed = -1;
    bool pipe_post = false;
    pipeline->add_option("--config", pipe_config, "Config or manifest JSON")->required();
    pipeline->add_option("--out", pipe_out, "Run directory")->required();
    pipeline->add_option("--aggregate-method", pipe_agg, "Override aggregate.method");
    pipeline->add_option("--segment-method", pipe_seg, "Override segment.method");
    pipeline->add_option("--flip-sigma", pipe_sigma, "Override masks.noise.flip_sigma");
    pipeline->add_option("--noise-seed", pipe_noise_seed, "Override masks.noise.seed");
    pipeline->add_flag("--postprocess", pipe_post, "Enable small-segment removal");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Noise robustness sweep to CSV");
    std::string sweep_config;
    std::string sweep_sigmas = "0,0.5,1.0";
    std::string sweep_methods = "maskaggr,baseline";
    std::string sweep_seeds = "0";
    std::string sweep_out;
    sweep->add_option("--config", sweep_config, "Base config JSON")->required();
    sweep->add_option("--sigmas", sweep_sigmas, "Comma separated flip_sigma values");
    sweep->add_option("--methods", sweep_methods, "Comma separated aggregate methods");
    sweep->add_option("--seeds", sweep_seeds, "Comma separated noise seeds");
    sweep->add_option("--out", sweep_out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ExitCode::ConfigError);
    }

    try {
        if (gen->parsed()) {
            const Shape3 shape{gen_shape[2], gen_shape[1], gen_shape[0]};
            const auto labels =
                generate_labels(shape, gen_instances, {gen_aniso[0], gen_aniso[1], gen_aniso[2]}, gen_seed, threads);
            io::write_volume(labels, gen_out);
        } else if (masks_export->parsed()) {
            const ProviderPtr p = export_opts.build();
            const auto scales = export_opts.mask_files.empty() ? scales_zyx(export_opts.scales) : p->supported_scales();
            if (scales.size() == 1) {
                write_mask_field(materialize(*p, scales.front(), threads), export_out);
            } else {
                for (std::size_t i = 0; i < scales.size(); ++i)
                    write_mask_field(materialize(*p, scales[i], threads), export_out + "_scale" + std::to_string(i));
            }
        } else if (codec_fit->parsed()) {
            MaskConfig mc;
            mc.window = window_zyx(fit_window);
            mc.scales = scales_zyx(fit_scales);
            mc.empty_near_boundary = fit_empty;
            const auto sample = sample_training_masks(io::read_volume(fit_labels), mc, fit_samples, fit_seed);
            CodecFitOptions opts;
            opts.seed = fit_seed;
            write_codec(fit_codec(sample, fit_q, opts), fit_out);
        } else if (codec_apply->parsed()) {
            const auto c = read_codec(apply_codec);
            const MaskField field = read_mask_field(apply_in);
            const ProviderPtr p = codec_provider(std::make_shared<FieldProvider>(std::vector<MaskField>{field}), c);
            write_mask_field(materialize(*p, field.scale(), threads), apply_out);
        } else if (aggregate->parsed()) {
            const ProviderPtr p = agg_opts.build();
            const auto nh = AffinityNeighborhood::from_name(agg_neighborhood);
            SignedGridGraph graph;
            if (agg_method == "baseline")
                graph = baseline_affinities(*p, p->shape(), nh, p->window(), threads);
            else if (agg_method == "maskaggr")
                graph = aggregate_affinities(*p, p->shape(), nh, p->window(), p->supported_scales(), threads);
            else
                throw Error(ErrorKind::Config, "unknown aggregate method '" + agg_method + "'");
            io::write_graph(graph, agg_out);
        } else if (segment->parsed()) {
            PartitionConfig pc;
            pc.long_range_fraction = seg_fraction;
            pc.subsample_seed = seg_seed;
            pc.gasp_evidence_weighted = !seg_unit;
            validate(pc);
            if (seg_method != "mws" && seg_method != "gasp")
                throw Error(ErrorKind::Config, "unknown segment method '" + seg_method + "'");
            const auto graph = io::read_graph(seg_graph);
            io::write_volume(run_partition({seg_method, pc}, graph), seg_out);
        } else if (post->parsed()) {
            const auto graph = io::read_graph(post_graph);
            io::write_volume(remove_small_segments(io::read_volume(post_seg), graph, post_min), post_out);
        } else if (eval->parsed()) {
            const auto report = evaluate(io::read_volume(eval_seg), io::read_volume(eval_gt));
            const std::string text = to_json(report).dump(2) + "\n";
            std::cout << text;
            if (!eval_out.empty())
                io::write_text(eval_out, text);
        } else if (pipeline->parsed()) {
            PipelineConfig cfg = load_config(pipe_config);
            if (app.count("--threads"))
                cfg.threads = threads;
            if (!pipe_agg.empty())
                cfg.aggregate.method = pipe_agg;
            if (!pipe_seg.empty())
                cfg.segment.method = pipe_seg;
            if (pipe_sigma >= 0.0 || pipe_noise_seed >= 0) {
                NoiseConfig n = cfg.masks.noise.value_or(NoiseConfig{});
                if (pipe_sigma >= 0.0)
                    n.flip_sigma = pipe_sigma;
                if (pipe_noise_seed >= 0)
                    n.seed = static_cast<std::uint64_t>(pipe_noise_seed);
                cfg.masks.noise = n;
            }
            if (pipe_post)
                cfg.postprocess = true;
            // Re-validate after overrides.
            cfg = parse_config(to_json(cfg));
            const PipelineResult result = run_pipeline(cfg, pipe_out);
            if (result.report)
                std::cout << to_json(*result.report).dump(2) << "\n";
            if (result.exit_code != ExitCode::Success)
                std::cerr << "pipeline failed: " << result.manifest["error"].dump() << "\n";
            return static_cast<int>(result.exit_code);
        } else if (sweep->parsed()) {
            PipelineConfig cfg = load_config(sweep_config);
            if (app.count("--threads"))
                cfg.threads = threads;
            SweepSpec spec;
            spec.flip_sigmas = split_list<double>(sweep_sigmas);
            spec.methods = split_list<std::string>(sweep_methods);
            spec.noise_seeds = split_list<std::uint64_t>(sweep_seeds);
            io::write_text(sweep_out, sweep_csv(run_sweep(cfg, spec)));
        }
    } catch (const Error& e) {
        return report_error(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::IoError);
    }
    return 0;
}
