#include "maskaggr/pipeline.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include "maskaggr/aggregation.hpp"
#include "maskaggr/io.hpp"

namespace maskaggr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::int64_t> triple(const json& j, const char* what)
{
    auto v = j.get<std::vector<std::int64_t>>();
    if (v.size() != 3)
        throw Error(ErrorKind::Config, std::string(what) + " needs 3 entries");
    return v;
}

Shape3 shape_from_zyx(const json& j)
{
    const auto v = triple(j, "shape");
    return {v[2], v[1], v[0]};
}

MaskWindow window_from_zyx(const json& j)
{
    const auto v = triple(j, "window");
    return {v[2], v[1], v[0]};
}

Scale scale_from_zyx(const json& j)
{
    const auto v = triple(j, "scale");
    return {v[2], v[1], v[0]};
}

AffinityNeighborhood neighborhood_from_json(const json& j, std::string* name)
{
    if (j.is_string()) {
        *name = j.get<std::string>();
        return AffinityNeighborhood::from_name(*name);
    }
    std::vector<Coord3> offsets;
    for (const auto& o : j.at("offsets")) {
        const auto v = triple(o, "offset");
        offsets.push_back({v[0], v[1], v[2]});
    }
    *name = "custom";
    return AffinityNeighborhood(std::move(offsets), j.at("direct_count").get<std::size_t>());
}

json neighborhood_to_json(const AggregateConfig& a)
{
    if (a.neighborhood_name != "custom")
        return a.neighborhood_name;
    json offsets = json::array();
    for (const auto& o : a.neighborhood.offsets())
        offsets.push_back({o.x, o.y, o.z});
    return {{"offsets", offsets}, {"direct_count", a.neighborhood.direct_count()}};
}

class StageTimer {
public:
    StageTimer(std::vector<StageRecord>* log, std::string name)
        : log_(log), name_(std::move(name)), start_(std::chrono::steady_clock::now())
    {
    }

    ~StageTimer()
    {
        if (!log_)
            return;
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        log_->push_back({name_, std::chrono::duration<double, std::milli>(elapsed).count(), ok_});
    }

    void succeed() { ok_ = true; }

private:
    std::vector<StageRecord>* log_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
    bool ok_ = false;
};

template <class F>
auto stage(std::vector<StageRecord>* log, const std::string& name, F&& body)
{
    StageTimer timer(log, name);
    if constexpr (std::is_void_v<decltype(body())>) {
        body();
        timer.succeed();
    } else {
        auto result = body();
        timer.succeed();
        return result;
    }
}

}  // namespace

void validate(const PipelineConfig& cfg)
{
    if (!cfg.gen && !cfg.labels_path)
        throw Error(ErrorKind::Config, "config needs either 'gen' or 'labels'");
    if (cfg.masks.provider != "oracle" && cfg.masks.provider != "file")
        throw Error(ErrorKind::Config, "masks.provider must be 'oracle' or 'file'");
    if (cfg.masks.provider == "file" && cfg.masks.files.empty())
        throw Error(ErrorKind::Config, "file provider needs masks.files");
    if (cfg.aggregate.method != "maskaggr" && cfg.aggregate.method != "baseline")
        throw Error(ErrorKind::Config, "aggregate.method must be 'maskaggr' or 'baseline'");
    if (cfg.segment.method != "mws" && cfg.segment.method != "gasp")
        throw Error(ErrorKind::Config, "segment.method must be 'mws' or 'gasp'");
    if (cfg.masks.scales.empty())
        throw Error(ErrorKind::Config, "masks.scales must not be empty");
    try {
        validate_window(cfg.masks.window);
        for (auto s : cfg.masks.scales)
            validate_scale(s);
        if (cfg.gen)
            validate_shape(cfg.gen->shape);
        validate(cfg.segment.partition);
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
}

PipelineConfig parse_config(const json& j)
{
    PipelineConfig cfg;
    try {
        if (!j.is_object())
            throw Error(ErrorKind::Config, "config must be a JSON object");
        cfg.threads = j.value("threads", 1u);

        if (j.contains("labels") && !j["labels"].is_null()) {
            cfg.labels_path = j["labels"].get<std::string>();
            cfg.gen.reset();
        }
        if (j.contains("gen") && !j["gen"].is_null()) {
            const auto& g = j["gen"];
            GenConfig gen;
            if (g.contains("shape"))
                gen.shape = shape_from_zyx(g["shape"]);
            gen.num_instances = g.value("num_instances", gen.num_instances);
            if (g.contains("anisotropy")) {
                const auto a = g["anisotropy"].get<std::vector<double>>();
                if (a.size() != 3)
                    throw Error(ErrorKind::Config, "anisotropy needs 3 entries");
                gen.anisotropy = {a[0], a[1], a[2]};
            }
            gen.seed = g.value("seed", gen.seed);
            if (!cfg.labels_path)
                cfg.gen = gen;
        } else if (j.contains("gen") && j["gen"].is_null()) {
            cfg.gen.reset();
        }

        if (j.contains("masks")) {
            const auto& m = j["masks"];
            cfg.masks.provider = m.value("provider", cfg.masks.provider);
            if (m.contains("files"))
                cfg.masks.files = m["files"].get<std::vector<std::string>>();
            if (m.contains("window"))
                cfg.masks.window = window_from_zyx(m["window"]);
            if (m.contains("scales")) {
                cfg.masks.scales.clear();
                for (const auto& s : m["scales"])
                    cfg.masks.scales.push_back(scale_from_zyx(s));
            }
            cfg.masks.empty_near_boundary = m.value("empty_near_boundary", cfg.masks.empty_near_boundary);
            if (m.contains("noise") && !m["noise"].is_null()) {
                NoiseConfig n;
                n.flip_sigma = m["noise"].value("flip_sigma", 0.0);
                n.smoothing_radius = m["noise"].value("smoothing_radius", 0);
                n.seed = m["noise"].value("seed", std::uint64_t{0});
                cfg.masks.noise = n;
            }
            if (m.contains("codec") && !m["codec"].is_null()) {
                const auto& c = m["codec"];
                if (c.contains("path"))
                    cfg.masks.codec_path = c["path"].get<std::string>();
                if (c.contains("fit")) {
                    CodecFitConfig f;
                    f.q = c["fit"].value("Q", f.q);
                    f.samples = c["fit"].value("samples", f.samples);
                    f.seed = c["fit"].value("seed", f.seed);
                    f.volume_seed = c["fit"].value("volume_seed", f.volume_seed);
                    cfg.masks.codec_fit = f;
                }
            }
        }

        if (j.contains("aggregate")) {
            const auto& a = j["aggregate"];
            cfg.aggregate.method = a.value("method", cfg.aggregate.method);
            if (a.contains("neighborhood"))
                cfg.aggregate.neighborhood = neighborhood_from_json(a["neighborhood"], &cfg.aggregate.neighborhood_name);
        }
        if (j.contains("segment")) {
            const auto& s = j["segment"];
            cfg.segment.method = s.value("method", cfg.segment.method);
            cfg.segment.partition.long_range_fraction =
                s.value("long_range_fraction", cfg.segment.partition.long_range_fraction);
            cfg.segment.partition.subsample_seed = s.value("seed", cfg.segment.partition.subsample_seed);
            cfg.segment.partition.gasp_evidence_weighted =
                s.value("gasp_evidence_weighted", cfg.segment.partition.gasp_evidence_weighted);
        }
        if (j.contains("postprocess")) {
            cfg.postprocess = j["postprocess"].value("enabled", cfg.postprocess);
            cfg.segment.partition.min_segment_size =
                j["postprocess"].value("min_segment_size", cfg.segment.partition.min_segment_size);
        }
        if (j.contains("eval"))
            cfg.evaluate = j["eval"].value("enabled", cfg.evaluate);
        if (j.contains("output"))
            cfg.write_mask_fields = j["output"].value("write_mask_fields", cfg.write_mask_fields);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, std::string("invalid config: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }

    validate(cfg);
    return cfg;
}

json to_json(const PipelineConfig& cfg)
{
    json j;
    j["threads"] = cfg.threads;
    if (cfg.labels_path)
        j["labels"] = *cfg.labels_path;
    if (cfg.gen) {
        const auto& g = *cfg.gen;
        j["gen"] = {{"shape", {g.shape.z, g.shape.y, g.shape.x}},
                    {"num_instances", g.num_instances},
                    {"anisotropy", {g.anisotropy.z, g.anisotropy.y, g.anisotropy.x}},
                    {"seed", g.seed}};
    } else {
        j["gen"] = nullptr;
    }
    json m;
    m["provider"] = cfg.masks.provider;
    m["files"] = cfg.masks.files;
    m["window"] = {cfg.masks.window.kz, cfg.masks.window.ky, cfg.masks.window.kx};
    json scales = json::array();
    for (auto s : cfg.masks.scales)
        scales.push_back({s.z, s.y, s.x});
    m["scales"] = scales;
    m["empty_near_boundary"] = cfg.masks.empty_near_boundary;
    if (cfg.masks.noise)
        m["noise"] = {{"flip_sigma", cfg.masks.noise->flip_sigma},
                      {"smoothing_radius", cfg.masks.noise->smoothing_radius},
                      {"seed", cfg.masks.noise->seed}};
    if (cfg.masks.codec_path || cfg.masks.codec_fit) {
        json c = json::object();
        if (cfg.masks.codec_path)
            c["path"] = *cfg.masks.codec_path;
        if (cfg.masks.codec_fit)
            c["fit"] = {{"Q", cfg.masks.codec_fit->q},
                        {"samples", cfg.masks.codec_fit->samples},
                        {"seed", cfg.masks.codec_fit->seed},
                        {"volume_seed", cfg.masks.codec_fit->volume_seed}};
        m["codec"] = c;
    }
    j["masks"] = m;
    j["aggregate"] = {{"method", cfg.aggregate.method}, {"neighborhood", neighborhood_to_json(cfg.aggregate)}};
    j["segment"] = {{"method", cfg.segment.method},
                    {"long_range_fraction", cfg.segment.partition.long_range_fraction},
                    {"seed", cfg.segment.partition.subsample_seed},
                    {"gasp_evidence_weighted", cfg.segment.partition.gasp_evidence_weighted}};
    j["postprocess"] = {{"enabled", cfg.postprocess}, {"min_segment_size", cfg.segment.partition.min_segment_size}};
    j["eval"] = {{"enabled", cfg.evaluate}};
    j["output"] = {{"write_mask_fields", cfg.write_mask_fields}};
    return j;
}

PipelineConfig load_config(const fs::path& path)
{
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Config, "cannot parse config " + path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::Config, e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("config_hash"))
        return parse_config(j["config"]);
    return parse_config(j);
}

std::string config_hash(const PipelineConfig& cfg)
{
    // Thread count never changes results, so it is not part of the identity.
    json j = to_json(cfg);
    j.erase("threads");
    const std::string text = j.dump();
    return io::hex64(io::fnv1a64(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

json to_json(const SegmentationReport& r)
{
    return {{"voi_split", r.voi_split}, {"voi_merge", r.voi_merge}, {"arand", r.arand}, {"cremi", r.cremi}};
}

LabelVolume load_or_generate_labels(const PipelineConfig& cfg)
{
    if (cfg.labels_path)
        return io::read_volume(*cfg.labels_path);
    const GenConfig& g = *cfg.gen;
    return generate_labels(g.shape, g.num_instances, g.anisotropy, g.seed, cfg.threads);
}

std::vector<CentralInstanceMask> sample_training_masks(const LabelVolume& labels, const MaskConfig& masks,
                                                       std::size_t count, std::uint64_t seed)
{
    const Shape3 s = labels.shape();
    std::mt19937_64 rng(seed);
    std::vector<CentralInstanceMask> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const Coord3 c = s.coord(static_cast<std::size_t>(rng() % s.voxel_count()));
        const Scale sc = masks.scales[i % masks.scales.size()];
        out.push_back(gt_mask(labels, c, masks.window, sc, masks.empty_near_boundary));
    }
    return out;
}

LinearMaskCodec fit_codec_for(const PipelineConfig& cfg)
{
    const CodecFitConfig f = cfg.masks.codec_fit.value_or(CodecFitConfig{});
    LabelVolume training;
    if (cfg.gen) {
        const GenConfig& g = *cfg.gen;
        training = generate_labels(g.shape, g.num_instances, g.anisotropy, f.volume_seed, cfg.threads);
    } else {
        training = io::read_volume(*cfg.labels_path);
    }
    const auto sample = sample_training_masks(training, cfg.masks, f.samples, f.seed);
    CodecFitOptions opts;
    opts.seed = f.seed;
    return fit_codec(sample, f.q, opts);
}

ProviderPtr build_provider(const PipelineConfig& cfg, const LabelVolume& gt, std::optional<LinearMaskCodec>* fitted)
{
    ProviderPtr provider;
    if (cfg.masks.provider == "file") {
        std::vector<fs::path> paths(cfg.masks.files.begin(), cfg.masks.files.end());
        provider = file_provider(paths);
    } else {
        provider = std::make_shared<OracleProvider>(gt, cfg.masks.window, cfg.masks.scales,
                                                    cfg.masks.empty_near_boundary);
    }
    if (cfg.masks.noise)
        provider = perturb(provider, *cfg.masks.noise);
    if (cfg.masks.codec_fit || cfg.masks.codec_path) {
        LinearMaskCodec codec = cfg.masks.codec_fit ? fit_codec_for(cfg) : read_codec(*cfg.masks.codec_path);
        if (fitted)
            *fitted = codec;
        provider = codec_provider(provider, std::move(codec));
    }
    return provider;
}

SignedGridGraph build_graph(const PipelineConfig& cfg, const MaskProvider& provider,
                            std::vector<MaskField>* fields_out)
{
    const Shape3 shape = provider.shape();
    if (cfg.aggregate.method == "baseline")
        return baseline_affinities(provider, shape, cfg.aggregate.neighborhood, cfg.masks.window, cfg.threads);
    if (provider.window() != cfg.masks.window)
        throw Error(ErrorKind::WindowMismatch, "provider window differs from configured window");
    std::vector<MaskField> fields;
    for (Scale s : cfg.masks.scales)
        fields.push_back(materialize(provider, s, cfg.threads));
    SignedGridGraph graph = aggregate_fields(fields, cfg.aggregate.neighborhood, cfg.threads);
    if (fields_out)
        *fields_out = std::move(fields);
    return graph;
}

Segmentation run_partition(const SegmentConfig& cfg, const SignedGridGraph& graph)
{
    if (cfg.method == "gasp")
        return gasp_average(graph, cfg.partition);
    return mutex_watershed(graph, cfg.partition);
}

PipelineOutputs execute(const PipelineConfig& cfg, std::vector<StageRecord>* stages)
{
    PipelineOutputs out;
    std::vector<StageRecord> local;
    std::vector<StageRecord>* log = stages ? stages : &local;
    validate(cfg);

    out.ground_truth = stage(log, cfg.labels_path ? "load" : "gen", [&] { return load_or_generate_labels(cfg); });
    const ProviderPtr provider = stage(log, "masks", [&] { return build_provider(cfg, out.ground_truth, &out.codec); });
    if (provider->shape() != out.ground_truth.shape())
        throw Error(ErrorKind::ShapeMismatch, "mask provider shape differs from label volume");
    out.graph = stage(log, "aggregate", [&] {
        return build_graph(cfg, *provider, cfg.write_mask_fields ? &out.mask_fields : nullptr);
    });
    out.segmentation = stage(log, "segment", [&] { return run_partition(cfg.segment, out.graph); });
    if (cfg.postprocess)
        out.postprocessed = stage(log, "postprocess", [&] {
            return remove_small_segments(out.segmentation, out.graph, cfg.segment.partition.min_segment_size);
        });
    if (cfg.evaluate)
        out.report = stage(log, "eval", [&] { return evaluate(out.final_segmentation(), out.ground_truth); });
    out.stages = *log;
    return out;
}

namespace {

json seeds_json(const PipelineConfig& cfg)
{
    json s;
    if (cfg.gen)
        s["gen"] = cfg.gen->seed;
    if (cfg.masks.noise)
        s["noise"] = cfg.masks.noise->seed;
    if (cfg.masks.codec_fit) {
        s["codec_fit"] = cfg.masks.codec_fit->seed;
        s["codec_volume"] = cfg.masks.codec_fit->volume_seed;
    }
    s["long_range_subsample"] = cfg.segment.partition.subsample_seed;
    return s;
}

json stages_json(const std::vector<StageRecord>& stages)
{
    json a = json::array();
    for (const auto& s : stages)
        a.push_back({{"name", s.name}, {"wall_ms", s.wall_ms}, {"ok", s.ok}});
    return a;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg, const fs::path& run_dir)
{
    PipelineResult result;
    result.run_dir = run_dir;
    json manifest;
    manifest["tool"] = "maskaggr";
    manifest["version"] = kVersion;
    manifest["config"] = to_json(cfg);
    manifest["config_hash"] = config_hash(cfg);
    manifest["seeds"] = seeds_json(cfg);
    manifest["threads"] = cfg.threads;
    manifest["error"] = nullptr;

    json inputs = json::object();
    json outputs = json::object();
    std::vector<StageRecord> stages;
    try {
        fs::create_directories(run_dir);
        if (cfg.labels_path) {
            inputs[io::header_path(*cfg.labels_path).string()] = io::file_hash(io::header_path(*cfg.labels_path));
            inputs[io::payload_path(*cfg.labels_path).string()] = io::file_hash(io::payload_path(*cfg.labels_path));
        }
        for (const auto& f : cfg.masks.files)
            inputs[io::payload_path(f).string()] = io::file_hash(io::payload_path(f));
        if (cfg.masks.codec_path && !cfg.masks.codec_fit)
            inputs[io::payload_path(*cfg.masks.codec_path).string()] =
                io::file_hash(io::payload_path(*cfg.masks.codec_path));

        PipelineOutputs out = execute(cfg, &stages);

        auto record = [&](const std::string& name, const fs::path& base) {
            outputs[name] = io::file_hash(io::payload_path(base));
        };
        stage(&stages, "write", [&] {
            io::write_volume(out.ground_truth, run_dir / "ground_truth");
            record("ground_truth", run_dir / "ground_truth");
            if (out.codec) {
                write_codec(*out.codec, run_dir / "codec");
                record("codec", run_dir / "codec");
            }
            for (std::size_t i = 0; i < out.mask_fields.size(); ++i) {
                const fs::path base = run_dir / ("masks_scale" + std::to_string(i));
                write_mask_field(out.mask_fields[i], base);
                record("masks_scale" + std::to_string(i), base);
            }
            io::write_graph(out.graph, run_dir / "affinities");
            outputs["graph"] = io::file_hash(run_dir / "affinities.graph.raw");
            io::write_volume(out.segmentation, run_dir / "segmentation");
            record("segmentation", run_dir / "segmentation");
            if (out.postprocessed) {
                io::write_volume(*out.postprocessed, run_dir / "postprocessed");
                record("postprocessed", run_dir / "postprocessed");
            }
            if (out.report) {
                io::write_text(run_dir / "metrics.json", to_json(*out.report).dump(2) + "\n");
                outputs["metrics"] = io::file_hash(run_dir / "metrics.json");
            }
        });
        result.report = out.report;
        if (out.report)
            manifest["metrics"] = to_json(*out.report);
    } catch (const Error& e) {
        result.exit_code = exit_code_for(e.kind());
        manifest["error"] = {{"stage", stages.empty() ? std::string("setup") : stages.back().name},
                             {"kind", to_string(e.kind())},
                             {"message", e.what()},
                             {"exit_code", static_cast<int>(result.exit_code)}};
    } catch (const std::exception& e) {
        result.exit_code = ExitCode::IoError;
        manifest["error"] = {{"stage", stages.empty() ? std::string("setup") : stages.back().name},
                             {"kind", "io"},
                             {"message", e.what()},
                             {"exit_code", static_cast<int>(result.exit_code)}};
    }
    manifest["stages"] = stages_json(stages);
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    manifest["exit_code"] = static_cast<int>(result.exit_code);
    result.manifest = manifest;
    try {
        io::write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");
    } catch (const std::exception&) {
        if (result.exit_code == ExitCode::Success)
            result.exit_code = ExitCode::IoError;
    }
    return result;
}

std::vector<SweepRow> run_sweep(const PipelineConfig& base, const SweepSpec& spec)
{
    std::vector<SweepRow> rows;
    for (double sigma : spec.flip_sigmas)
        for (const auto& method : spec.methods)
            for (std::uint64_t seed : spec.noise_seeds) {
                PipelineConfig cfg = base;
                NoiseConfig noise = base.masks.noise.value_or(NoiseConfig{});
                noise.flip_sigma = sigma;
                noise.seed = seed;
                cfg.masks.noise = noise;
                cfg.aggregate.method = method;
                cfg.evaluate = true;
                const PipelineOutputs out = execute(cfg);
                rows.push_back({sigma, method, seed, *out.report, out.graph.mean_variance()});
            }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream os;
    os.precision(17);
    os << "sigma,method,seed,cremi,voi_split,voi_merge,arand,mean_variance\n";
    for (const auto& r : rows)
        os << r.flip_sigma << "," << r.method << "," << r.noise_seed << "," << r.report.cremi << ","
           << r.report.voi_split << "," << r.report.voi_merge << "," << r.report.arand << "," << r.mean_variance
           << "\n";
    return os.str();
}

}  // namespace maskaggr
