#include "gfrs/io.hpp"
#include "gfrs/metrics.hpp"
#include "gfrs/noise.hpp"
#include "gfrs/point_cloud.hpp"
#include "gfrs/resample.hpp"
#include "gfrs/shapes.hpp"
#include "gfrs/training.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace gfrs;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

PointCloud load_cloud(const std::string& path) {
    if (has_suffix(path, ".ply")) return read_ply(path).cloud;
    return read_xyz(path);
}

void save_cloud(const std::string& path, const PointCloud& cloud) {
    if (has_suffix(path, ".ply")) write_ply(path, cloud);
    else write_xyz(path, cloud);
}

AnalyticSurface parse_surface(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    std::vector<double> vals;
    if (colon != std::string::npos) {
        std::string rest = spec.substr(colon + 1);
        std::replace(rest.begin(), rest.end(), ',', ' ');
        std::istringstream f(rest);
        double v;
        while (f >> v) vals.push_back(v);
    }
    AnalyticSurface s;
    auto want = [&](AnalyticSurface::Kind k, std::size_t n, const char* form) {
        if (vals.size() != n) throw UsageError(std::string("surface spec must be '") + form + "'");
        s.kind = k;
        s.a = vals[0];
        if (n > 1) s.b = vals[1];
        if (n > 2) s.c = vals[2];
    };
    if (name == "sphere") want(AnalyticSurface::Kind::sphere, 1, "sphere:R");
    else if (name == "torus") want(AnalyticSurface::Kind::torus, 2, "torus:R,r");
    else if (name == "box") want(AnalyticSurface::Kind::box, 3, "box:hx,hy,hz");
    else if (name == "capsule") want(AnalyticSurface::Kind::capsule, 2, "capsule:h,r");
    else throw UsageError("unknown surface '" + name + "'");
    return s;
}

NoiseKind parse_noise(const std::string& name) {
    if (name == "gaussian") return NoiseKind::isotropic_gaussian;
    if (name == "laplace") return NoiseKind::laplace;
    if (name == "discrete") return NoiseKind::discrete;
    if (name == "aniso") return NoiseKind::anisotropic_gaussian;
    if (name == "unidir") return NoiseKind::unidirectional_gaussian;
    if (name == "uniform") return NoiseKind::uniform_ball;
    throw UsageError("unknown noise kind '" + name + "'");
}

Regularizer parse_reg(const std::string& name) {
    if (name == "none") return Regularizer::none;
    if (name == "glr") return Regularizer::glr;
    if (name == "rglr") return Regularizer::rglr;
    throw UsageError("unknown regularizer '" + name + "'");
}

std::vector<PointCloud> load_shape_dir(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string p = entry.path().string();
        if (has_suffix(p, ".xyz") || has_suffix(p, ".ply")) files.push_back(p);
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no .xyz or .ply files in " + dir);
    std::vector<PointCloud> clouds;
    for (const auto& f : files) clouds.push_back(normalize_unit_sphere(load_cloud(f)));
    return clouds;
}

struct ResampleFlags {
    int steps = 50;
    double alpha = 0.15;
    double decay = 0.95;
    std::string reg = "none";
    double lambda = 0.1;
    int graph_k = 8;
    int dump_every = 0;
    double radius = 0.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--radius", radius,
                        "override the neighborhood radius (normalized units)");
        cmd->add_option("--steps", steps, "ascent steps");
        cmd->add_option("--alpha", alpha, "initial step size");
        cmd->add_option("--decay", decay, "step decay per iteration");
        cmd->add_option("--reg", reg, "regularizer: none|glr|rglr");
        cmd->add_option("--lambda", lambda, "regularization strength");
        cmd->add_option("--graph-k", graph_k, "kNN graph neighbor count");
        cmd->add_option("--dump-every", dump_every, "dump intermediate clouds every J steps");
    }

    ResampleConfig config(const std::string& out_path,
                          const NormalizeTransform& transform) const {
        ResampleConfig cfg;
        cfg.steps = steps;
        cfg.alpha1 = alpha;
        cfg.decay = decay;
        cfg.reg = parse_reg(reg);
        cfg.lambda = lambda;
        cfg.graph_k = graph_k;
        cfg.dump_every = dump_every;
        if (dump_every > 0) {
            cfg.on_step = [out_path, transform](int step, const PointCloud& cloud) {
                PointCloud dump = cloud;
                dump.transform = transform;
                save_cloud(out_path + ".step" + std::to_string(step) + ".xyz",
                           denormalize(dump));
            };
        }
        return cfg;
    }
};

int run(int argc, char** argv) {
    CLI::App app{"gradient-field point set resampling"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "Eigen thread count")->default_val(1);

    // gen
    auto* gen = app.add_subcommand("gen", "sample a synthetic shape");
    std::string gen_shape, gen_out, gen_mesh, gen_sampler = "uniform";
    int gen_points = 2048, gen_mesh_res = 48;
    std::uint64_t gen_seed = 0;
    gen->add_option("--shape", gen_shape, "sphere:R | torus:R,r | box:hx,hy,hz | capsule:h,r")
        ->required();
    gen->add_option("--points", gen_points, "point count");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out", gen_out, "output cloud (.xyz or .ply)")->required();
    gen->add_option("--mesh", gen_mesh, "also write a reference mesh (.ply)");
    gen->add_option("--mesh-res", gen_mesh_res, "mesh resolution");
    gen->add_option("--sampler", gen_sampler, "uniform | stratified");

    // corrupt
    auto* corrupt = app.add_subcommand("corrupt", "degrade a cloud");
    std::string cor_in, cor_out, cor_noise = "gaussian";
    double cor_level = 0.02;
    std::uint64_t cor_seed = 0;
    corrupt->add_option("--in", cor_in, "input cloud")->required();
    corrupt->add_option("--noise", cor_noise, "gaussian|laplace|discrete|aniso|unidir|uniform");
    corrupt->add_option("--level", cor_level, "scale, fraction of bounding radius");
    corrupt->add_option("--seed", cor_seed, "random seed");
    corrupt->add_option("--out", cor_out, "output cloud")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a gradient-field model");
    std::string tr_dir, tr_ckpt, tr_trace, tr_task = "denoise";
    TrainConfig tr_cfg;
    tr_cfg.patch_size = 512;
    int tr_ratio = 4;
    train_cmd->add_option("--shapes-dir", tr_dir, "directory of clean clouds")->required();
    train_cmd->add_option("--iters", tr_cfg.iterations, "training iterations");
    train_cmd->add_option("--lr", tr_cfg.lr, "learning rate");
    train_cmd->add_option("--patch", tr_cfg.patch_size, "patch size");
    train_cmd->add_option("--queries", tr_cfg.queries_per_point, "queries per point");
    train_cmd->add_option("--max-queries", tr_cfg.max_queries, "per-iteration query cap");
    train_cmd->add_option("--noise-lo", tr_cfg.noise_lo, "curriculum lower noise level");
    train_cmd->add_option("--noise-hi", tr_cfg.noise_hi, "curriculum upper noise level");
    train_cmd->add_option("--seed", tr_cfg.seed, "random seed");
    train_cmd->add_option("--task", tr_task, "denoise | upsample");
    train_cmd->add_option("--ratio", tr_ratio, "upsampling ratio (upsample task)");
    train_cmd->add_option("--trace", tr_trace, "loss trace output file");
    ModelConfig tr_model_cfg;
    train_cmd->add_option("--radius-factor", tr_model_cfg.radius_factor,
                          "neighborhood radius as a multiple of the mean point spacing");
    train_cmd->add_option("--k-feat", tr_model_cfg.k_feat, "edge-convolution neighbor count");
    train_cmd->add_option("--k-max", tr_model_cfg.k_max,
                          "cap on context points aggregated per query");
    train_cmd->add_option("--ckpt", tr_ckpt, "checkpoint output file")->required();

    // denoise
    auto* den = app.add_subcommand("denoise", "restore a noisy cloud");
    std::string den_in, den_ckpt, den_out;
    ResampleFlags den_flags;
    den->add_option("--in", den_in, "input cloud")->required();
    den->add_option("--ckpt", den_ckpt, "model checkpoint")->required();
    den->add_option("--out", den_out, "output cloud")->required();
    den_flags.attach(den);

    // upsample
    auto* ups = app.add_subcommand("upsample", "densify a sparse cloud");
    std::string ups_in, ups_ckpt, ups_out;
    int ups_ratio = 4;
    double ups_sigma = 0.02;
    std::uint64_t ups_seed = 0;
    ResampleFlags ups_flags;
    ups->add_option("--in", ups_in, "sparse input cloud")->required();
    ups->add_option("--ratio", ups_ratio, "upsampling ratio (>= 2)");
    ups->add_option("--init-sigma", ups_sigma, "initialization jitter std");
    ups->add_option("--seed", ups_seed, "initialization seed");
    ups->add_option("--ckpt", ups_ckpt, "model checkpoint")->required();
    ups->add_option("--out", ups_out, "output cloud")->required();
    ups_flags.attach(ups);

    // eval
    auto* ev = app.add_subcommand("eval", "compare a prediction against ground truth");
    std::string ev_pred, ev_gt, ev_mesh, ev_surface;
    ev->add_option("--pred", ev_pred, "predicted cloud")->required();
    ev->add_option("--gt", ev_gt, "ground-truth cloud")->required();
    auto* ev_mesh_opt = ev->add_option("--mesh", ev_mesh, "reference mesh (.ply) for point-to-mesh");
    ev->add_option("--surface", ev_surface, "analytic surface spec for point-to-surface")
        ->excludes(ev_mesh_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            std::cout << app.help();
            return 0;
        }
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    Eigen::setNbThreads(threads);

    if (gen->parsed()) {
        ShapeSpec spec;
        spec.surface = parse_surface(gen_shape);
        spec.count = gen_points;
        spec.seed = gen_seed;
        spec.sampler = gen_sampler == "stratified" ? ShapeSampler::stratified
                                                   : ShapeSampler::uniform_area;
        const ShapeSample sample = sample_shape(spec, gen_mesh.empty() ? 0 : gen_mesh_res);
        save_cloud(gen_out, sample.cloud);
        if (!gen_mesh.empty()) write_ply(gen_mesh, *sample.mesh);
    } else if (corrupt->parsed()) {
        NoiseSpec spec;
        spec.kind = parse_noise(cor_noise);
        spec.scale = cor_level;
        spec.seed = cor_seed;
        save_cloud(cor_out, apply_noise(load_cloud(cor_in), spec));
    } else if (train_cmd->parsed()) {
        if (tr_task == "upsample") tr_cfg.task = TrainTask::upsample;
        else if (tr_task != "denoise") throw UsageError("unknown task '" + tr_task + "'");
        tr_cfg.upsample_ratio = tr_ratio;
        tr_cfg.trace_path = tr_trace;
        const TrainResult result = train(load_shape_dir(tr_dir), tr_cfg, tr_model_cfg);
        save_checkpoint(tr_ckpt, result.model);
    } else if (den->parsed()) {
        const PointCloud raw = load_cloud(den_in);
        if (den_flags.steps == 0) {
            save_cloud(den_out, raw); // zero steps: exact identity
            return 0;
        }
        GradientFieldModel model = load_checkpoint(den_ckpt);
        if (den_flags.radius > 0.0) model.cfg.fixed_radius = den_flags.radius;
        const PointCloud noisy = normalize_unit_sphere(raw);
        const ResampleConfig cfg = den_flags.config(den_out, *noisy.transform);
        PointCloud restored = denoise(model, noisy, cfg);
        restored.transform = noisy.transform;
        save_cloud(den_out, denormalize(restored));
    } else if (ups->parsed()) {
        GradientFieldModel model = load_checkpoint(ups_ckpt);
        if (ups_flags.radius > 0.0) model.cfg.fixed_radius = ups_flags.radius;
        const PointCloud sparse = normalize_unit_sphere(load_cloud(ups_in));
        const ResampleConfig cfg = ups_flags.config(ups_out, *sparse.transform);
        PointCloud dense = upsample(model, sparse, ups_ratio, ups_sigma, ups_seed, cfg);
        dense.transform = sparse.transform;
        save_cloud(ups_out, denormalize(dense));
    } else if (ev->parsed()) {
        const PointCloud pred = load_cloud(ev_pred);
        const PointCloud gt = load_cloud(ev_gt);
        std::vector<std::pair<std::string, double>> report;
        report.emplace_back("CDx1e4", chamfer(pred, gt) * 1e4);
        report.emplace_back("HDx1e3", hausdorff(pred, gt) * 1e3);
        if (!ev_mesh.empty()) {
            const PlyContents contents = read_ply(ev_mesh);
            if (!contents.mesh) throw UsageError("mesh file has no faces: " + ev_mesh);
            report.emplace_back("P2Mx1e5", point_to_mesh(pred, *contents.mesh) * 1e5);
        } else if (!ev_surface.empty()) {
            const SurfaceDistances sd = point_to_surface(pred, parse_surface(ev_surface));
            double sum = 0.0;
            for (const double d : sd.per_point) sum += d * d;
            report.emplace_back("P2Mx1e5", sum / static_cast<double>(sd.per_point.size()) * 1e5);
        }
        write_metric_report(std::cout, report);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
