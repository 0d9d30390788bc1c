#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "cheapnvs/ablation.hpp"
#include "cheapnvs/bench.hpp"
#include "cheapnvs/dataset.hpp"
#include "cheapnvs/errors.hpp"
#include "cheapnvs/eval.hpp"
#include "cheapnvs/io.hpp"
#include "cheapnvs/model.hpp"
#include "cheapnvs/training.hpp"
#include "cheapnvs/warp_backend.hpp"

namespace fs = std::filesystem;
using namespace cheapnvs;

namespace {

struct PoseFlags {
  double max_translation = 0.05;
  double max_rotation = 2.0;

  void add(CLI::App* app) {
    app->add_option("--max-translation", max_translation, "Translation bound, fraction of median depth")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--max-rotation", max_rotation, "Rotation bound in degrees")->check(CLI::NonNegativeNumber);
  }
  geometry::PoseSamplerConfig config() const { return {max_translation, max_rotation, 0}; }
};

struct ModelFlags {
  int base_channels = 16;
  int stages = 4;
  int expand_ratio = 4;
  int extrinsics_hidden = 64;
  int extrinsics_out = 256;
  std::string skips = "mask,inpaint";
  double flow_scale = 32.0;

  void add(CLI::App* app) {
    app->add_option("--base-channels", base_channels, "Channels of the first encoder stage");
    app->add_option("--stages", stages, "Encoder stages (each halves resolution)");
    app->add_option("--expand-ratio", expand_ratio, "Inverted-residual expansion");
    app->add_option("--extrinsics-hidden", extrinsics_hidden, "Pose MLP hidden width");
    app->add_option("--extrinsics-out", extrinsics_out, "Pose embedding width");
    app->add_option("--skips", skips, "Decoders fed by skip connections: none or a list of flow,mask,inpaint");
    app->add_option("--flow-scale", flow_scale, "Largest predicted offset in pixels");
  }
  model::ModelConfig config() const {
    model::ModelConfig cfg;
    cfg.base_channels = base_channels;
    cfg.encoder_stages = stages;
    cfg.expand_ratio = expand_ratio;
    cfg.extrinsics_hidden = extrinsics_hidden;
    cfg.extrinsics_out = extrinsics_out;
    cfg.skip_targets = model::parse_skip_targets(skips);
    cfg.flow_scale = flow_scale;
    cfg.validate();
    return cfg;
  }
};

struct TrainFlags {
  int epochs = 20;
  double lr = 1e-4;
  int batch_size = 32;
  int crop = 224;
  bool no_hflip = false;
  int activation_epoch = 5;
  bool full_image_l1 = false;
  double ssim_weight = 0.0;
  double ffl_weight = 0.0;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--batch-size", batch_size, "Samples per step");
    app->add_option("--crop", crop, "Square random crop, 0 for full frames");
    app->add_flag("--no-hflip", no_hflip, "Disable random horizontal flips");
    app->add_option("--activation-epoch", activation_epoch, "First epoch with the inpainting loss");
    app->add_flag("--full-image-l1", full_image_l1, "Inpainting L1 over the full image");
    app->add_option("--ssim-weight", ssim_weight, "Weight of the 1 - SSIM inpainting term");
    app->add_option("--ffl-weight", ffl_weight, "Weight of the focal frequency inpainting term");
  }
  training::TrainConfig config(std::uint64_t seed, const PoseFlags& poses, warp::Backend backend) const {
    training::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.batch_size = batch_size;
    cfg.crop = crop;
    cfg.hflip = !no_hflip;
    cfg.seed = seed;
    cfg.warp_backend = backend;
    cfg.schedule.activation_epoch = activation_epoch;
    cfg.poses = poses.config();
    cfg.loss.full_image = full_image_l1;
    cfg.loss.ssim_weight = ssim_weight;
    cfg.loss.ffl_weight = ffl_weight;
    return cfg;
  }
};

training::InpaintTeacher parse_teacher(const std::string& name) {
  if (name == "classical") return training::classical_fill_teacher();
  if (name == "mean") return training::mean_fill_teacher();
  throw ValidationError("unknown teacher '" + name + "' (expected classical|mean)");
}

warp::Backend select_backend(const std::string& name, const std::string& native_lib) {
  const auto backend = warp::parse_backend(name);
  if (!native_lib.empty()) warp::load_native_kernel(native_lib);
  return backend;
}

struct Corpus {
  std::vector<dataset::SampleRecord> records;
  std::vector<RGBDFrame> frames;
};

Corpus load_corpus(const fs::path& root) {
  Corpus c;
  c.records = dataset::scan_directory(root);
  if (c.records.empty()) throw ValidationError("no samples found under " + root.string());
  c.frames = dataset::load_all(c.records);
  return c;
}

std::vector<std::optional<geometry::Extrinsics>> frozen_poses(const Corpus& c) {
  std::vector<std::optional<geometry::Extrinsics>> out;
  for (const auto& r : c.records) out.push_back(r.pose ? std::optional(io::read_pose(*r.pose)) : std::nullopt);
  return out;
}

std::vector<std::string> names(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& r : c.records) out.push_back(r.name);
  return out;
}

Image shift_visualization(const Image& shift) {
  float peak = 1e-6F;
  for (float v : shift.data) peak = std::max(peak, std::abs(v));
  Image vis(shift.height, shift.width, 3, 0.5F);
  for (std::size_t p = 0; p < shift.pixels(); ++p) {
    vis.data[p * 3 + 0] = 0.5F + 0.5F * shift.data[p * 2 + 0] / peak;
    vis.data[p * 3 + 1] = 0.5F + 0.5F * shift.data[p * 2 + 1] / peak;
  }
  return vis;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  if (!out) throw IoError(path.string(), "write failed");
}

std::vector<std::pair<int, int>> parse_resolutions(const std::string& list) {
  std::vector<std::pair<int, int>> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto x = item.find('x');
    try {
      std::size_t used = 0;
      if (x == std::string::npos) {
        const int s = std::stoi(item, &used);
        if (used != item.size()) throw std::invalid_argument(item);
        out.emplace_back(s, s);
      } else {
        const int h = std::stoi(item.substr(0, x), &used);
        const int w = std::stoi(item.substr(x + 1));
        out.emplace_back(h, w);
      }
    } catch (const std::logic_error&) {
      throw ValidationError("bad resolution '" + item + "' (expected N or HxW)");
    }
    if (out.back().first < 4 || out.back().second < 4) throw ValidationError("resolution too small: " + item);
  }
  if (out.empty()) throw ValidationError("no resolutions given");
  return out;
}

}  // namespace

// CLI11 only reads config files on the root app, so each subcommand applies
// its own: keys are long option names, and options given on the command line
// are left alone.
void apply_config_file(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  for (const auto& item : CLI::ConfigTOML().from_file(path)) {
    if (!item.parents.empty() || item.name == "++" || item.name == "--") {
      throw CLI::ConversionError(path + ": sections are not supported");
    }
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option("--" + item.name);
    } catch (const CLI::OptionNotFound&) {
      throw CLI::ConversionError(path + ": unknown option '" + item.name + "' for " + sub->get_name());
    }
    if (item.name == "config") throw CLI::ConversionError(path + ": nested config files are not supported");
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

int main(int argc, char** argv) {
  CLI::App app{"Single-image novel view synthesis: data generation, training, inference, evaluation, benchmarks"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "Intra-op threads for tensor math")->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic RGB-D corpus");
  fs::path synth_out;
  int synth_count = 4;
  int synth_size = 64;
  std::uint64_t synth_seed = 0;
  std::string synth_kinds = "plane,step,gradient";
  synth->add_option("--out", synth_out, "Corpus root")->required();
  synth->add_option("--count", synth_count, "Number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--size", synth_size, "Square side in pixels");
  synth->add_option("--seed", synth_seed, "Texture seed");
  synth->add_option("--kinds", synth_kinds, "Depth layouts to cycle through");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Compute warp labels for every sample of a corpus");
  fs::path gen_root;
  fs::path gen_out;
  std::uint64_t gen_seed = 0;
  std::string gen_backend = "reference";
  std::string gen_native;
  std::string gen_teacher = "classical";
  PoseFlags gen_poses;
  gen->add_option("--root", gen_root, "Corpus root")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Pose seed");
  gen->add_option("--backend", gen_backend, "Warp backend: reference|native");
  gen->add_option("--native-lib", gen_native, "Shared library exporting the native warp kernel");
  gen->add_option("--teacher", gen_teacher, "Hole filler: classical|mean");
  gen_poses.add(gen);

  // train
  auto* train = app.add_subcommand("train", "Train a model on a corpus");
  fs::path train_root;
  fs::path train_ckpt = "model.ckpt";
  fs::path train_log = "train_log.csv";
  std::uint64_t train_seed = 0;
  std::string train_backend = "reference";
  std::string train_native;
  std::string train_teacher = "classical";
  PoseFlags train_poses;
  ModelFlags train_model;
  TrainFlags train_flags;
  train->add_option("--root", train_root, "Corpus root");
  train->add_option("--ckpt", train_ckpt, "Checkpoint to write");
  train->add_option("--log", train_log, "Per-epoch CSV loss log");
  train->add_option("--seed", train_seed, "Seed for weights, crops, flips and poses");
  train->add_option("--backend", train_backend, "Warp backend: reference|native");
  train->add_option("--native-lib", train_native, "Shared library exporting the native warp kernel");
  train->add_option("--teacher", train_teacher, "Hole filler: classical|mean");
  train_poses.add(train);
  train_model.add(train);
  train_flags.add(train);

  // infer
  auto* infer = app.add_subcommand("infer", "Render one novel view");
  fs::path infer_ckpt;
  fs::path infer_image;
  fs::path infer_depth;
  fs::path infer_pose;
  fs::path infer_out;
  bool infer_parallel = false;
  infer->add_option("--ckpt", infer_ckpt, "Checkpoint")->required();
  infer->add_option("--image", infer_image, "Source RGB")->required();
  infer->add_option("--depth", infer_depth, "Depth map (.nvsd or 16-bit .png with .scale sidecar)")->required();
  infer->add_option("--pose", infer_pose, "Target pose, 12 floats row-major [R|t]")->required();
  infer->add_option("--out", infer_out, "Output directory")->required();
  infer->add_flag("--parallel", infer_parallel, "Run the decoders concurrently");

  // eval
  auto* evalc = app.add_subcommand("eval", "Warping and inpainting metrics on a corpus");
  fs::path eval_ckpt;
  bool eval_oracle = false;
  fs::path eval_root;
  fs::path eval_out = "eval";
  std::uint64_t eval_seed = 0;
  std::string eval_teacher = "classical";
  PoseFlags eval_poses;
  auto* ckpt_opt = evalc->add_option("--ckpt", eval_ckpt, "Checkpoint");
  auto* oracle_opt = evalc->add_flag("--oracle", eval_oracle, "Score the oracle labels instead of a model");
  ckpt_opt->excludes(oracle_opt);
  evalc->add_option("--root", eval_root, "Corpus root")->required();
  evalc->add_option("--out", eval_out, "Report directory");
  evalc->add_option("--seed", eval_seed, "Pose seed for frames without a frozen pose");
  evalc->add_option("--teacher", eval_teacher, "Hole filler: classical|mean");
  eval_poses.add(evalc);

  // bench
  auto* benchc = app.add_subcommand("bench", "Latency and structure report");
  fs::path bench_ckpt;
  std::string bench_mode = "both";
  std::string bench_res = "224,512,762x1008";
  int bench_runs = 10;
  int bench_warmup = 2;
  std::uint64_t bench_seed = 0;
  fs::path bench_out = "bench";
  benchc->add_option("--ckpt", bench_ckpt, "Checkpoint (default: freshly initialised model)");
  benchc->add_option("--mode", bench_mode, "sequential|parallel|both");
  benchc->add_option("--res", bench_res, "Resolutions, N or HxW, comma separated");
  benchc->add_option("--runs", bench_runs, "Timed runs per configuration (>= 10)");
  benchc->add_option("--warmup", bench_warmup, "Untimed runs before timing");
  benchc->add_option("--seed", bench_seed, "Seed for the frame, pose and fresh weights");
  benchc->add_option("--out", bench_out, "Report directory");
  ModelFlags bench_model;
  bench_model.add(benchc);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Skip-connection ablation");
  fs::path ablate_root;
  fs::path ablate_out = "ablation";
  std::uint64_t ablate_seed = 0;
  PoseFlags ablate_poses;
  ModelFlags ablate_model;
  TrainFlags ablate_flags;
  ablate->add_option("--root", ablate_root, "Corpus root")->required();
  ablate->add_option("--out", ablate_out, "Report directory");
  ablate->add_option("--seed", ablate_seed, "Seed for weights, augmentation and poses");
  ablate_poses.add(ablate);
  ablate_model.add(ablate);
  ablate_flags.add(ablate);

  std::map<CLI::App*, std::string> config_files;
  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--config", config_files[sub],
                    "TOML/INI file with option values; command-line flags take precedence");
  }

  try {
    app.parse(argc, argv);
    for (auto* sub : app.get_subcommands()) apply_config_file(sub, config_files[sub]);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    torch::set_num_threads(threads);

    if (*synth) {
      std::vector<dataset::SceneKind> kinds;
      std::stringstream ss(synth_kinds);
      for (std::string k; std::getline(ss, k, ',');) kinds.push_back(dataset::parse_scene_kind(k));
      if (kinds.empty()) throw ValidationError("no scene kinds given");
      for (int i = 0; i < synth_count; ++i) {
        const auto frame = dataset::synth_scene(kinds[static_cast<std::size_t>(i) % kinds.size()], synth_size,
                                                geometry::derive_seed(synth_seed, 0, static_cast<std::uint64_t>(i)));
        char stem[32];
        std::snprintf(stem, sizeof stem, "scene_%03d", i);
        io::write_png8(synth_out / "rgb" / (std::string(stem) + ".png"), frame.rgb);
        io::write_nvsd(synth_out / "depth" / (std::string(stem) + ".nvsd"), frame.depth);
      }
      std::cout << "wrote " << synth_count << " scenes to " << synth_out.string() << "\n";
    } else if (*gen) {
      const auto backend = select_backend(gen_backend, gen_native);
      const auto teacher = parse_teacher(gen_teacher);
      const auto corpus = load_corpus(gen_root);
      eval::EvalOptions opts;
      opts.seed = gen_seed;
      opts.poses = gen_poses.config();
      opts.poses.validate();
      opts.frozen_poses = frozen_poses(corpus);
      for (std::size_t i = 0; i < corpus.frames.size(); ++i) {
        const auto& frame = corpus.frames[i];
        const auto pose = eval::eval_pose(opts, frame, i);
        const auto k = geometry::Intrinsics::centered(frame.width(), frame.height());
        const auto sample = warp::assemble_sample(frame, pose, warp::run_forward_warp(backend, frame, pose, k), teacher);
        const auto dir = gen_out / corpus.records[i].name;
        io::write_nvss(dir / "shift.nvss", sample.labels.shift);
        io::write_png8(dir / "mask.png", sample.labels.mask);
        io::write_png8(dir / "warped.png", sample.labels.warped_rgb);
        io::write_png8(dir / "inpaint.png", sample.inpaint_gt);
        io::write_png8(dir / "target.png", sample.target_gt);
        io::write_nvsd(dir / "target_depth.nvsd", sample.labels.target_depth);
        io::write_pose(dir / "pose.txt", pose);
      }
      std::cout << "wrote labels for " << corpus.frames.size() << " samples to " << gen_out.string() << "\n";
    } else if (*train) {
      if (train_root.empty() && train_flags.epochs > 0) throw ValidationError("train: --root is required when epochs > 0");
      const auto backend = select_backend(train_backend, train_native);
      const auto teacher = parse_teacher(train_teacher);
      auto cfg = train_flags.config(train_seed, train_poses, backend);
      cfg.checkpoint_path = train_ckpt;
      cfg.log_path = train_log;
      model::ModelBundle bundle(train_model.config(), train_seed);
      cfg.validate(bundle.config());
      if (cfg.epochs == 0) {
        bundle.save(train_ckpt);
        training::write_log_csv(train_log, {});
        std::cout << "wrote initial checkpoint " << train_ckpt.string() << "\n";
      } else {
        const auto corpus = load_corpus(train_root);
        training::fit(corpus.frames, bundle, cfg, teacher, [](const training::EpochLog& e) {
          std::printf("epoch %3d  L_flow %.5f  L_mask %.5f  L_inpaint %.5f  lambda (%g,%g,%g)\n", e.epoch, e.flow,
                      e.mask, e.inpaint, e.lambda.inpaint, e.lambda.mask, e.lambda.flow);
          std::fflush(stdout);
        });
        std::cout << "wrote " << train_ckpt.string() << " and " << train_log.string() << "\n";
      }
    } else if (*infer) {
      auto bundle = model::ModelBundle::load(infer_ckpt);
      dataset::SampleRecord rec{infer_image.stem().string(), infer_image, infer_depth, std::nullopt};
      const auto frame = dataset::load_sample(rec);
      const auto pose = io::read_pose(infer_pose);
      const auto pred = bundle.predict(frame, pose, infer_parallel);
      io::write_png8(infer_out / "synth.png", pred.synthesized);
      io::write_png8(infer_out / "mask.png", pred.mask);
      io::write_png8(infer_out / "inpaint.png", pred.inpaint);
      io::write_png8(infer_out / "warped.png", pred.warped);
      io::write_nvss(infer_out / "shift.nvss", pred.shift);
      io::write_png8(infer_out / "shift_vis.png", shift_visualization(pred.shift));
      std::cout << "wrote " << infer_out.string() << "\n";
    } else if (*evalc) {
      if (!eval_oracle && eval_ckpt.empty()) throw ValidationError("eval: give --ckpt or --oracle");
      const auto corpus = load_corpus(eval_root);
      eval::EvalOptions opts;
      opts.seed = eval_seed;
      opts.poses = eval_poses.config();
      opts.poses.validate();
      opts.frozen_poses = frozen_poses(corpus);
      opts.names = names(corpus);
      opts.teacher = parse_teacher(eval_teacher);
      std::optional<model::ModelBundle> bundle;
      if (!eval_oracle) bundle.emplace(model::ModelBundle::load(eval_ckpt));
      const auto report = eval::evaluate(bundle ? &*bundle : nullptr, corpus.frames, opts);
      const auto table = eval::format_table(report);
      eval::write_report_csv(eval_out / "report.csv", report);
      write_text(eval_out / "report.txt", table);
      std::cout << table;
    } else if (*benchc) {
      std::vector<bench::Mode> modes;
      if (bench_mode == "both") {
        modes = {bench::Mode::sequential, bench::Mode::parallel};
      } else {
        modes = {bench::parse_mode(bench_mode)};
      }
      const auto resolutions = parse_resolutions(bench_res);
      if (bench_runs < 10) throw ValidationError("bench: --runs must be >= 10");
      auto bundle = bench_ckpt.empty() ? model::ModelBundle(bench_model.config(), bench_seed)
                                       : model::ModelBundle::load(bench_ckpt);
      std::vector<bench::BenchReport> reports;
      std::ostringstream equivalence;
      for (const auto& [h, w] : resolutions) {
        auto frame = dataset::synth_scene(dataset::SceneKind::step, std::max(h, w), bench_seed);
        frame.rgb = crop(frame.rgb, 0, 0, h, w);
        frame.depth = crop(frame.depth, 0, 0, h, w);
        geometry::PoseSamplerConfig pc;
        pc.seed = bench_seed;
        const auto pose = geometry::sample_pose(pc, frame.median_depth());
        std::vector<bench::BenchReport> here;
        for (const auto mode : modes) {
          here.push_back(bench::measure_pipeline(bundle, frame, pose, mode, bench_runs, bench_warmup));
        }
        if (here.size() == 2) {
          char line[160];
          std::snprintf(line, sizeof line, "%dx%d  max |sequential - parallel| = %.3g  hashes %s\n", h, w,
                        bench::max_abs_diff(here[0].output, here[1].output),
                        here[0].hash == here[1].hash ? "equal" : "differ");
          equivalence << line;
        }
        for (auto& r : here) {
          r.output = {};
          reports.push_back(std::move(r));
        }
      }
      const auto table = bench::format_table(reports) + equivalence.str();
      bench::write_report_csv(bench_out / "bench.csv", reports);
      write_text(bench_out / "bench.txt", table);
      std::cout << table;
    } else if (*ablate) {
      const auto corpus = load_corpus(ablate_root);
      auto cfg = ablate_flags.config(ablate_seed, ablate_poses, warp::Backend::reference);
      eval::EvalOptions opts;
      opts.seed = ablate_seed;
      opts.poses = ablate_poses.config();
      opts.frozen_poses = frozen_poses(corpus);
      opts.names = names(corpus);
      const auto rows = ablation::run_skip_ablation(corpus.frames, ablate_model.config(), cfg, opts);
      const auto table = ablation::format_table(rows);
      ablation::write_csv(ablate_out / "ablation.csv", rows);
      write_text(ablate_out / "ablation.txt", table);
      std::cout << table;
      for (const auto& r : rows) {
        for (const auto& p : r.wiring.problems) std::cerr << r.variant.label << ": " << p << "\n";
      }
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const c10::Error& e) {
    std::cerr << "error: " << e.what_without_backtrace() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
