// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

// mk: command-line driver for the motionkit library. Every command writes a
// RunSpec JSON next to its main output; `mk replay --runspec FILE` re-runs it.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mk/mk.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kRunSpecVersion = 1;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  if (const fs::path parent = fs::path(path).parent_path(); !parent.empty()) {
    std::error_code ec;
    fs::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw mk::FileError("cannot write " + path);
  return out;
}

json shape_json(const mk::Shape& s) { return json(std::vector<std::size_t>(s.begin(), s.end())); }

mk::FilterMode parse_filter(const std::string& s) {
  if (s == "ideal") return mk::FilterMode::ideal;
  if (s == "gaussian") return mk::FilterMode::gaussian;
  throw mk::ParameterError("unknown filter '" + s + "' (ideal or gaussian)");
}

// A (c, h, w) image, also accepting a single-frame (1, c, h, w) stack.
mk::Tensor<double> load_image(const std::string& path) {
  mk::Tensor<double> t = mk::load_tensor<double>(path);
  if (t.rank() == 4 && t.extent(0) == 1) t = mk::frame(t, 0);
  if (t.rank() != 3) throw mk::ShapeError(path + ": expected a (c, h, w) image, got " + mk::shape_string(t.shape()));
  return t;
}

struct Outcome {
  std::string runspec_path;
  json seeds = json::object();
  json shapes = json::object();
};

// ---- options ---------------------------------------------------------------

struct BenchOpts {
  std::vector<std::size_t> seq_lens{1024, 2048, 4096, 8192, 16384};
  std::size_t dim = 64;
  std::size_t repeats = 3;
  std::string dtype = "f32";
  std::vector<std::string> methods;
  std::uint64_t seed = 0;
  std::string out, report;
};

struct DctOpts {
  std::string image;
  std::size_t frames = 8;
  double cutoff_t = 0.25, cutoff_s = 0.25;
  std::string filter = "ideal";
  double t_init = mk::default_t_init(mk::kDefaultSteps);
  std::uint64_t seed = 0;
  std::string out, report;
};

struct DynOpts {
  std::string synthetic, clips_dir;
  double velocity = 1.0;
  std::size_t count = 4, frames = 24, size = 32, channels = 1;
  double square = 8.0, period = 32.0;
  std::vector<std::size_t> intervals{1, 3, 7, 11};
  std::uint64_t seed = 0;
  std::string out;
};

struct ModelOpts {
  std::size_t frames = 8, channels = 1, size = 16, dim = 16, blocks = 2, patch = 2, embed_dim = 16;

  mk::DenoiserConfig config() const {
    mk::DenoiserConfig c;
    c.frames = frames;
    c.channels = channels;
    c.height = c.width = size;
    c.dim = dim;
    c.blocks = blocks;
    c.patch = patch;
    c.embed_dim = embed_dim;
    return c;
  }
};

struct TrainOpts {
  ModelOpts model;
  std::uint64_t seed = 1;
  std::size_t steps = 500, batch = 4;
  double lr = 3e-3, cond_dropout = 0.1;
  std::string checkpoint_out, loss_csv, resume;
};

struct AnimateOpts {
  std::string checkpoint, image, out;
  int bucket = 10;
  int steps = mk::kDefaultSteps;
  double guidance = 5.5;
  std::optional<double> t_init;
  bool dct_init = false;
  double cutoff_t = 0.25, cutoff_s = 0.25;
  std::string filter = "ideal";
  std::uint64_t seed = 0;
};

struct TransferOpts {
  std::string checkpoint, source, edited, out;
  std::optional<int> bucket;
  int steps = 100;
  std::optional<double> t_init;
};

struct ProfileOpts {
  std::string image, synthetic;
  std::size_t size = 64, bins = 101;
  std::uint64_t seed = 0;
  std::string out;
};

struct SynthOpts {
  std::string kind = "moving_square";
  double velocity = 1.0, square = 8.0, period = 32.0;
  std::size_t frames = 8, size = 32, channels = 1, pool = 2;
  std::uint64_t seed = 0;
  std::string out, latent_out, first_frame_out;
};

// ---- commands ----------------------------------------------------------------

template <mk::Real T>
mk::BenchSweep sweep_as(const BenchOpts& o, const std::vector<mk::BenchMethod>& ms) {
  return mk::bench_sweep<T>(ms, o.seq_lens, o.dim, o.repeats, mk::Rng(o.seed));
}

Outcome cmd_bench(const BenchOpts& o) {
  std::vector<mk::BenchMethod> ms;
  if (o.methods.empty()) ms.assign(std::begin(mk::kAllBenchMethods), std::end(mk::kAllBenchMethods));
  for (const auto& m : o.methods) ms.push_back(mk::parse_method(m));
  if (o.dtype != "f32" && o.dtype != "f64") throw mk::ParameterError("dtype must be f32 or f64");
  const mk::BenchSweep s = o.dtype == "f32" ? sweep_as<float>(o, ms) : sweep_as<double>(o, ms);
  auto csv = open_out(o.out);
  csv << "method,seq_len,dim,repeats,median_wall_time_s,analytic_peak_elements\n";
  json recs = json::array();
  for (const auto& r : s.records) {
    csv << mk::method_name(r.method) << ',' << r.seq_len << ',' << r.dim << ',' << r.repeats << ','
        << fmt(r.median_wall_time_s) << ',' << r.analytic_peak_elements << '\n';
  }
  json slopes = json::object();
  for (const auto& [m, sl] : s.slopes) {
    slopes[mk::method_name(m)] = sl;
    std::printf("slope %-20s %.3f\n", mk::method_name(m).c_str(), sl);
  }
  const std::string report = o.report.empty() ? o.out + ".json" : o.report;
  auto rep = open_out(report);
  rep << json{{"dtype", o.dtype}, {"dim", o.dim}, {"seq_lens", o.seq_lens}, {"time_slope", slopes}}.dump(2) << "\n";
  return {o.out + ".runspec.json", {{"seed", o.seed}}, {{"dim", o.dim}, {"seq_lens", o.seq_lens}}};
}

Outcome cmd_dctinit(const DctOpts& o) {
  const auto z1 = load_image(o.image);
  if (o.frames == 0) throw mk::ParameterError("frames must be positive");
  const mk::Shape ns{o.frames, z1.extent(0), z1.extent(1), z1.extent(2)};
  mk::Rng rng = mk::Rng(o.seed).split(0);
  const auto eps = mk::randn(rng, ns);
  const auto f = mk::make_lowpass({o.frames, z1.extent(1), z1.extent(2)}, parse_filter(o.filter), o.cutoff_t, o.cutoff_s);
  const auto r = mk::dct_init_with_report(z1, eps, o.t_init, f);
  mk::save_tensor(o.out, r.noise);
  const std::string report = o.report.empty() ? o.out + ".json" : o.report;
  const auto& e = r.report;
  auto rep = open_out(report);
  rep << json{{"kept_fraction", e.kept_fraction},
              {"image_branch_energy", e.image_branch_energy},
              {"noise_branch_energy", e.noise_branch_energy},
              {"total_energy", e.total_energy},
              {"branch_sum_minus_total", e.image_branch_energy + e.noise_branch_energy - e.total_energy}}
             .dump(2)
      << "\n";
  std::printf("kept %.6f image %.6g noise %.6g total %.6g\n", e.kept_fraction, e.image_branch_energy,
              e.noise_branch_energy, e.total_energy);
  return {o.out + ".runspec.json", {{"seed", o.seed}, {"noise_stream", "split(0)"}},
          {{"image", shape_json(z1.shape())}, {"noise", shape_json(ns)}}};
}

Outcome cmd_dynamics(const DynOpts& o) {
  if (o.synthetic.empty() == o.clips_dir.empty()) throw mk::UsageError("give exactly one of --synthetic or --clips");
  std::vector<std::string> ids;
  std::vector<mk::VideoClip> clips;
  if (!o.synthetic.empty()) {
    const mk::SynthConfig sc{o.frames, o.channels, o.size, o.size, o.square, o.period};
    clips = mk::synth_dataset(mk::parse_synth_kind(o.synthetic), o.velocity, mk::Rng(o.seed), o.count, sc);
    for (std::size_t i = 0; i < clips.size(); ++i) ids.push_back(std::to_string(i));
  } else {
    if (!fs::is_directory(o.clips_dir)) throw mk::FileError("no clip directory at " + o.clips_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(o.clips_dir))
      if (e.is_regular_file() && e.path().extension() == ".mkt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      mk::VideoClip v{mk::load_tensor<double>(f)};
      v.validate();
      clips.push_back(std::move(v));
      ids.push_back(f.stem().string());
    }
  }
  if (clips.empty()) throw mk::ParameterError("dynamics: no clips to evaluate");
  if (o.intervals.empty()) throw mk::ParameterError("dynamics: at least one interval is required");
  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) { return std::chrono::duration<double, std::milli>(clock::now() - t0).count(); };
  auto csv = open_out(o.out);
  csv << "clip_id,interval,mad,ssim,ms_ssim,bucket,time_ms,time_mad_ms,time_ssim_ms,time_ms_ssim_ms\n";
  for (std::size_t c = 0; c < clips.size(); ++c) {
    for (std::size_t iv : o.intervals) {
      auto t0 = clock::now();
      const double mad = mk::mean_pair_metric(clips[c], iv, [](const auto& a, const auto& b) { return mk::mean_abs_diff(a, b); });
      const double t_mad = ms_since(t0);
      t0 = clock::now();
      const double ss = mk::mean_pair_metric(clips[c], iv, [](const auto& a, const auto& b) { return mk::ssim(a, b); });
      const double t_ss = ms_since(t0);
      t0 = clock::now();
      const double ms = mk::mean_pair_metric(clips[c], iv, [](const auto& a, const auto& b) { return mk::ms_ssim(a, b); });
      const double t_ms = ms_since(t0);
      csv << ids[c] << ',' << iv << ',' << fmt(mad) << ',' << fmt(ss) << ',' << fmt(ms) << ','
          << mk::score_to_bucket(ms).value() << ',' << fmt(t_mad + t_ss + t_ms) << ',' << fmt(t_mad) << ',' << fmt(t_ss)
          << ',' << fmt(t_ms) << '\n';
    }
  }
  return {o.out + ".runspec.json", {{"seed", o.seed}, {"clip_stream", "split(clip index)"}},
          {{"clips", clips.size()}, {"clip", shape_json(clips[0].frames.shape())}}};
}

Outcome cmd_train(const TrainOpts& o) {
  const mk::DenoiserConfig cfg = o.model.config();
  cfg.validate();
  mk::TrainConfig tc;
  tc.seed = o.seed;
  tc.steps = o.steps;
  tc.batch = o.batch;
  tc.lr = o.lr;
  tc.cond_dropout = o.cond_dropout;
  tc.validate();
  mk::TrainState s;
  if (!o.resume.empty()) {
    mk::Checkpoint k = mk::load_checkpoint(o.resume, cfg);
    const auto saved = mk::to_json(k.train), want = mk::to_json(tc);
    for (const char* key : {"seed", "lr", "batch", "cond_dropout"})
      if (saved[key] != want[key])
        throw mk::ConfigError(std::string("--") + key + " differs from the resumed checkpoint (" + saved[key].dump() + ")");
    s = std::move(k.state);
    if (s.step > tc.steps) throw mk::ConfigError("checkpoint is already past --steps");
  } else {
    s = mk::start_training(cfg, tc);
  }
  const std::size_t todo = tc.steps - s.step;
  mk::train_steps(s, cfg, tc, todo, [&](std::size_t step, double loss) {
    if ((step + 1) % 50 == 0 || step + 1 == tc.steps) std::printf("step %zu loss %.6f\n", step + 1, loss);
  });
  mk::save_checkpoint(o.checkpoint_out, cfg, tc, s);
  const std::string loss_path = o.loss_csv.empty() ? (fs::path(o.checkpoint_out) / "loss.csv").string() : o.loss_csv;
  auto csv = open_out(loss_path);
  csv << "step,loss\n";
  for (std::size_t i = 0; i < s.losses.size(); ++i) csv << i << ',' << fmt(s.losses[i]) << '\n';
  return {(fs::path(o.checkpoint_out) / "runspec.json").string(),
          {{"seed", o.seed}, {"init_stream", "split(0)"}, {"step_stream", "split(1 + step)"}},
          {{"latent", shape_json(cfg.latent_shape())}, {"parameters", mk::param_count(cfg)}}};
}

Outcome cmd_animate(const AnimateOpts& o) {
  const mk::Checkpoint k = mk::load_checkpoint(o.checkpoint);
  const auto z1 = load_image(o.image);
  if (z1.shape() != k.model.frame_shape())
    throw mk::ConfigError("image " + mk::shape_string(z1.shape()) + " does not match the checkpoint latent frame " +
                          mk::shape_string(k.model.frame_shape()));
  mk::AnimateOptions a;
  a.steps = o.steps;
  a.guidance = mk::GuidanceConfig{o.guidance};
  a.guidance.validate();
  a.t_init = o.t_init;
  a.use_dct_init = o.dct_init;
  if (o.dct_init)
    a.filter = mk::make_lowpass({k.model.frames - 1, k.model.height, k.model.width}, parse_filter(o.filter), o.cutoff_t,
                                o.cutoff_s);
  mk::Rng rng = mk::Rng(o.seed).split(0);
  const mk::LatentClip out = mk::animate(k.state.params, k.model, z1, mk::DynamicsBucket(o.bucket), rng, a);
  mk::save_tensor(o.out, out.frames);
  std::printf("mean frame deviation %.6f\n", mk::mean_frame_deviation(out));
  return {o.out + ".runspec.json", {{"seed", o.seed}, {"noise_stream", "split(0)"}},
          {{"image", shape_json(z1.shape())}, {"output", shape_json(out.frames.shape())}}};
}

Outcome cmd_transfer(const TransferOpts& o) {
  const mk::Checkpoint k = mk::load_checkpoint(o.checkpoint);
  const mk::LatentClip src{mk::load_tensor<double>(o.source)};
  if (src.frames.shape() != k.model.latent_shape())
    throw mk::ConfigError("source " + mk::shape_string(src.frames.shape()) + " does not match the checkpoint latent " +
                          mk::shape_string(k.model.latent_shape()));
  const auto edited = o.edited.empty() ? src.frame(0) : load_image(o.edited);
  if (edited.shape() != k.model.frame_shape()) throw mk::ConfigError("edited frame does not match the checkpoint latent frame");
  // Without --bucket the source's own dynamics (mean consecutive MS-SSIM of the latents) sets it.
  const mk::DynamicsBucket b = o.bucket ? mk::DynamicsBucket(*o.bucket) : mk::score_to_bucket(mk::dynamics_score(mk::VideoClip{src.frames}));
  const mk::LatentClip out = mk::motion_transfer(k.state.params, k.model, src, edited, b, o.steps, o.t_init);
  mk::save_tensor(o.out, out.frames);
  std::printf("bucket %d rel change vs source %.6e\n", b.value(), mk::rel_l2_error(out.frames, src.frames));
  return {o.out + ".runspec.json", json::object(), {{"source", shape_json(src.frames.shape())}}};
}

Outcome cmd_profile(const ProfileOpts& o) {
  if (o.image.empty() == o.synthetic.empty()) throw mk::UsageError("give exactly one of --image or --synthetic");
  mk::Tensor<double> x;
  if (!o.image.empty()) {
    x = mk::load_tensor<double>(o.image);
    if (x.rank() == 3) x = x.reshaped({x.extent(0) * x.extent(1), x.extent(2)});
    if (x.rank() != 2) throw mk::ShapeError("spectral-profile needs a 2-D image");
  } else if (o.synthetic == "ramp") {
    x = mk::diagonal_ramp(o.size);
  } else if (o.synthetic == "noise") {
    mk::Rng r = mk::Rng(o.seed).split(0);
    x = mk::randn(r, {o.size, o.size});
  } else {
    throw mk::ParameterError("unknown synthetic image '" + o.synthetic + "' (ramp or noise)");
  }
  const auto d = mk::spectral_energy_profile(x, mk::SpectralTransform::dct, o.bins);
  const auto f = mk::spectral_energy_profile(x, mk::SpectralTransform::fft, o.bins);
  auto csv = open_out(o.out);
  csv << "radius,dct_fraction,fft_fraction\n";
  for (std::size_t i = 0; i < d.radius.size(); ++i)
    csv << fmt(d.radius[i]) << ',' << fmt(d.fraction[i]) << ',' << fmt(f.fraction[i]) << '\n';
  std::printf("energy within radius 0.1: dct %.9f fft %.9f\n", d.at(0.1), f.at(0.1));
  return {o.out + ".runspec.json", {{"seed", o.seed}}, {{"image", shape_json(x.shape())}}};
}

Outcome cmd_synth(const SynthOpts& o) {
  const mk::SynthConfig sc{o.frames, o.channels, o.size, o.size, o.square, o.period};
  mk::Rng rng = mk::Rng(o.seed).split(0);
  const mk::VideoClip v = mk::synth_clip(mk::parse_synth_kind(o.kind), o.velocity, rng, sc);
  mk::save_tensor(o.out, v.frames);
  json shapes{{"clip", shape_json(v.frames.shape())}};
  if (!o.latent_out.empty() || !o.first_frame_out.empty()) {
    const mk::LatentClip z = mk::encode_latent(v, o.pool);
    if (!o.latent_out.empty()) mk::save_tensor(o.latent_out, z.frames);
    if (!o.first_frame_out.empty()) mk::save_tensor(o.first_frame_out, z.frame(0));
    shapes["latent"] = shape_json(z.frames.shape());
  }
  return {o.out + ".runspec.json", {{"seed", o.seed}, {"clip_stream", "split(0)"}}, shapes};
}

// ---- wiring --------------------------------------------------------------------

int run(const std::vector<std::string>& args);

json flags_of(const CLI::App* sub) {
  json f = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->count() == 0 || opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->get_type_size() == 0) {
      f[name] = true;
    } else {
      const auto& r = opt->results();
      f[name] = r.size() == 1 ? json(r[0]) : json(r);
    }
  }
  return f;
}

void write_runspec(const Outcome& oc, const std::string& override_path, const std::string& command,
                   const std::vector<std::string>& args, const CLI::App* sub) {
  const std::string path = override_path.empty() ? oc.runspec_path : override_path;
  auto out = open_out(path);
  out << json{{"runspec_version", kRunSpecVersion},
              {"command", command},
              {"argv", args},
              {"flags", flags_of(sub)},
              {"seeds", oc.seeds},
              {"shapes", oc.shapes}}
             .dump(2)
      << "\n";
}

int replay(const std::string& path) {
  const json spec = mk::read_json_file(path);
  if (!spec.contains("argv") || !spec["argv"].is_array()) throw mk::FormatError(path + " has no argv array");
  if (spec.value("runspec_version", 0) != kRunSpecVersion) throw mk::FormatError(path + ": unsupported RunSpec version");
  const auto args = spec["argv"].get<std::vector<std::string>>();
  if (!args.empty() && args[0] == "replay") throw mk::FormatError("a RunSpec cannot replay another replay");
  return run(args);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"motionkit: linear attention, DCT noise init, dynamics buckets and a toy motion denoiser"};
  app.require_subcommand(1);
  std::string runspec;
  auto add_runspec = [&](CLI::App* s) {
    s->add_option("--runspec", runspec, "Where to write the RunSpec JSON (default: next to the main output)");
  };

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench-attention", "Time attention variants across sequence lengths");
  bench->add_option("--seq-lens", bo.seq_lens, "Ascending sequence lengths")->delimiter(',')->capture_default_str();
  bench->add_option("--dim", bo.dim, "Head dimension (d = d_v)")->capture_default_str();
  bench->add_option("--repeats", bo.repeats, "Timed runs per point (median; one extra warm-up)")->capture_default_str();
  bench->add_option("--dtype", bo.dtype, "f32 or f64")->capture_default_str();
  bench->add_option("--methods", bo.methods, "Subset of softmax,relu_linear,cosine_linear_fast,cosine_linear_naive")
      ->delimiter(',');
  bench->add_option("--seed", bo.seed)->capture_default_str();
  bench->add_option("--out", bo.out, "CSV output")->required();
  bench->add_option("--report", bo.report, "JSON slope report (default: OUT.json)");
  add_runspec(bench);

  DctOpts dop;
  auto* dct = app.add_subcommand("dctinit", "Refine Gaussian noise with the low DCT band of a noised image");
  dct->add_option("--image", dop.image, "TensorFile (c, h, w) f64")->required();
  dct->add_option("--frames", dop.frames)->capture_default_str();
  dct->add_option("--cutoff-t", dop.cutoff_t)->capture_default_str();
  dct->add_option("--cutoff-s", dop.cutoff_s)->capture_default_str();
  dct->add_option("--filter", dop.filter, "ideal or gaussian")->capture_default_str();
  dct->add_option("--t-init", dop.t_init)->capture_default_str();
  dct->add_option("--seed", dop.seed)->capture_default_str();
  dct->add_option("--out", dop.out, "Refined noise TensorFile")->required();
  dct->add_option("--report", dop.report, "JSON energy report (default: OUT.json)");
  add_runspec(dct);

  DynOpts dy;
  auto* dyn = app.add_subcommand("dynamics", "MAD / SSIM / MS-SSIM and dynamics bucket per clip and frame interval");
  dyn->add_option("--synthetic", dy.synthetic, "moving_square or sinusoid_translate");
  dyn->add_option("--clips", dy.clips_dir, "Directory of (N, C, H, W) .mkt clips");
  dyn->add_option("--velocity", dy.velocity)->capture_default_str();
  dyn->add_option("--count", dy.count, "Number of synthetic clips")->capture_default_str();
  dyn->add_option("--frames", dy.frames)->capture_default_str();
  dyn->add_option("--size", dy.size)->capture_default_str();
  dyn->add_option("--channels", dy.channels)->capture_default_str();
  dyn->add_option("--square", dy.square)->capture_default_str();
  dyn->add_option("--period", dy.period)->capture_default_str();
  dyn->add_option("--intervals", dy.intervals)->delimiter(',')->capture_default_str();
  dyn->add_option("--seed", dy.seed)->capture_default_str();
  dyn->add_option("--out", dy.out, "CSV output")->required();
  add_runspec(dyn);

  auto add_model = [](CLI::App* s, ModelOpts& m) {
    s->add_option("--frames", m.frames)->capture_default_str();
    s->add_option("--channels", m.channels)->capture_default_str();
    s->add_option("--size", m.size, "Latent height = width")->capture_default_str();
    s->add_option("--dim", m.dim)->capture_default_str();
    s->add_option("--blocks", m.blocks)->capture_default_str();
    s->add_option("--patch", m.patch)->capture_default_str();
    s->add_option("--embed-dim", m.embed_dim)->capture_default_str();
  };

  TrainOpts to;
  auto* tr = app.add_subcommand("train", "Train the toy denoiser on synthetic moving squares");
  add_model(tr, to.model);
  tr->add_option("--seed", to.seed)->capture_default_str();
  tr->add_option("--steps", to.steps, "Total steps (including resumed ones)")->capture_default_str();
  tr->add_option("--batch", to.batch)->capture_default_str();
  tr->add_option("--lr", to.lr)->capture_default_str();
  tr->add_option("--cond-dropout", to.cond_dropout)->capture_default_str();
  tr->add_option("--checkpoint-out", to.checkpoint_out, "Checkpoint directory to write")->required();
  tr->add_option("--loss-csv", to.loss_csv, "Loss CSV (default: CHECKPOINT/loss.csv)");
  tr->add_option("--resume", to.resume, "Checkpoint directory to continue from");
  add_runspec(tr);

  AnimateOpts ao;
  auto* an = app.add_subcommand("animate", "Generate a clip from a first-frame latent");
  an->add_option("--checkpoint", ao.checkpoint)->required();
  an->add_option("--image", ao.image, "First-frame latent (c, h, w)")->required();
  an->add_option("--bucket", ao.bucket, "Dynamics bucket 0..19")->capture_default_str();
  an->add_option("--steps", ao.steps)->capture_default_str();
  an->add_option("--guidance", ao.guidance)->capture_default_str();
  an->add_option("--t-init", ao.t_init, "Start time (default 1 - 1/steps)");
  an->add_flag("--dct-init", ao.dct_init, "Refine the initial noise with DCTInit");
  an->add_option("--cutoff-t", ao.cutoff_t)->capture_default_str();
  an->add_option("--cutoff-s", ao.cutoff_s)->capture_default_str();
  an->add_option("--filter", ao.filter)->capture_default_str();
  an->add_option("--seed", ao.seed)->capture_default_str();
  an->add_option("--out", ao.out, "Output latent clip TensorFile")->required();
  add_runspec(an);

  TransferOpts xo;
  auto* xf = app.add_subcommand("transfer", "Invert a latent clip and resample it on an edited first frame");
  xf->add_option("--checkpoint", xo.checkpoint)->required();
  xf->add_option("--source", xo.source, "Source latent clip (N, c, h, w)")->required();
  xf->add_option("--edited", xo.edited, "Edited first frame (c, h, w); default: unedited");
  xf->add_option("--bucket", xo.bucket, "Default: from the source's dynamics");
  xf->add_option("--steps", xo.steps)->capture_default_str();
  xf->add_option("--t-init", xo.t_init);
  xf->add_option("--out", xo.out)->required();
  add_runspec(xf);

  ProfileOpts po;
  auto* pr = app.add_subcommand("spectral-profile", "Cumulative DCT vs FFT energy by frequency radius");
  pr->add_option("--image", po.image, "2-D TensorFile (or (c, h, w), channels stacked vertically)");
  pr->add_option("--synthetic", po.synthetic, "ramp or noise");
  pr->add_option("--size", po.size)->capture_default_str();
  pr->add_option("--bins", po.bins)->capture_default_str();
  pr->add_option("--seed", po.seed)->capture_default_str();
  pr->add_option("--out", po.out, "CSV output")->required();
  add_runspec(pr);

  SynthOpts so;
  auto* sy = app.add_subcommand("synth", "Write a procedural clip (and optionally its pooled latents)");
  sy->add_option("--kind", so.kind)->capture_default_str();
  sy->add_option("--velocity", so.velocity)->capture_default_str();
  sy->add_option("--frames", so.frames)->capture_default_str();
  sy->add_option("--size", so.size)->capture_default_str();
  sy->add_option("--channels", so.channels)->capture_default_str();
  sy->add_option("--square", so.square)->capture_default_str();
  sy->add_option("--period", so.period)->capture_default_str();
  sy->add_option("--pool", so.pool)->capture_default_str();
  sy->add_option("--seed", so.seed)->capture_default_str();
  sy->add_option("--out", so.out, "Pixel clip TensorFile")->required();
  sy->add_option("--latent-out", so.latent_out);
  sy->add_option("--first-frame-out", so.first_frame_out);
  add_runspec(sy);

  std::string replay_path;
  auto* rp = app.add_subcommand("replay", "Re-run a command from its RunSpec");
  rp->add_option("--runspec", replay_path)->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (rp->parsed()) return replay(replay_path);

  const std::pair<CLI::App*, std::function<Outcome()>> table[] = {
      {bench, [&] { return cmd_bench(bo); }},    {dct, [&] { return cmd_dctinit(dop); }},
      {dyn, [&] { return cmd_dynamics(dy); }},   {tr, [&] { return cmd_train(to); }},
      {an, [&] { return cmd_animate(ao); }},     {xf, [&] { return cmd_transfer(xo); }},
      {pr, [&] { return cmd_profile(po); }},     {sy, [&] { return cmd_synth(so); }},
  };
  for (const auto& [sub, fn] : table) {
    if (!sub->parsed()) continue;
    const Outcome oc = fn();
    write_runspec(oc, runspec, sub->get_name(), args, sub);
    return 0;
  }
  return 2;
}

int exit_code(const mk::Error& e) {
  if (dynamic_cast<const mk::FileError*>(&e)) return 3;
  if (dynamic_cast<const mk::FormatError*>(&e)) return 4;
  if (dynamic_cast<const mk::ConfigError*>(&e)) return 5;
  if (dynamic_cast<const mk::BudgetError*>(&e)) return 6;
  if (dynamic_cast<const mk::NumericalFailure*>(&e)) return 7;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const mk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
