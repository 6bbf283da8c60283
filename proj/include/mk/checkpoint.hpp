// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mk/denoiser.hpp"
#include "mk/tensor_io.hpp"

namespace mk {

// A checkpoint is a directory: manifest.json plus one TensorFile per tensor.
// The manifest maps tensor names to file names and carries both configs, the
// step counter and the Adam step, so a reload resumes the same trajectory.
inline constexpr const char* kCheckpointFormat = "motionkit-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json to_json(const DenoiserConfig& c) {
  return {{"frames", c.frames},       {"channels", c.channels},   {"height", c.height},
          {"width", c.width},         {"dim", c.dim},             {"blocks", c.blocks},
          {"patch", c.patch},         {"embed_dim", c.embed_dim}, {"mlp_ratio", c.mlp_ratio},
          {"bucket_count", c.bucket_count}, {"rope_base", c.rope_base}, {"den_eps", c.den_eps}};
}

inline std::string synth_kind_name(SynthKind k) {
  return k == SynthKind::moving_square ? "moving_square" : "sinusoid_translate";
}

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"steps", t.steps},
          {"lr", t.lr},
          {"batch", t.batch},
          {"cond_dropout", t.cond_dropout},
          {"kind", synth_kind_name(t.kind)},
          {"pool", t.pool},
          {"square_size", t.square_size},
          {"base_speeds", t.base_speeds},
          {"schedule",
           {{"mode", t.schedule.mode == ScheduleMode::uniform ? "uniform" : "logit_normal"},
            {"loc", t.schedule.loc},
            {"scale", t.schedule.scale},
            {"margin", t.schedule.margin}}},
          {"seed", t.seed}};
}

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("manifest is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline DenoiserConfig denoiser_config_from_json(const nlohmann::json& j) {
  using detail::json_get;
  DenoiserConfig c;
  c.frames = json_get<std::size_t>(j, "frames");
  c.channels = json_get<std::size_t>(j, "channels");
  c.height = json_get<std::size_t>(j, "height");
  c.width = json_get<std::size_t>(j, "width");
  c.dim = json_get<std::size_t>(j, "dim");
  c.blocks = json_get<std::size_t>(j, "blocks");
  c.patch = json_get<std::size_t>(j, "patch");
  c.embed_dim = json_get<std::size_t>(j, "embed_dim");
  c.mlp_ratio = json_get<std::size_t>(j, "mlp_ratio");
  c.bucket_count = json_get<int>(j, "bucket_count");
  c.rope_base = json_get<double>(j, "rope_base");
  c.den_eps = json_get<double>(j, "den_eps");
  return c;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  using detail::json_get;
  TrainConfig t;
  t.steps = json_get<std::size_t>(j, "steps");
  t.lr = json_get<double>(j, "lr");
  t.batch = json_get<std::size_t>(j, "batch");
  t.cond_dropout = json_get<double>(j, "cond_dropout");
  t.kind = parse_synth_kind(json_get<std::string>(j, "kind"));
  t.pool = json_get<std::size_t>(j, "pool");
  t.square_size = json_get<double>(j, "square_size");
  t.base_speeds = json_get<std::vector<double>>(j, "base_speeds");
  const auto s = json_get<nlohmann::json>(j, "schedule");
  const auto mode = json_get<std::string>(s, "mode");
  if (mode != "uniform" && mode != "logit_normal") throw FormatError("unknown schedule mode '" + mode + "'");
  t.schedule.mode = mode == "uniform" ? ScheduleMode::uniform : ScheduleMode::logit_normal;
  t.schedule.loc = json_get<double>(s, "loc");
  t.schedule.scale = json_get<double>(s, "scale");
  t.schedule.margin = json_get<double>(s, "margin");
  t.seed = json_get<std::uint64_t>(j, "seed");
  return t;
}

struct Checkpoint {
  DenoiserConfig model;
  TrainConfig train;
  TrainState state;
};

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw FileError("short write to " + path.string());
}

inline void save_checkpoint(const std::filesystem::path& dir, const DenoiserConfig& model, const TrainConfig& train,
                            const TrainState& s) {
  check_params(s.params, model);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FileError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json files = nlohmann::json::object();
  auto put = [&](const std::string& key, const Tensor<double>& t) {
    std::string file = key + ".mkt";
    for (char& ch : file)
      if (ch == '/') ch = '_';
    save_tensor(dir / file, t);
    files[key] = file;
  };
  for (const auto& [name, t] : s.params) put("param/" + name, t);
  for (const auto& [name, t] : s.adam.m) put("adam_m/" + name, t);
  for (const auto& [name, t] : s.adam.v) put("adam_v/" + name, t);
  // Extents must be positive, so an empty history is stored as no file.
  if (!s.losses.empty()) put("losses", Tensor<double>({s.losses.size()}, s.losses));
  const nlohmann::json manifest{{"format", kCheckpointFormat},
                                {"version", kCheckpointVersion},
                                {"model", to_json(model)},
                                {"train", to_json(train)},
                                {"step", s.step},
                                {"adam_t", s.adam.t},
                                {"tensors", files}};
  write_json_file(dir / "manifest.json", manifest);
}

// Missing directory, manifest or tensor file: FileError. Unreadable content:
// FormatError. Tensors that disagree with the stored model config: ConfigError.
inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto mpath = dir / "manifest.json";
  if (!std::filesystem::exists(mpath)) throw FileError("no checkpoint manifest at " + mpath.string());
  const nlohmann::json m = read_json_file(mpath);
  if (m.value("format", std::string()) != kCheckpointFormat) throw FormatError(mpath.string() + " is not a checkpoint manifest");
  if (detail::json_get<int>(m, "version") != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
  Checkpoint c{denoiser_config_from_json(detail::json_get<nlohmann::json>(m, "model")),
               train_config_from_json(detail::json_get<nlohmann::json>(m, "train")),
               {}};
  c.model.validate();
  c.state.step = detail::json_get<std::size_t>(m, "step");
  c.state.adam.t = detail::json_get<std::uint64_t>(m, "adam_t");
  const auto files = detail::json_get<nlohmann::json>(m, "tensors");
  for (const auto& [key, file] : files.items()) {
    const Tensor<double> t = load_tensor<double>(dir / file.get<std::string>());
    const auto slash = key.find('/');
    const std::string kind = key.substr(0, slash), name = slash == std::string::npos ? "" : key.substr(slash + 1);
    if (kind == "param") c.state.params.emplace(name, t);
    else if (kind == "adam_m") c.state.adam.m.emplace(name, t);
    else if (kind == "adam_v") c.state.adam.v.emplace(name, t);
    else if (key == "losses") c.state.losses = t.storage();
    else throw FormatError("unknown checkpoint tensor '" + key + "'");
  }
  check_params(c.state.params, c.model);
  check_params(c.state.adam.m, c.model);
  check_params(c.state.adam.v, c.model);
  if (c.state.losses.size() != c.state.step) throw FormatError("checkpoint loss history does not match its step");
  return c;
}

// As above, and additionally requires the stored model config to equal `expected`.
inline Checkpoint load_checkpoint(const std::filesystem::path& dir, const DenoiserConfig& expected) {
  Checkpoint c = load_checkpoint(dir);
  if (!(c.model == expected))
    throw ConfigError("checkpoint model config " + to_json(c.model).dump() + " does not match " + to_json(expected).dump());
  return c;
}

}  // namespace mk
