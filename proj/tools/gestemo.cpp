/*
 * Copyright 2026 The gestemo Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// gestemo command-line entry point.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric divergence.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gestemo/align.hpp"
#include "gestemo/checkpoint.hpp"
#include "gestemo/config.hpp"
#include "gestemo/dataset.hpp"
#include "gestemo/encode.hpp"
#include "gestemo/stats.hpp"
#include "gestemo/train.hpp"

namespace fs = std::filesystem;
using namespace gestemo;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kDiverged = 3 };

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::DivergedLoss: return kDiverged;
    case ErrorKind::BadConfig:
    case ErrorKind::BadK:
    case ErrorKind::BadFactor:
    case ErrorKind::BadSpec: return kUsage;
    default: return kData;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto out = detail::open_output(path);
  out << text;
  if (!out.flush()) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

std::vector<Micros> read_tags(const fs::path& path) {
  auto in = detail::open_input(path);
  std::vector<Micros> tags;
  std::string tok;
  while (in >> tok) {
    const auto v = detail::parse_number<Micros>(tok);
    if (!v) throw Error(ErrorKind::ParseError, path.string() + ": bad tag '" + tok + "'");
    tags.push_back(*v);
  }
  return tags;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  fs::path out;
  std::uint64_t seed = 0;
  std::vector<std::string> classes{"ok", "no", "victory"};
  int num_classes = -1;
  SynthDatasetSpec spec;
  std::uint32_t width = 32, height = 32;
  bool no_features = false;
};

int cmd_synth(SynthArgs& a) {
  auto& s = a.spec;
  s.geometry = Geometry{a.width, a.height};
  s.with_features = !a.no_features;
  s.classes.clear();
  if (a.num_classes >= 0) {
    static const GestureClass order[] = {GestureClass::ok,    GestureClass::no,    GestureClass::victory,
                                         GestureClass::hello, GestureClass::kill,  GestureClass::good,
                                         GestureClass::yes,   GestureClass::love,  GestureClass::fighting,
                                         GestureClass::other};
    if (a.num_classes > 10) throw Error(ErrorKind::BadSpec, "at most 10 classes");
    s.classes.assign(order, order + a.num_classes);
  } else {
    for (const auto& name : a.classes) {
      const auto g = parse_gesture(name);
      if (!g) throw Error(ErrorKind::BadSpec, "unknown class '" + name + "'");
      s.classes.push_back(*g);
    }
  }
  const auto m = write_synth_dataset(s, a.seed, a.out);
  std::cout << "wrote " << m.entries.size() << " samples to " << a.out.string() << "\n";
  return kOk;
}

struct AlignArgs {
  fs::path events, tags, out, segments;
};

int cmd_align(const AlignArgs& a) {
  const auto stream = read_events_file(a.events);
  const auto tags = read_tags(a.tags);
  const auto times = stream.times();
  const auto cuts = split_indices(tags, times);
  nlohmann::json j{{"events", a.events.string()}, {"tags", tags}, {"indices", cuts}};
  nlohmann::json alphas = nlohmann::json::array();
  for (Micros t : tags) alphas.push_back(find_position_traced(t, times).alpha);
  j["alphas"] = alphas;
  if (!a.segments.empty()) {
    fs::create_directories(a.segments);
    const auto segs = segment_events(stream, cuts);
    nlohmann::json files = nlohmann::json::array();
    for (std::size_t i = 0; i < segs.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "segment_%03zu.csv", i);
      write_events_file(segs[i], a.segments / name);
      files.push_back(name);
    }
    j["segments"] = files;
  }
  if (a.out.empty()) std::cout << j.dump(2) << "\n";
  else write_text(a.out, j.dump(2) + "\n");
  return kOk;
}

struct EncodeArgs {
  fs::path events, out;
  std::size_t k = kDefaultPlanes;
  std::size_t downsample = 1;
};

int cmd_encode(const EncodeArgs& a) {
  const auto stream = read_events_file(a.events);
  auto planes = dense_spike_planes(stream, a.k);
  if (a.downsample > 1) planes = downsample_planes(planes, a.downsample);
  const auto total = planes.total();
  const bool conserved = total == stream.size();
  std::cout << "K=" << planes.planes() << " geometry=" << planes.geometry().width << "x"
            << planes.geometry().height << " events=" << stream.size() << " plane_total=" << total
            << " conservation=" << (conserved ? "ok" : "FAILED") << "\n";
  if (!a.out.empty()) write_planes_file(planes, a.out);
  return conserved ? kOk : kData;
}

struct StatsArgs {
  fs::path manifest, out;
  std::size_t bin_width = 10;
  std::size_t threads = 0;
};

int cmd_stats(const StatsArgs& a) {
  const auto m = read_manifest(a.manifest);
  const std::size_t threads = a.threads ? a.threads : hardware_threads();
  const auto d = compute_dataset_stats(m, a.bin_width, threads);
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
  if (d.readable == 0) {
    std::cerr << "error: no readable samples\n";
    return kData;
  }
  fs::create_directories(a.out);
  write_text(a.out / "stats.json", stats_to_json(d).dump(2) + "\n");

  std::ostringstream frames, counts, seconds, pos, neg;
  frames << "bin_start,bin_end,samples\n";
  if (d.frames) {
    for (std::size_t i = 0; i < d.frames->counts.size(); ++i) {
      frames << i * d.frames->bin_width << ',' << (i + 1) * d.frames->bin_width << ',' << d.frames->counts[i] << '\n';
    }
  }
  counts << "gesture,samples\n";
  seconds << "gesture,event_seconds\n";
  const char* box_header = "gesture,n,min,q1,median,q3,max,outliers\n";
  pos << box_header;
  neg << box_header;
  auto box_row = [](std::ostream& o, const ClassStats& c, const BoxStats& b) {
    o << to_string(c.gesture) << ',' << b.n << ',' << detail::format_double(b.min) << ','
      << detail::format_double(b.q1) << ',' << detail::format_double(b.median) << ','
      << detail::format_double(b.q3) << ',' << detail::format_double(b.max) << ',';
    for (std::size_t i = 0; i < b.outliers.size(); ++i) o << (i ? " " : "") << detail::format_double(b.outliers[i]);
    o << '\n';
  };
  for (const auto& c : d.classes) {
    counts << to_string(c.gesture) << ',' << c.samples << '\n';
    seconds << to_string(c.gesture) << ',' << detail::format_double(c.event_seconds) << '\n';
    box_row(pos, c, c.positive);
    box_row(neg, c, c.negative);
  }
  write_text(a.out / "frame_lengths.csv", frames.str());
  write_text(a.out / "class_counts.csv", counts.str());
  write_text(a.out / "event_time.csv", seconds.str());
  write_text(a.out / "positive_box.csv", pos.str());
  write_text(a.out / "negative_box.csv", neg.str());
  std::cout << "stats for " << m.entries.size() << " samples written to " << a.out.string() << "\n";
  return kOk;
}

struct TrainArgs {
  fs::path manifest, config, out, log;
  nlohmann::json overrides = nlohmann::json::object();
};

TrainConfig load_config(const fs::path& path, const nlohmann::json& overrides) {
  TrainConfig cfg;
  if (!path.empty()) {
    auto in = detail::open_input(path);
    try {
      apply_json(cfg, nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& ex) {
      throw Error(ErrorKind::BadConfig, path.string() + ": " + ex.what());
    }
  }
  apply_json(cfg, overrides);
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  const auto cfg = load_config(a.config, a.overrides);
  const auto manifest = read_manifest(a.manifest);
  const auto result = train(manifest, cfg, [](const EpochLog& e) {
    std::cout << "epoch " << e.epoch << " loss " << e.total << " (snn " << e.snn_loss << ", video " << e.video_loss
              << ")\n";
  });
  save_checkpoint(result.model, a.out);
  if (!a.log.empty()) {
    std::ostringstream s;
    write_train_log_csv(s, result.log);
    write_text(a.log, s.str());
  }
  std::cout << "checkpoint written to " << a.out.string() << "\n";
  return kOk;
}

struct EvalArgs {
  fs::path checkpoint, manifest, out, confusion;
  std::string split = "test";
  std::size_t threads = 0;
};

int cmd_eval(const EvalArgs& a) {
  auto model = load_checkpoint(a.checkpoint);
  if (a.threads) model.config.threads = a.threads;
  const auto split = parse_split(a.split);
  if (!split) throw Error(ErrorKind::BadConfig, "split must be train or test");
  const auto report = evaluate(model, read_manifest(a.manifest), *split);
  const auto j = metrics_to_json(report);
  if (a.out.empty()) std::cout << j.dump(2) << "\n";
  else write_text(a.out, j.dump(2) + "\n");
  if (!a.confusion.empty()) {
    std::ostringstream s;
    write_confusion_csv(s, report);
    write_text(a.confusion, s.str());
  }
  std::cerr << "accuracy " << report.accuracy << " weighted P " << report.weighted_precision << " R "
            << report.weighted_recall << " F1 " << report.weighted_f1 << "\n";
  return kOk;
}

struct ImportArgs {
  fs::path root, out;
  ImportOptions opt;
};

int cmd_import(const ImportArgs& a) {
  const auto r = import_dataset(a.root, a.out, a.opt);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  const auto counts = class_counts(r.manifest);
  std::cout << "imported " << r.manifest.entries.size() << " samples:";
  for (std::size_t g = 0; g < kGestureCount; ++g) {
    if (counts[g]) std::cout << ' ' << to_string(kAllGestures[g]) << '=' << counts[g];
  }
  std::cout << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gestemo: event/frame gesture-emotion toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* sc = app.add_subcommand("synth", "generate a labeled synthetic dataset and manifest");
  sc->add_option("--out", synth.out, "output directory")->required();
  sc->add_option("--seed", synth.seed);
  sc->add_option("--classes", synth.classes, "gesture class names")->delimiter(',');
  sc->add_option("--num-classes", synth.num_classes, "use the first N classes of ok,no,victory,hello,...");
  sc->add_option("--per-class", synth.spec.per_class);
  sc->add_option("--test-per-class", synth.spec.test_per_class);
  sc->add_option("--events", synth.spec.n_events, "mean events per sample");
  sc->add_option("--duration-us", synth.spec.duration_us);
  sc->add_option("--width", synth.width);
  sc->add_option("--height", synth.height);
  sc->add_option("--feature-dim", synth.spec.feature_dim);
  sc->add_option("--feature-noise", synth.spec.feature_noise);
  sc->add_option("--corrupt-events", synth.spec.corrupt_events);
  sc->add_option("--corrupt-features", synth.spec.corrupt_features);
  sc->add_flag("--no-features", synth.no_features);

  AlignArgs align;
  auto* ac = app.add_subcommand("align", "locate tag timestamps in an event stream");
  ac->add_option("--events", align.events)->required()->check(CLI::ExistingFile);
  ac->add_option("--tags", align.tags, "whitespace-separated microsecond tags")->required()->check(CLI::ExistingFile);
  ac->add_option("--out", align.out, "index JSON (stdout if omitted)");
  ac->add_option("--segments", align.segments, "directory for per-segment event files");

  EncodeArgs encode;
  auto* ec = app.add_subcommand("encode", "dense spike-plane encoding");
  ec->add_option("--events", encode.events)->required()->check(CLI::ExistingFile);
  ec->add_option("--k", encode.k, "number of planes")->capture_default_str();
  ec->add_option("--downsample", encode.downsample)->capture_default_str();
  ec->add_option("--out", encode.out, "planes file");

  StatsArgs stats;
  auto* stc = app.add_subcommand("stats", "dataset statistics (CSV per figure plus stats.json)");
  stc->add_option("--manifest", stats.manifest)->required()->check(CLI::ExistingFile);
  stc->add_option("--out", stats.out)->required();
  stc->add_option("--bin-width", stats.bin_width)->capture_default_str();
  stc->add_option("--threads", stats.threads, "0 = all cores");

  TrainArgs tr;
  auto* tc = app.add_subcommand("train", "train a model and write a checkpoint");
  tc->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
  tc->add_option("--config", tr.config, "JSON config; flags override it")->check(CLI::ExistingFile);
  tc->add_option("--out", tr.out, "checkpoint path")->required();
  tc->add_option("--log", tr.log, "per-epoch loss CSV");
  std::uint64_t seed = 0;
  std::size_t threads = 1, k = 0, downsample = 1, epochs = 0, batch = 0;
  double lambda = 1.0, lr = 0.0;
  std::string scale, branch, task;
  bool separate = false;
  auto* o_seed = tc->add_option("--seed", seed);
  auto* o_threads = tc->add_option("--threads", threads);
  auto* o_k = tc->add_option("--k", k);
  auto* o_down = tc->add_option("--downsample", downsample);
  auto* o_scale = tc->add_option("--scale-mode", scale)->check(CLI::IsMember({"none", "clip01", "divide_by_max"}));
  auto* o_lambda = tc->add_option("--lambda", lambda);
  auto* o_branch = tc->add_option("--branch", branch)->check(CLI::IsMember({"snn_only", "video_only", "fused"}));
  auto* o_task = tc->add_option("--task", task)->check(CLI::IsMember({"emotion", "gesture"}));
  auto* o_epochs = tc->add_option("--epochs", epochs);
  auto* o_batch = tc->add_option("--batch-size", batch);
  auto* o_lr = tc->add_option("--lr", lr);
  auto* o_sep = tc->add_flag("--separate", separate, "train branches on their own losses");

  EvalArgs ev;
  auto* evc = app.add_subcommand("eval", "evaluate a checkpoint on a manifest split");
  evc->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
  evc->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  evc->add_option("--split", ev.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  evc->add_option("--out", ev.out, "metrics JSON (stdout if omitted)");
  evc->add_option("--confusion", ev.confusion, "confusion matrix CSV");
  evc->add_option("--threads", ev.threads, "0 = keep the checkpoint's setting");

  ImportArgs im;
  auto* ic = app.add_subcommand("import", "convert a dataset directory to gestemo formats");
  ic->add_option("--root", im.root)->required()->check(CLI::ExistingDirectory);
  ic->add_option("--out", im.out)->required();
  ic->add_option("--seed", im.opt.seed, "split seed");
  ic->add_option("--test-fraction", im.opt.test_fraction)->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  auto& j = tr.overrides;
  if (o_seed->count()) j["seed"] = seed;
  if (o_threads->count()) j["threads"] = threads;
  if (o_k->count()) j["k"] = k;
  if (o_down->count()) j["downsample"] = downsample;
  if (o_scale->count()) j["scale_mode"] = scale;
  if (o_lambda->count()) j["lambda"] = lambda;
  if (o_branch->count()) j["branch"] = branch;
  if (o_task->count()) j["task"] = task;
  if (o_epochs->count()) j["epochs"] = epochs;
  if (o_batch->count()) j["batch_size"] = batch;
  if (o_lr->count()) j["learning_rate"] = lr;
  if (o_sep->count()) j["separate"] = separate;

  try {
    if (sc->parsed()) return cmd_synth(synth);
    if (ac->parsed()) return cmd_align(align);
    if (ec->parsed()) return cmd_encode(encode);
    if (stc->parsed()) return cmd_stats(stats);
    if (tc->parsed()) return cmd_train(tr);
    if (evc->parsed()) return cmd_eval(ev);
    if (ic->parsed()) return cmd_import(im);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
