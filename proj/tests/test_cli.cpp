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

// Drives the gestemo binary end to end.

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "gestemo/checkpoint.hpp"
#include "gestemo/ingest.hpp"
#include "test_util.hpp"

#ifndef GESTEMO_CLI
#error "GESTEMO_CLI must name the gestemo executable"
#endif

namespace gestemo {
namespace {

using testing::read_file;
using testing::TempDir;
using testing::write_file;

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run(const std::string& args, const TempDir& scratch) {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string(GESTEMO_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string p(const fs::path& path) { return "'" + path.string() + "'"; }

class Cli : public ::testing::Test {
 protected:
  TempDir dir_;
  TempDir scratch_;

  CliResult gestemo(const std::string& args) { return run(args, scratch_); }

  fs::path synth(const std::string& name, int test_per_class = 2) {
    const auto out = dir_ / name;
    const auto r = gestemo("synth --out " + p(out) + " --seed 4 --per-class 6 --test-per-class " +
                           std::to_string(test_per_class) + " --events 300 --width 16 --height 16 --feature-dim 3");
    EXPECT_EQ(r.code, 0) << r.err;
    return out / "manifest.json";
  }
};

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(gestemo("").code, 1);
  EXPECT_EQ(gestemo("frobnicate").code, 1);
  EXPECT_EQ(gestemo("encode").code, 1);
  EXPECT_EQ(gestemo("--help").code, 0);
}

TEST_F(Cli, SynthWritesSixtyFiles) {
  const auto out = dir_ / "d";
  const auto r = gestemo("synth --out " + p(out) + " --per-class 20 --seed 1");
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t n = 0;
  for (const auto& f : fs::directory_iterator(out / "events")) n += f.is_regular_file();
  EXPECT_EQ(n, 60u);
  EXPECT_EQ(read_manifest(out / "manifest.json").entries.size(), 60u);
}

TEST_F(Cli, SynthSameSeedByteIdentical) {
  synth("a");
  synth("b");
  for (const auto& f : fs::recursive_directory_iterator(dir_ / "a")) {
    if (!f.is_regular_file()) continue;
    EXPECT_EQ(read_file(f.path()), read_file(dir_ / "b" / fs::relative(f.path(), dir_ / "a")));
  }
}

TEST_F(Cli, SynthZeroClasses) {
  const auto r = gestemo("synth --out " + p(dir_ / "z") + " --num-classes 0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("BadSpec"), std::string::npos);
}

TEST_F(Cli, AlignClampsAndSegments) {
  write_file(dir_ / "e.csv", "t,x,y,p geometry=4x4\n10,0,0,1\n20,1,0,1\n30,2,0,0\n40,3,0,1\n50,0,1,0\n");
  write_file(dir_ / "tags.txt", "5\n22\n99\n");
  const auto r = gestemo("align --events " + p(dir_ / "e.csv") + " --tags " + p(dir_ / "tags.txt") + " --out " +
                         p(dir_ / "idx.json") + " --segments " + p(dir_ / "seg"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(read_file(dir_ / "idx.json"));
  EXPECT_EQ(j["indices"], nlohmann::json({0, 1, 4}));
  EXPECT_EQ(j["alphas"], nlohmann::json({0, 3, 0}));
  std::vector<Event> joined;
  for (const auto& name : j["segments"]) {
    const auto s = read_events_file(dir_ / "seg" / name.get<std::string>());
    joined.insert(joined.end(), s.begin(), s.end());
  }
  EXPECT_EQ(validate_stream(joined, Geometry{4, 4}), read_events_file(dir_ / "e.csv"));
}

TEST_F(Cli, AlignMissingTagFile) {
  write_file(dir_ / "e.csv", "t,x,y,p geometry=4x4\n10,0,0,1\n");
  EXPECT_EQ(gestemo("align --events " + p(dir_ / "e.csv") + " --tags " + p(dir_ / "nope.txt")).code, 1);
}

TEST_F(Cli, EncodeReportsConservation) {
  const auto m = read_manifest(synth("d"));
  const auto events = m.resolve(m.entries[0].events);
  const auto r = gestemo("encode --events " + p(events) + " --out " + p(dir_ / "planes.txt"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("K=12"), std::string::npos);
  EXPECT_NE(r.out.find("conservation=ok"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "planes.txt"));
  EXPECT_EQ(gestemo("encode --events " + p(events) + " --k 0").code, 1);
  EXPECT_EQ(gestemo("encode --events " + p(events) + " --k 5 --downsample 3").code, 0);
}

TEST_F(Cli, StatsCsvsAndDeterminism) {
  const auto manifest = synth("d");
  ASSERT_EQ(gestemo("stats --manifest " + p(manifest) + " --out " + p(dir_ / "s1")).code, 0);
  ASSERT_EQ(gestemo("stats --manifest " + p(manifest) + " --out " + p(dir_ / "s2") + " --threads 1").code, 0);
  for (const char* f : {"stats.json", "frame_lengths.csv", "class_counts.csv", "event_time.csv", "positive_box.csv",
                        "negative_box.csv"}) {
    ASSERT_TRUE(fs::exists(dir_ / "s1" / f)) << f;
    EXPECT_EQ(read_file(dir_ / "s1" / f), read_file(dir_ / "s2" / f)) << f;
  }
}

TEST_F(Cli, StatsWarnsAndFailsWhenNothingReadable) {
  write_file(dir_ / "m.json", R"({"entries": [{"id": "a", "gesture": "ok", "events": "missing.csv"}]})");
  const auto r = gestemo("stats --manifest " + p(dir_ / "m.json") + " --out " + p(dir_ / "s"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(Cli, TrainEvalModes) {
  const auto manifest = synth("d");
  write_file(dir_ / "cfg.json", R"({"epochs": 2, "conv1_channels": 4, "conv2_channels": 4, "fc_hidden": 8,
                                    "hidden": 8, "head_hidden": 8, "max_frames": 20})");
  for (const std::string branch : {"snn_only", "video_only", "fused"}) {
    const auto ckpt = dir_ / (branch + ".ckpt");
    const auto r = gestemo("train --manifest " + p(manifest) + " --config " + p(dir_ / "cfg.json") + " --branch " +
                           branch + " --seed 3 --out " + p(ckpt) + " --log " + p(dir_ / (branch + ".csv")));
    ASSERT_EQ(r.code, 0) << r.err;
    const auto model = load_checkpoint(ckpt);
    EXPECT_EQ(to_string(model.config.branch), branch);
    EXPECT_EQ(model.config.epochs, 2u);
    EXPECT_EQ(model.config.seed, 3u);
    const auto e = gestemo("eval --checkpoint " + p(ckpt) + " --manifest " + p(manifest) + " --out " +
                           p(dir_ / "metrics.json") + " --confusion " + p(dir_ / "cm.csv"));
    ASSERT_EQ(e.code, 0) << e.err;
    const auto j = nlohmann::json::parse(read_file(dir_ / "metrics.json"));
    for (const char* key : {"accuracy", "weighted_precision", "weighted_recall", "weighted_f1"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["samples"], 6);
    EXPECT_TRUE(fs::exists(dir_ / "cm.csv"));
  }
  const auto log = read_file(dir_ / "fused.csv");
  EXPECT_EQ(log.substr(0, log.find('\n')), "epoch,snn_loss,video_loss,total");
}

TEST_F(Cli, TrainConfigErrors) {
  const auto manifest = synth("d");
  write_file(dir_ / "bad.json", R"({"epochs": 1, "colour": "blue"})");
  EXPECT_EQ(gestemo("train --manifest " + p(manifest) + " --config " + p(dir_ / "bad.json") + " --out " +
                    p(dir_ / "x.ckpt")).code,
            1);
  EXPECT_EQ(gestemo("train --manifest " + p(manifest) + " --branch sideways --out " + p(dir_ / "x.ckpt")).code, 1);
}

TEST_F(Cli, TrainDivergenceExitCode) {
  const auto manifest = synth("d");
  write_file(dir_ / "cfg.json", R"({"epochs": 3, "hidden": 4, "head_hidden": 4, "branch": "video_only"})");
  const auto r = gestemo("train --manifest " + p(manifest) + " --config " + p(dir_ / "cfg.json") +
                         " --lr 1e300 --out " + p(dir_ / "x.ckpt"));
  EXPECT_EQ(r.code, 3) << r.err;
}

TEST_F(Cli, EvalEmptySplit) {
  const auto manifest = synth("d", 0);
  write_file(dir_ / "cfg.json", R"({"epochs": 1, "branch": "video_only", "hidden": 4, "head_hidden": 4})");
  ASSERT_EQ(gestemo("train --manifest " + p(manifest) + " --config " + p(dir_ / "cfg.json") + " --out " +
                    p(dir_ / "m.ckpt")).code,
            0);
  const auto r = gestemo("eval --checkpoint " + p(dir_ / "m.ckpt") + " --manifest " + p(manifest));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("EmptySplit"), std::string::npos);
}

TEST_F(Cli, ImportDiagnosticsAndIdempotence) {
  write_file(dir_ / "raw" / "misc" / "x.bin", "??");
  const auto bad = gestemo("import --root " + p(dir_ / "raw") + " --out " + p(dir_ / "conv"));
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("UnknownLayout"), std::string::npos);

  write_file(dir_ / "raw" / "yes" / "s1.csv", "1,0,0,1\n2,1,1,0\n");
  write_file(dir_ / "raw" / "no" / "s2.csv", "3,0,0,1\n");
  ASSERT_EQ(gestemo("import --root " + p(dir_ / "raw") + " --out " + p(dir_ / "conv")).code, 0);
  const auto first = read_file(dir_ / "conv" / "manifest.json");
  ASSERT_EQ(gestemo("import --root " + p(dir_ / "raw") + " --out " + p(dir_ / "conv")).code, 0);
  EXPECT_EQ(read_file(dir_ / "conv" / "manifest.json"), first);
  EXPECT_EQ(read_manifest(dir_ / "conv" / "manifest.json").entries.size(), 2u);
}

}  // namespace
}  // namespace gestemo
