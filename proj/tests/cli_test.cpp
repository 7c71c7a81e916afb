// End-to-end tests of the ccgan command-line binary. The binary path arrives
// as argv[1] (wired through CMake); every test shells out to it.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

std::string g_binary;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr combined
};

RunResult run_cli(const std::string& args) {
  const std::string out_file =
      std::string(::testing::TempDir()) + "/cli_out_" + std::to_string(::getpid()) + ".txt";
  const std::string cmd = "'" + g_binary + "' " + args + " > '" + out_file + "' 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file, std::ios::binary);
  std::ostringstream text;
  text << in.rdbuf();
  r.output = text.str();
  std::remove(out_file.c_str());
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    scratch_ = std::string(::testing::TempDir()) + "/cli_scratch_" +
               ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(scratch_);
    fs::create_directories(scratch_);
  }
  void TearDown() override { fs::remove_all(scratch_); }

  // Small synthetic task shared by the pipeline tests.
  std::string make_task() {
    const std::string task = scratch_ + "/task";
    RunResult r = run_cli("synth --k 2 --shifts 0.5,1.0 --seed 1 --d 4 --n 10 --out '" +
                          task + "'");
    EXPECT_EQ(r.exit_code, 0) << r.output;
    return task;
  }

  std::string train_args(const std::string& task, const std::string& out,
                         const std::string& lr = "0.001", const std::string& batch = "8") {
    return "train --task '" + task + "' --target target --arm ccgan_model_free --out '" +
           out + "' --total-steps 4 --batch-size " + batch + " --eval-every 2 --base-lr " +
           lr + " --seed 5";
  }

  std::string scratch_;
};

TEST_F(CliTest, NoSubcommandExitsWithUsageError) {
  RunResult r = run_cli("");
  EXPECT_EQ(r.exit_code, 2) << r.output;
}

TEST_F(CliTest, HelpExitsCleanly) {
  RunResult r = run_cli("--help");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("train"), std::string::npos);
  EXPECT_NE(r.output.find("synth"), std::string::npos);
}

TEST_F(CliTest, SynthTrainEvalPipelineSucceeds) {
  const std::string task = make_task();
  const std::string out = scratch_ + "/run";
  RunResult train = run_cli(train_args(task, out));
  EXPECT_EQ(train.exit_code, 0) << train.output;
  EXPECT_TRUE(fs::exists(out + "/summary.json"));
  EXPECT_TRUE(fs::exists(out + "/metrics.jsonl"));
  EXPECT_TRUE(fs::exists(out + "/model.ckpt"));
  EXPECT_TRUE(fs::exists(out + "/effective.cfg"));
  EXPECT_NE(slurp(out + "/summary.json").find("final_accuracy"), std::string::npos);

  RunResult eval = run_cli("eval --checkpoint '" + out + "/model.ckpt' --task '" + task +
                           "' --target target");
  EXPECT_EQ(eval.exit_code, 0) << eval.output;
  EXPECT_NE(eval.output.find("accuracy"), std::string::npos);
}

TEST_F(CliTest, RepeatTrainingIsByteIdentical) {
  const std::string task = make_task();
  const std::string out1 = scratch_ + "/run1";
  const std::string out2 = scratch_ + "/run2";
  EXPECT_EQ(run_cli(train_args(task, out1)).exit_code, 0);
  EXPECT_EQ(run_cli(train_args(task, out2)).exit_code, 0);
  EXPECT_EQ(slurp(out1 + "/metrics.jsonl"), slurp(out2 + "/metrics.jsonl"));
  EXPECT_EQ(slurp(out1 + "/model.ckpt"), slurp(out2 + "/model.ckpt"));
  EXPECT_EQ(slurp(out1 + "/summary.json"), slurp(out2 + "/summary.json"));
}

TEST_F(CliTest, MissingTargetFlagExitsTwoAndNamesIt) {
  const std::string task = make_task();
  RunResult r = run_cli("train --task '" + task + "' --out '" + scratch_ + "/x'");
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("--target"), std::string::npos) << r.output;
}

TEST_F(CliTest, MissingTaskDirectoryExitsThree) {
  RunResult r = run_cli("train --task /nonexistent/task --target target --out '" +
                        scratch_ + "/x'");
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST_F(CliTest, MalformedFlagValueExitsTwo) {
  const std::string task = make_task();
  RunResult r = run_cli(train_args(task, scratch_ + "/x", "0.001", "lots"));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("batch"), std::string::npos) << r.output;
  RunResult zero = run_cli(train_args(task, scratch_ + "/y", "0.001", "0"));
  EXPECT_EQ(zero.exit_code, 2) << zero.output;
}

TEST_F(CliTest, CorruptCheckpointExitsThree) {
  const std::string task = make_task();
  const std::string bad = scratch_ + "/bad.ckpt";
  std::ofstream(bad) << "this is not a checkpoint";
  RunResult r = run_cli("eval --checkpoint '" + bad + "' --task '" + task +
                        "' --target target");
  EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST_F(CliTest, NumericBlowupExitsFour) {
  const std::string task = make_task();
  RunResult r = run_cli(train_args(task, scratch_ + "/x", "1e150"));
  EXPECT_EQ(r.exit_code, 4) << r.output;
  EXPECT_NE(r.output.find("numeric error"), std::string::npos) << r.output;
}

TEST_F(CliTest, AuditPrintsPerDomainWeights) {
  const std::string task = make_task();
  const std::string out = scratch_ + "/run";
  ASSERT_EQ(run_cli(train_args(task, out)).exit_code, 0);
  RunResult r = run_cli("audit --checkpoint '" + out + "/model.ckpt' --task '" + task +
                        "' --target target --batches 4 --batch-size 8 --seed 2");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("source0"), std::string::npos);
  EXPECT_NE(r.output.find("source1"), std::string::npos);
  EXPECT_NE(r.output.find("mean_weight"), std::string::npos);
}

TEST_F(CliTest, PcaWritesProjectionFile) {
  const std::string task = make_task();
  const std::string out = scratch_ + "/proj.tsv";
  RunResult r = run_cli("pca --task '" + task + "' --out '" + out + "'");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  const std::string content = slurp(out);
  EXPECT_NE(content.find("source0"), std::string::npos);
  EXPECT_NE(content.find("target"), std::string::npos);
}

TEST_F(CliTest, EncodeAndPretrainPipeline) {
  const std::string corpus = scratch_ + "/corpus.tsv";
  {
    std::ofstream out(corpus);
    for (int i = 0; i < 12; ++i) {
      out << (i % 2) << "\tbooks\tsample text number " << i << " with shared words\n";
    }
  }
  const std::string emb = scratch_ + "/corpus.emb";
  RunResult enc = run_cli("encode --corpus '" + corpus + "' --out '" + emb + "'");
  EXPECT_EQ(enc.exit_code, 0) << enc.output;
  EXPECT_TRUE(fs::exists(emb));

  RunResult pre = run_cli("pretrain --input '" + emb + "' --out '" + scratch_ +
                          "/enc.ckpt' --encoded-out '" + scratch_ +
                          "/enc.emb' --latent 2 --hidden 8 --epochs 2 --batch-size 4");
  EXPECT_EQ(pre.exit_code, 0) << pre.output;
  EXPECT_TRUE(fs::exists(scratch_ + "/enc.ckpt"));
  EXPECT_TRUE(fs::exists(scratch_ + "/enc.emb"));
  EXPECT_NE(slurp(scratch_ + "/enc.emb").find("d=2"), std::string::npos);
}

TEST_F(CliTest, OutputIsIdenticalUnderCommaDecimalLocale) {
  const std::string task = make_task();
  const std::string plain = scratch_ + "/run_plain";
  const std::string localized = scratch_ + "/run_locale";
  ASSERT_EQ(run_cli(train_args(task, plain)).exit_code, 0);
  const std::string cmd = "LC_ALL=de_DE.UTF-8 LANG=de_DE.UTF-8 '" + g_binary + "' " +
                          train_args(task, localized) + " > /dev/null 2>&1";
  ASSERT_EQ(WEXITSTATUS(std::system(cmd.c_str())), 0);
  EXPECT_EQ(slurp(plain + "/metrics.jsonl"), slurp(localized + "/metrics.jsonl"));
  EXPECT_EQ(slurp(plain + "/summary.json"), slurp(localized + "/summary.json"));
}

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_test <path-to-ccgan-binary>\n");
    return 2;
  }
  g_binary = argv[1];
  return RUN_ALL_TESTS();
}
