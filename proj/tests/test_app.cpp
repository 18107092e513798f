#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "ksfno/app/commands.hpp"
#include "ksfno/app/config.hpp"
#include "ksfno/app/csv.hpp"
#include "ksfno/binary_io.hpp"
#include "ksfno/error.hpp"
#include "ksfno/rng.hpp"

namespace ksfno::app {
namespace {

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("ksfno_app_" + std::to_string(::getpid()) + "_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

std::string message_of(std::string_view yaml) {
  try {
    parse_config(yaml);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

ExperimentConfig tiny_config(const fs::path& root) {
  ExperimentConfig cfg = smoke_scale(ExperimentConfig{});
  cfg.paths = {root / "data.ksd", root / "ckpt", root / "report"};
  return cfg;
}

TEST(Config, DefaultsMatchShippedFullConfig) {
  const ExperimentConfig defaults = parse_config("");
  const ExperimentConfig shipped = load_config(fs::path(KSFNO_SOURCE_DIR) / "configs" / "full.yaml");
  EXPECT_EQ(shipped.solver, defaults.solver);
  EXPECT_EQ(shipped.data.count, 128u);
  EXPECT_EQ(shipped.data.splits.train + shipped.data.splits.val + shipped.data.splits.test, 120u);
  EXPECT_EQ(shipped.model.modes, (std::vector<std::size_t>{12, 24}));
  EXPECT_EQ(shipped.train.early_stop_patience, 20u);
  EXPECT_EQ(shipped.eval.n_bins, 28u);
  EXPECT_EQ(param_count(shipped.model.fno(12, 128)), 4'743'937u);
  EXPECT_EQ(param_count(shipped.model.fno(24, 128)), 18'899'713u);
}

TEST(Config, ShippedSmokeConfigLoads) {
  const ExperimentConfig cfg = load_config(fs::path(KSFNO_SOURCE_DIR) / "configs" / "smoke.yaml");
  EXPECT_EQ(cfg.solver.n, 32u);
  EXPECT_EQ(cfg.data.splits.test, 2u);
  EXPECT_EQ(cfg.model.modes, (std::vector<std::size_t>{4, 8}));
}

TEST(Config, AlternativeSpellings) {
  const ExperimentConfig cfg = parse_config(R"(
data: {count: 10, splits: [5, 3, 2]}
model: {modes: 7, hidden: 4, proj_hidden: 4}
train: {patience: null}
)");
  EXPECT_EQ(cfg.model.modes, std::vector<std::size_t>{7});
  EXPECT_EQ(cfg.data.splits.val, 3u);
  EXPECT_FALSE(cfg.train.early_stop_patience.has_value());
}

TEST(Config, RejectsWithKeyPath) {
  EXPECT_NE(message_of("solver: {nn: 4}").find("solver.nn: unknown key"), std::string::npos);
  EXPECT_NE(message_of("extra: 1").find("extra: unknown key"), std::string::npos);
  EXPECT_NE(message_of("data: {splits: {train: 1, val: 1, tst: 1}}").find("data.splits.tst"), std::string::npos);
  EXPECT_NE(message_of("data: {count: 0}").find("data.count"), std::string::npos);
  EXPECT_NE(message_of("data: {count: -3}").find("data.count"), std::string::npos);
  EXPECT_NE(message_of("data: {count: 10, splits: [8, 2, 1]}").find("data.splits"), std::string::npos);
  EXPECT_NE(message_of("data: {splits: [0, 2, 1]}").find("data.splits.train"), std::string::npos);
  EXPECT_NE(message_of("model: {modes: [12, 80]}").find("model.modes[1]"), std::string::npos);
  EXPECT_NE(message_of("solver: {dt: abc}").find("solver.dt"), std::string::npos);
  EXPECT_NE(message_of("solver: {dt: 0.03, t_final: 0.1}").find("solver.t_final"), std::string::npos);
  EXPECT_NE(message_of("solver: {n: 31}").find("solver.n"), std::string::npos);
  EXPECT_NE(message_of("train: {lr: 0}").find("train.lr"), std::string::npos);
  EXPECT_NE(message_of("train: {patience: 0}").find("train.patience"), std::string::npos);
  EXPECT_NE(message_of("eval: {n_bins: 0}").find("eval.n_bins"), std::string::npos);
  EXPECT_NE(message_of("solver: [1, 2").find("YAML"), std::string::npos);
  EXPECT_EQ(code_of([] { load_config("/nonexistent/config.yaml"); }), ErrorCode::Io);
}

TEST(Csv, DoublesRoundTripExactly) {
  CounterRng rng(5);
  std::vector<double> values{0.0, -0.0, 0.1, 1.0 / 3.0, 1e300, -2.5e-308, std::numeric_limits<double>::denorm_min(),
                             std::numeric_limits<double>::max()};
  for (int k = 0; k < 1000; ++k) values.push_back(std::ldexp(rng.next_uniform(-1.0, 1.0), static_cast<int>(k % 200) - 100));
  for (double v : values) {
    const double back = parse_double(format_double(v));
    EXPECT_EQ(std::signbit(back), std::signbit(v));
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(code_of([] { parse_double("1.5x"); }), ErrorCode::Io);
  EXPECT_EQ(code_of([] { parse_double(""); }), ErrorCode::Io);
}

TEST(Csv, TablesAndGridsRoundTrip) {
  ScratchDir dir("csv");
  const CsvTable t{{"a", "b"}, {{"1", "x"}, {"2", "UNDEFINED"}}};
  write_csv(dir.path() / "nested" / "t.csv", t);
  const CsvTable back = read_csv(dir.path() / "nested" / "t.csv");
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.column("b"), 1u);
  EXPECT_EQ(code_of([&] { back.column("c"); }), ErrorCode::Io);

  const std::vector<double> grid{0.1, -2.0, 3e-17, 4.0};
  write_grid(dir.path() / "g.csv", 2, grid);
  std::size_t n = 0;
  EXPECT_EQ(read_grid(dir.path() / "g.csv", n), grid);
  EXPECT_EQ(n, 2u);
  EXPECT_EQ(slurp(dir.path() / "g.csv"), "0.1,-2\n3e-17,4\n");
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(Error(ErrorCode::InvalidArgument, "")), 2);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::ModesExceedGrid, "")), 2);
  EXPECT_EQ(exit_code_for(BlowUpError("", 3)), 3);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::ChecksumMismatch, "")), 4);
  EXPECT_EQ(exit_code_for(Error(ErrorCode::MissingReport, "")), 4);
  EXPECT_EQ(exit_code_for(std::runtime_error("")), 1);
}

TEST(Generate, WritesSplitDatasetAndSummary) {
  ScratchDir dir("gen");
  const ExperimentConfig cfg = tiny_config(dir.path());
  std::ostringstream log;
  const Dataset ds = cmd_generate(cfg, cfg.paths.dataset, log);
  EXPECT_EQ(load_dataset(cfg.paths.dataset), ds);
  EXPECT_EQ(ds.indices(Split::Train).size(), 4u);
  EXPECT_EQ(ds.indices(Split::Test), (std::vector<std::size_t>{6, 7}));
  EXPECT_NE(log.str().find("sample 7 done"), std::string::npos);
  EXPECT_NE(log.str().find("final frames: min="), std::string::npos);

  ExperimentConfig empty = cfg;
  empty.data.count = 0;
  EXPECT_EQ(code_of([&] { cmd_generate(empty, dir.path() / "none.ksd", log); }), ErrorCode::InvalidArgument);
  EXPECT_FALSE(fs::exists(dir.path() / "none.ksd"));
}

TEST(Train, CheckpointsAreByteIdenticalAcrossRuns) {
  ScratchDir dir("train");
  const ExperimentConfig cfg = tiny_config(dir.path());
  std::ostringstream log;
  cmd_generate(cfg, cfg.paths.dataset, log);
  cmd_train(cfg, cfg.paths.dataset, 4, dir.path() / "a.ksf", log);
  cmd_train(cfg, cfg.paths.dataset, 4, dir.path() / "b.ksf", log);
  EXPECT_EQ(slurp(dir.path() / "a.ksf"), slurp(dir.path() / "b.ksf"));
  EXPECT_EQ(slurp(dir.path() / "a.history.csv"), slurp(dir.path() / "b.history.csv"));

  const CsvTable h = read_csv(dir.path() / "a.history.csv");
  EXPECT_EQ(h.header, (std::vector<std::string>{"epoch", "train_loss", "val_loss", "lr"}));
  EXPECT_EQ(h.rows.size(), cfg.train.max_epochs);

  ExperimentConfig other_grid = cfg;
  other_grid.solver.n = 16;
  EXPECT_EQ(code_of([&] { cmd_train(other_grid, cfg.paths.dataset, 4, dir.path() / "c.ksf", log); }),
            ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { cmd_train(cfg, dir.path() / "missing.ksd", 4, dir.path() / "c.ksf", log); }), ErrorCode::Io);
}

TEST(Train, FullSizeCheckpointHeaderEncodesParamCount) {
  // Parameter count recomputed from the raw header fields of the file format.
  for (auto [modes, expected] : {std::pair<std::size_t, std::size_t>{12, 4'743'937}, {24, 18'899'713}}) {
    const FnoConfig fc = parse_config("").model.fno(modes, 128);
    const auto bytes = encode_checkpoint(Checkpoint{init_params(fc, 0), 0});
    binio::Reader r(bytes);
    r.magic();
    r.u32();
    const std::size_t m = r.u32(), h = r.u32(), c = r.u32(), p = r.u32();
    const std::size_t header_count = (c * h + h) + 4 * (2 * h * h * m * m + h * h + h) + (h * p + p) + (p + 1);
    EXPECT_EQ(header_count, expected);
    EXPECT_EQ(bytes.size(), 4 + 4 + 24 + 8 + 8 * expected + 4);
  }
}

TEST(Train, DivergenceStillWritesHistory) {
  ScratchDir dir("blowup");
  ExperimentConfig cfg = tiny_config(dir.path());
  cfg.train.lr = 1e6;
  cfg.train.max_epochs = 30;
  cfg.train.early_stop_patience.reset();
  std::ostringstream log;
  cmd_generate(cfg, cfg.paths.dataset, log);
  EXPECT_EQ(code_of([&] { cmd_train(cfg, cfg.paths.dataset, 4, dir.path() / "x.ksf", log); }), ErrorCode::BlowUp);
  EXPECT_TRUE(fs::exists(dir.path() / "x.history.csv"));
  EXPECT_FALSE(fs::exists(dir.path() / "x.ksf"));
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new ScratchDir("pipeline");
    cfg_ = new ExperimentConfig(tiny_config(dir_->path()));
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    cmd_reproduce(*cfg_, Scale::Smoke, log);
    seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  static void TearDownTestSuite() {
    delete cfg_;
    delete dir_;
  }
  static fs::path report() { return cfg_->paths.reports; }

  static ScratchDir* dir_;
  static ExperimentConfig* cfg_;
  static double seconds_;
};

ScratchDir* Pipeline::dir_ = nullptr;
ExperimentConfig* Pipeline::cfg_ = nullptr;
double Pipeline::seconds_ = 0.0;

TEST_F(Pipeline, FinishesQuickly) { EXPECT_LT(seconds_, 120.0); }

TEST_F(Pipeline, ReportCsvsParseWithStableSchemas) {
  const CsvTable manifest = read_csv(report() / "manifest.csv");
  ASSERT_EQ(manifest.rows.size(), 2u);
  EXPECT_EQ(manifest.rows[0][0], "modes-4");
  EXPECT_EQ(manifest.rows[1][2], "8");

  const CsvTable radial = read_csv(report() / "truth" / "sample-006" / "radial.csv");
  EXPECT_EQ(radial.header, (std::vector<std::string>{"bin_index", "bin_center", "count", "power"}));
  EXPECT_EQ(radial.rows.size(), 8u);
  std::size_t total = 0;
  for (const auto& row : radial.rows) total += std::stoul(row[2]);
  EXPECT_EQ(total, 32u * 32u);

  for (const char* model : {"modes-4", "modes-8"}) {
    const CsvTable err = read_csv(report() / model / "sample-007" / "error.csv");
    EXPECT_EQ(err.header, (std::vector<std::string>{"bin_index", "bin_center", "error", "normalized_error"}));
    for (const auto& row : err.rows) {
      EXPECT_TRUE(std::isfinite(parse_double(row[2])));
      EXPECT_GE(parse_double(row[2]), 0.0);
    }
    const CsvTable summary = read_csv(report() / model / "summary.csv");
    ASSERT_EQ(summary.rows.size(), 2u);
    for (const auto& row : summary.rows) EXPECT_GE(parse_double(row[summary.column("mse")]), 0.0);
    std::size_t n = 0;
    EXPECT_EQ(read_grid(report() / model / "sample-006" / "prediction.csv", n).size(), 1024u);
    EXPECT_TRUE(fs::exists(report() / model / "history.csv"));
  }
  const CsvTable cmp = read_csv(report() / "comparison.csv");
  EXPECT_EQ(cmp.header, (std::vector<std::string>{"bin_index", "bin_center", "modes-4", "modes-8"}));
}

TEST_F(Pipeline, PlotsAreCompleteAndDeterministic) {
  const fs::path plots = report() / "plots";
  std::map<std::string, std::string> first;
  for (const auto& entry : fs::directory_iterator(plots)) first[entry.path().filename().string()] = slurp(entry.path());
  EXPECT_EQ(first.size(), 9u);
  for (const char* family : {"fields_", "spectrum_", "error_", "loss_"}) {
    for (const char* model : {"modes-4", "modes-8"}) {
      const std::string name = std::string(family) + model + ".svg";
      ASSERT_TRUE(first.contains(name)) << name;
      EXPECT_GT(first[name].size(), 500u);
    }
  }
  std::ostringstream log;
  cmd_plot(report(), log);
  for (const auto& [name, content] : first) EXPECT_EQ(slurp(plots / name), content) << name;
}

TEST_F(Pipeline, EvalRejectsMismatchedCheckpoint) {
  ExperimentConfig wider = *cfg_;
  wider.model.hidden = 9;
  std::ostringstream log;
  EXPECT_EQ(code_of([&] {
              cmd_eval(wider, cfg_->paths.dataset, {cfg_->paths.checkpoints / "modes-4.ksf"}, dir_->path() / "r2", log);
            }),
            ErrorCode::ShapeMismatch);
}

TEST(Plot, EmptyDirectoryIsMissingReportWithoutOutput) {
  ScratchDir dir("empty");
  std::ostringstream log;
  EXPECT_EQ(code_of([&] { cmd_plot(dir.path(), log); }), ErrorCode::MissingReport);
  EXPECT_TRUE(fs::is_empty(dir.path()));
}

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" + KSFNO_CLI + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  ScratchDir dir("cli");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir.path() / name) << text;
  };
  write("bad.yaml", "solver: {bogus: 1}\n");
  write("ok.yaml", "solver: {n: 16, t_final: 0.1}\ndata: {count: 4, splits: [2, 1, 1]}\n"
                   "model: {modes: 4, hidden: 4, proj_hidden: 4}\ntrain: {max_epochs: 1}\n");
  write("boom.yaml", "solver: {n: 16, dt: 1.0, t_final: 50.0}\ndata: {count: 2, splits: [1, 1, 0]}\n"
                     "model: {modes: 4}\n");

  EXPECT_EQ(run_cli("", dir.path()), 2);
  EXPECT_EQ(run_cli("generate --config bad.yaml --out d.ksd", dir.path()), 2);
  EXPECT_EQ(run_cli("generate --config ok.yaml --out d.ksd", dir.path()), 0);
  EXPECT_EQ(run_cli("train --config ok.yaml --data d.ksd --out m.ksf", dir.path()), 0);
  EXPECT_EQ(run_cli("eval --config ok.yaml --data d.ksd --ckpt m.ksf --out rep", dir.path()), 0);
  EXPECT_EQ(run_cli("plot --report rep", dir.path()), 0);
  EXPECT_EQ(run_cli("plot --report nowhere", dir.path()), 4);
  EXPECT_EQ(run_cli("train --config ok.yaml --data missing.ksd --out m2.ksf", dir.path()), 4);
  EXPECT_EQ(run_cli("generate --config boom.yaml --out b.ksd", dir.path()), 3);
  EXPECT_EQ(run_cli("reproduce --config ok.yaml --scale huge", dir.path()), 2);
  EXPECT_TRUE(fs::exists(dir.path() / "rep" / "plots" / "fields_m.svg"));
}

}  // namespace
}  // namespace ksfno::app
