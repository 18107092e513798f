#include "ksfno/app/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "ksfno/app/csv.hpp"
#include "ksfno/app/svg_plot.hpp"
#include "ksfno/error.hpp"
#include "ksfno/fno.hpp"
#include "ksfno/parallel.hpp"
#include "ksfno/spectra.hpp"

namespace ksfno::app {
namespace {

constexpr const char* kUndefined = "UNDEFINED";
constexpr const char* kNone = "NONE";

std::string sample_dir(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample-%03zu", index);
  return buf;
}

std::string bin_cell(std::optional<std::size_t> bin) { return bin ? std::to_string(*bin) : kNone; }

CsvTable radial_table(const RadialSpectrum& rs) {
  CsvTable t{{"bin_index", "bin_center", "count", "power"}, {}};
  for (std::size_t b = 0; b < rs.n_bins; ++b) {
    t.rows.push_back({std::to_string(b), format_double(rs.bin_center(b)), std::to_string(rs.counts[b]),
                      format_double(rs.power[b])});
  }
  return t;
}

CsvTable error_table(const RadialSpectrum& pred, const RadialSpectrum& truth) {
  const auto err = error_power(pred, truth);
  const auto norm = normalized_error_power(pred, truth);
  CsvTable t{{"bin_index", "bin_center", "error", "normalized_error"}, {}};
  for (std::size_t b = 0; b < truth.n_bins; ++b) {
    t.rows.push_back({std::to_string(b), format_double(truth.bin_center(b)), format_double(err[b]),
                      norm[b] ? format_double(*norm[b]) : kUndefined});
  }
  return t;
}

void write_history(const TrainHistory& history, const fs::path& path) {
  CsvTable t{{"epoch", "train_loss", "val_loss", "lr"}, {}};
  for (const EpochRecord& e : history.epochs) {
    t.rows.push_back({std::to_string(e.epoch), format_double(e.train_loss), format_double(e.val_loss), format_double(e.lr)});
  }
  write_csv(path, t);
}

void check_grid(const Dataset& ds, const ExperimentConfig& cfg) {
  if (ds.solver_config.n != cfg.solver.n) {
    throw Error(ErrorCode::ShapeMismatch, "dataset grid " + std::to_string(ds.solver_config.n) +
                                              " does not match solver.n " + std::to_string(cfg.solver.n));
  }
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// Plot inputs.

fs::path require(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw Error(ErrorCode::MissingReport, "missing report file " + path.string());
  return path;
}

double cell_value(const std::string& cell) {
  if (cell == kUndefined) return std::numeric_limits<double>::quiet_NaN();
  return parse_double(cell);
}

std::vector<double> column_values(const CsvTable& t, std::string_view name) {
  const std::size_t c = t.column(name);
  std::vector<double> v;
  for (const auto& row : t.rows) v.push_back(cell_value(row[c]));
  return v;
}

svg::HeatPanel heat(const std::string& title, const fs::path& grid) {
  svg::HeatPanel p;
  p.title = title;
  p.values = read_grid(require(grid), p.n);
  return p;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->code()) {
      case ErrorCode::BlowUp:
        return 3;
      case ErrorCode::Io:
      case ErrorCode::BadMagic:
      case ErrorCode::VersionMismatch:
      case ErrorCode::ChecksumMismatch:
      case ErrorCode::MissingReport:
        return 4;
      default:
        return 2;
    }
  }
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 4;
  return 1;
}

fs::path history_path_for(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  return p.replace_extension(".history.csv");
}

Dataset cmd_generate(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log) {
  cfg.validate();
  const std::size_t threads = worker_threads();
  log << "generating " << cfg.data.count << " samples: n=" << cfg.solver.n << " dt=" << cfg.solver.dt
      << " t_final=" << cfg.solver.t_final << " (" << cfg.solver.step_count() << " steps), threads=" << threads << '\n';
  if (cfg.solver.stability_warning()) {
    log << "warning: dt exceeds h^4/10; explicit Euler may be unstable\n";
  }
  std::size_t done = 0;
  Dataset ds = generate_dataset(cfg.data.count, cfg.data.base_seed, cfg.solver, threads, [&](std::size_t i) {
    ++done;
    log << "  sample " << i << " done (" << done << "/" << cfg.data.count << ")\n";
  });
  const SplitCounts& s = cfg.data.splits;
  ds = assign_split(std::move(ds), s.train, s.val, s.test);
  ensure_parent(out);
  save_dataset(ds, out);

  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
  std::size_t count = 0;
  for (const Sample& sample : ds.samples) {
    for (double v : sample.target.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
      ++count;
    }
  }
  log << "final frames: min=" << lo << " max=" << hi << " mean=" << sum / static_cast<double>(count) << '\n';
  log << "splits: train=" << s.train << " val=" << s.val << " test=" << s.test
      << " unused=" << cfg.data.count - s.train - s.val - s.test << '\n';
  log << "wrote " << out.string() << '\n';
  return ds;
}

TrainResult cmd_train(const ExperimentConfig& cfg, const fs::path& data, std::size_t modes, const fs::path& out,
                      std::ostream& log) {
  cfg.validate();
  const FnoConfig fno_cfg = cfg.model.fno(modes, cfg.solver.n);
  fno_cfg.validate();
  const Dataset ds = load_dataset(data);
  check_grid(ds, cfg);

  TrainConfig tc = cfg.train;
  tc.threads = worker_threads();
  log << "training modes=" << modes << " hidden=" << fno_cfg.hidden << " (" << param_count(fno_cfg)
      << " parameters), threads=" << tc.threads << '\n';
  const auto report = [&](const EpochRecord& e) {
    log << "  epoch " << e.epoch << " train=" << e.train_loss << " val=" << e.val_loss << " lr=" << e.lr << '\n';
  };
  TrainResult result = [&] {
    try {
      return train(ds, fno_cfg, tc, report);
    } catch (const TrainingBlowUp& e) {
      write_history(e.history(), history_path_for(out));
      throw;
    }
  }();

  ensure_parent(out);
  save_checkpoint(Checkpoint{result.params, tc.seed}, out);
  write_history(result.history, history_path_for(out));
  log << "initial train=" << result.initial_train_loss << " val=" << result.initial_val_loss << "; best epoch "
      << result.best_epoch << '\n';
  log << "wrote " << out.string() << " and " << history_path_for(out).string() << '\n';
  return result;
}

void cmd_eval(const ExperimentConfig& cfg, const fs::path& data, const std::vector<fs::path>& checkpoints,
              const fs::path& out, std::ostream& log) {
  cfg.validate();
  if (checkpoints.empty()) throw Error(ErrorCode::InvalidArgument, "eval needs at least one checkpoint");
  const Dataset ds = load_dataset(data);
  check_grid(ds, cfg);
  const std::vector<std::size_t> test = ds.indices(Split::Test);
  if (test.empty()) throw Error(ErrorCode::InvalidArgument, "data.splits.test: the dataset has no test samples");
  const std::size_t n = ds.solver_config.n;
  const std::size_t bins = cfg.eval.n_bins;

  struct Model {
    std::string label;
    fs::path path;
    Checkpoint ckpt;
  };
  std::vector<Model> models;
  std::set<std::string> labels;
  for (const fs::path& path : checkpoints) {
    Checkpoint ck = load_checkpoint(path);
    const FnoConfig& mc = ck.params.config();
    if (mc.n != n || mc.hidden != cfg.model.hidden || mc.proj_hidden != cfg.model.proj_hidden) {
      throw Error(ErrorCode::ShapeMismatch,
                  path.string() + " holds n=" + std::to_string(mc.n) + " hidden=" + std::to_string(mc.hidden) +
                      " proj_hidden=" + std::to_string(mc.proj_hidden) + ", config expects n=" + std::to_string(n) +
                      " hidden=" + std::to_string(cfg.model.hidden) +
                      " proj_hidden=" + std::to_string(cfg.model.proj_hidden));
    }
    std::string label = path.stem().string();
    if (label == "truth" || !labels.insert(label).second) {
      throw Error(ErrorCode::InvalidArgument, "checkpoint name '" + label + "' is reserved or repeated");
    }
    models.push_back({std::move(label), path, std::move(ck)});
  }

  CsvTable samples{{"sample_index", "seed"}, {}};
  std::vector<RadialSpectrum> truth_spectra;
  for (std::size_t idx : test) {
    const Sample& s = ds.samples[idx];
    const fs::path dir = out / "truth" / sample_dir(idx);
    write_grid(dir / "input.csv", n, s.input.values());
    write_grid(dir / "target.csv", n, s.target.values());
    write_grid(dir / "log_power.csv", n, log_power_2d(s.target).power);
    truth_spectra.push_back(radial_power(s.target, bins));
    write_csv(dir / "radial.csv", radial_table(truth_spectra.back()));
    samples.rows.push_back({std::to_string(idx), std::to_string(s.seed)});
  }
  write_csv(out / "samples.csv", samples);
  const RadialSpectrum truth_mean = average_spectra(truth_spectra);
  write_csv(out / "truth" / "radial_mean.csv", radial_table(truth_mean));

  CsvTable manifest{{"model", "checkpoint", "modes", "param_count"}, {}};
  std::vector<std::vector<std::optional<double>>> mean_normalized;
  CsvTable first_bins{{"model", "first_bin_over_1"}, {}};
  for (const Model& m : models) {
    const fs::path model_dir = out / m.label;
    CsvTable summary{{"sample_index", "mse", "relative_l2", "first_bin_over_1"}, {}};
    std::vector<RadialSpectrum> spectra;
    double mse_sum = 0.0;
    for (std::size_t k = 0; k < test.size(); ++k) {
      const Sample& s = ds.samples[test[k]];
      const ScalarField2D pred = forward(s.input, m.ckpt.params);
      const fs::path dir = model_dir / sample_dir(test[k]);
      write_grid(dir / "prediction.csv", n, pred.values());
      write_grid(dir / "log_power.csv", n, log_power_2d(pred).power);
      spectra.push_back(radial_power(pred, bins));
      write_csv(dir / "radial.csv", radial_table(spectra.back()));
      write_csv(dir / "error.csv", error_table(spectra.back(), truth_spectra[k]));
      const double err = mse(pred, s.target);
      mse_sum += err;
      summary.rows.push_back({std::to_string(test[k]), format_double(err), format_double(relative_l2(pred, s.target)),
                              bin_cell(first_bin_exceeding(normalized_error_power(spectra.back(), truth_spectra[k])))});
    }
    write_csv(model_dir / "summary.csv", summary);
    const RadialSpectrum mean = average_spectra(spectra);
    write_csv(model_dir / "radial_mean.csv", radial_table(mean));
    write_csv(model_dir / "error_mean.csv", error_table(mean, truth_mean));
    mean_normalized.push_back(normalized_error_power(mean, truth_mean));
    const auto first = first_bin_exceeding(mean_normalized.back());
    first_bins.rows.push_back({m.label, bin_cell(first)});

    if (fs::is_regular_file(history_path_for(m.path))) {
      fs::copy_file(history_path_for(m.path), model_dir / "history.csv", fs::copy_options::overwrite_existing);
    }
    const FnoConfig& mc = m.ckpt.params.config();
    manifest.rows.push_back({m.label, m.path.string(), std::to_string(mc.modes), std::to_string(param_count(mc))});
    log << m.label << ": test MSE " << mse_sum / static_cast<double>(test.size())
        << ", first bin with normalized error > 1: " << bin_cell(first) << '\n';
  }

  if (models.size() >= 2) {
    CsvTable cmp{{"bin_index", "bin_center"}, {}};
    for (const Model& m : models) cmp.header.push_back(m.label);
    for (std::size_t b = 0; b < bins; ++b) {
      std::vector<std::string> row{std::to_string(b), format_double(truth_mean.bin_center(b))};
      for (const auto& curve : mean_normalized) row.push_back(curve[b] ? format_double(*curve[b]) : kUndefined);
      cmp.rows.push_back(std::move(row));
    }
    write_csv(out / "comparison.csv", cmp);
    write_csv(out / "comparison_first_bin.csv", first_bins);
  }
  write_csv(out / "manifest.csv", manifest);
  log << "wrote report to " << out.string() << '\n';
}

std::vector<fs::path> cmd_plot(const fs::path& report, std::ostream& log) {
  const CsvTable manifest = read_csv(require(report / "manifest.csv"));
  const CsvTable samples = read_csv(require(report / "samples.csv"));
  if (manifest.rows.empty() || samples.rows.empty()) {
    throw Error(ErrorCode::MissingReport, report.string() + " lists no models or samples");
  }
  const std::string first = sample_dir(static_cast<std::size_t>(std::stoull(samples.rows[0][samples.column("sample_index")])));
  const fs::path truth = report / "truth" / first;

  std::vector<std::pair<fs::path, std::string>> figures;
  const fs::path plots = report / "plots";
  const std::size_t label_col = manifest.column("model");
  for (const auto& row : manifest.rows) {
    const std::string& label = row[label_col];
    const fs::path mdir = report / label;
    const fs::path pred = mdir / first;

    figures.emplace_back(plots / ("fields_" + label + ".svg"),
                         svg::heatmap_figure(label + ", " + first,
                                             {heat("input u(0)", truth / "input.csv"),
                                              heat("ground truth u(T)", truth / "target.csv"),
                                              heat("prediction", pred / "prediction.csv")}));

    svg::HeatPanel truth_spec = heat("ground truth log power", truth / "log_power.csv");
    svg::HeatPanel pred_spec = heat("prediction log power", pred / "log_power.csv");
    if (truth_spec.n != pred_spec.n) throw Error(ErrorCode::MissingReport, "spectra in " + pred.string() + " do not match");
    svg::HeatPanel diff{"log power difference", truth_spec.n, pred_spec.values};
    for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= truth_spec.values[k];
    figures.emplace_back(plots / ("spectrum_" + label + ".svg"),
                         svg::heatmap_figure(label + ", " + first, {truth_spec, pred_spec, diff}));

    const CsvTable err = read_csv(require(mdir / "error_mean.csv"));
    const auto centers = column_values(err, "bin_center");
    figures.emplace_back(
        plots / ("error_" + label + ".svg"),
        svg::line_figure(label + ", mean over test samples",
                         {svg::LinePanel{"error power", "radial wavenumber", "|P_pred - P_gt|", true,
                                         {{label, centers, column_values(err, "error")}}, std::nullopt},
                          svg::LinePanel{"normalized error power", "radial wavenumber", "|P_pred - P_gt| / P_gt", true,
                                         {{label, centers, column_values(err, "normalized_error")}}, 1.0}}));

    if (fs::is_regular_file(mdir / "history.csv")) {
      const CsvTable h = read_csv(mdir / "history.csv");
      const auto epochs = column_values(h, "epoch");
      figures.emplace_back(plots / ("loss_" + label + ".svg"),
                           svg::line_figure(label, {svg::LinePanel{"relative L2 loss", "epoch", "loss", true,
                                                                   {{"train", epochs, column_values(h, "train_loss")},
                                                                    {"validation", epochs, column_values(h, "val_loss")}},
                                                                   std::nullopt}}));
    }
  }
  if (fs::is_regular_file(report / "comparison.csv")) {
    const CsvTable cmp = read_csv(report / "comparison.csv");
    svg::LinePanel panel{"normalized error power", "radial wavenumber", "|P_pred - P_gt| / P_gt", true, {}, 1.0};
    const auto centers = column_values(cmp, "bin_center");
    for (std::size_t c = 2; c < cmp.header.size(); ++c) {
      panel.series.push_back({cmp.header[c], centers, column_values(cmp, cmp.header[c])});
    }
    figures.emplace_back(plots / "comparison.svg", svg::line_figure("cutoff comparison", {panel}));
  }

  fs::create_directories(plots);
  std::vector<fs::path> written;
  for (const auto& [path, content] : figures) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << content;
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    written.push_back(path);
  }
  log << "wrote " << written.size() << " plots to " << plots.string() << '\n';
  return written;
}

Scale parse_scale(std::string_view text) {
  if (text == "smoke") return Scale::Smoke;
  if (text == "paper") return Scale::Paper;
  throw Error(ErrorCode::InvalidArgument, "scale must be smoke or paper, got '" + std::string(text) + "'");
}

void cmd_reproduce(ExperimentConfig cfg, Scale scale, std::ostream& log) {
  if (scale == Scale::Smoke) cfg = smoke_scale(std::move(cfg));
  cfg.validate();
  cmd_generate(cfg, cfg.paths.dataset, log);
  std::vector<fs::path> checkpoints;
  for (std::size_t m : cfg.model.modes) {
    checkpoints.push_back(cfg.paths.checkpoints / ("modes-" + std::to_string(m) + ".ksf"));
    cmd_train(cfg, cfg.paths.dataset, m, checkpoints.back(), log);
  }
  cmd_eval(cfg, cfg.paths.dataset, checkpoints, cfg.paths.reports, log);
  cmd_plot(cfg.paths.reports, log);
}

}  // namespace ksfno::app
