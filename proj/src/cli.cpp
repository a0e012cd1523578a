#include "petnet/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string_view>
#include <type_traits>

#include "CLI11.hpp"
#include "petnet/io.hpp"
#include "petnet/parallel.hpp"
#include "petnet/scw.hpp"
#include "petnet/simulator.hpp"
#include "petnet/snn.hpp"
#include "petnet/trainer.hpp"

namespace petnet {
namespace {

namespace fs = std::filesystem;

// Collects "--flag value" pairs so every command can echo an equivalent,
// fully explicit invocation before it acts.
class ResolvedConfig {
 public:
  explicit ResolvedConfig(std::string command) : line_("petnet " + command) {}

  template <class T>
  ResolvedConfig& add(const std::string& flag, const T& value) {
    std::ostringstream s;
    if constexpr (std::is_floating_point_v<T>) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, value);
      s << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    } else {
      s << value;
    }
    line_ += " --" + flag + " " + s.str();
    return *this;
  }
  ResolvedConfig& add_path(const std::string& flag, const std::string& path) {
    line_ += " --" + flag + " " + path;
    return *this;
  }
  ResolvedConfig& add_switch(const std::string& flag, bool on) {
    if (on) line_ += " --" + flag;
    return *this;
  }
  void print(std::ostream& out) const { out << "resolved: " << line_ << '\n'; }

 private:
  std::string line_;
};

std::string fixed(double value, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << value;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::pair<DatasetManifest, std::vector<Sample>> load_nonempty(
    const std::string& path) {
  auto data = read_dataset(path);
  if (data.second.empty()) {
    throw std::invalid_argument("dataset " + path + " has no samples");
  }
  return data;
}

void print_manifest(std::ostream& out, const DatasetManifest& m) {
  out << "manifest: version=" << m.version
      << " crystals=" << m.config.num_crystals()
      << " timesteps=" << m.config.num_timesteps()
      << " samples=" << m.num_samples
      << " geometry=" << (m.has_geometry_features ? 1 : 0)
      << " seed=" << m.rng_seed << '\n';
}

// True when the checkpoint expects crystal plus geometry channels.
bool model_uses_geometry(const LifNetwork& net, const DetectorConfig& det) {
  const auto c = static_cast<Eigen::Index>(det.num_crystals());
  if (net.out_dim() != c) {
    throw std::invalid_argument("model output size " +
                                std::to_string(net.out_dim()) +
                                " does not match crystal count " +
                                std::to_string(c));
  }
  if (net.in_dim() == c) return false;
  if (net.in_dim() == 2 * c) return true;
  throw std::invalid_argument("model input size " +
                              std::to_string(net.in_dim()) +
                              " is neither C nor 2C for C = " +
                              std::to_string(c));
}

std::vector<Sample> as_unlabeled(std::span<const SpikeTrain> trains) {
  std::vector<Sample> out;
  out.reserve(trains.size());
  for (const SpikeTrain& t : trains) {
    out.push_back(Sample{t, SpikeTrain(t.shape())});
  }
  return out;
}

std::vector<SpikeTrain> inputs_of(std::span<const Sample> samples) {
  std::vector<SpikeTrain> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) out.push_back(s.input);
  return out;
}

struct ScwRun {
  ScwResult total;
  std::vector<SpikeTrain> labels;
  double seconds = 0.0;
};

ScwRun run_scw(std::span<const Sample> samples, const ScwConfig& cfg,
               const DetectorConfig& det) {
  ScwRun run;
  run.labels.reserve(samples.size());
  std::uint64_t hits = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const Sample& s : samples) {
    ScwResult r = scw_sort(s.input.events(), cfg, det);
    run.labels.push_back(scw_to_label(r, det));
    hits += s.input.size();
    run.total += r;
  }
  run.seconds = seconds_since(start);
  if (run.total.accounted_events() != hits) {
    throw std::logic_error("coincidence sorter lost events: " +
                           std::to_string(run.total.accounted_events()) +
                           " accounted of " + std::to_string(hits));
  }
  return run;
}

void print_scw_totals(std::ostream& out, const ScwResult& r) {
  out << "scw: pairs=" << r.pairs.size() << " singles=" << r.singles
      << " multiples=" << r.multiples << " events=" << r.accounted_events()
      << '\n';
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::uint32_t crystals = 240;
  std::uint32_t timesteps = 2000;
  std::uint32_t events = 40;
  double p_detect = 0.8;
  std::uint32_t max_shift = 2;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulatorConfig cfg;
  cfg.detector = DetectorConfig(a.crystals, a.timesteps);
  cfg.events_per_sample = a.events;
  cfg.detection_probability = a.p_detect;
  cfg.max_shift = a.max_shift;
  cfg.rng_seed = a.seed;
  cfg.validate();
  if (a.samples == 0) throw std::invalid_argument("sample count must be positive");

  ResolvedConfig("simulate")
      .add("crystals", a.crystals)
      .add("timesteps", a.timesteps)
      .add("events", a.events)
      .add("p-detect", a.p_detect)
      .add("max-shift", a.max_shift)
      .add("samples", a.samples)
      .add("seed", a.seed)
      .add_path("out", a.out)
      .print(out);

  const GeneratedDataset data = generate_dataset(cfg, a.samples, worker_count());
  const std::size_t bytes = write_dataset(data.samples, data.manifest, a.out);
  print_manifest(out, data.manifest);
  out << "decays: total=" << data.tally.decays
      << " both=" << data.tally.both_detected
      << " one=" << data.tally.one_detected
      << " none=" << data.tally.none_detected << '\n';
  out << "wrote " << bytes << " bytes to " << a.out << '\n';
}

// --------------------------------------------------------------------- scw

struct ScwArgs {
  std::string data;
  ScwConfig scw;
  std::uint32_t tolerance = kDefaultTolerance;
  std::string out;
};

void cmd_scw(const ScwArgs& a, std::ostream& out) {
  const auto [manifest, samples] = load_nonempty(a.data);
  a.scw.validate(manifest.config);
  ResolvedConfig cfg("scw");
  cfg.add_path("data", a.data)
      .add("window", a.scw.window)
      .add("min-separation", a.scw.min_ring_separation)
      .add_switch("geometry-filter", a.scw.geometry_filter)
      .add("tolerance", a.tolerance);
  if (!a.out.empty()) cfg.add_path("out", a.out);
  cfg.print(out);

  const ScwRun run = run_scw(samples, a.scw, manifest.config);
  print_scw_totals(out, run.total);
  const MatchReport report =
      evaluate_dataset(run.labels, samples, a.tolerance, worker_count()).total;
  out << "match: " << format_record(report) << '\n';
  if (!a.out.empty()) {
    DatasetManifest m = manifest;
    m.has_geometry_features = false;
    write_dataset(as_unlabeled(run.labels), m, a.out);
    out << "wrote " << a.out << '\n';
  }
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string history;
  std::uint32_t hidden = 0;
  std::uint32_t layers = 1;
  std::string loss = "combined-mse";
  std::string timing_gradient = "emitted-spikes";
  bool raw_time = false;
  bool strict_patience = false;
  TrainConfig cfg;
};

void apply_loss_name(const std::string& name, LossConfig& loss) {
  if (name == "count") {
    loss.timing = TimingKind::kNone;
  } else if (name == "combined-mse") {
    loss.timing = TimingKind::kMse;
  } else if (name == "combined-chamfer") {
    loss.timing = TimingKind::kChamfer;
  } else {
    throw std::invalid_argument("unknown loss '" + name + "'");
  }
}

void cmd_train(TrainArgs a, std::ostream& out) {
  apply_loss_name(a.loss, a.cfg.loss);
  a.cfg.loss.timing_gradient = parse_timing_gradient(a.timing_gradient);
  a.cfg.normalize_timing = !a.raw_time;
  a.cfg.patience_from_first_match = !a.strict_patience;
  a.cfg.threads = worker_count();
  a.cfg.validate();
  if (a.history.empty()) a.history = a.out + ".history.csv";

  const auto [manifest, samples] = load_nonempty(a.data);
  NetConfig net{a.hidden, a.layers};
  if (net.hidden == 0) net.hidden = default_hidden_size(manifest.config.num_crystals());

  ResolvedConfig("train")
      .add_path("data", a.data)
      .add_path("out", a.out)
      .add_path("history", a.history)
      .add("hidden", net.hidden)
      .add("layers", net.layers)
      .add("loss", a.loss)
      .add("a", a.cfg.loss.a)
      .add("b", a.cfg.loss.b)
      .add("timing-gradient", to_string(a.cfg.loss.timing_gradient))
      .add_switch("raw-time", a.raw_time)
      .add("lr", a.cfg.learning_rate)
      .add("batch", a.cfg.batch_size)
      .add("epochs", a.cfg.max_epochs)
      .add("patience", a.cfg.patience)
      .add_switch("strict-patience", a.strict_patience)
      .add("tolerance", a.cfg.eval_tolerance)
      .add("val-fraction", a.cfg.validation_fraction)
      .add_switch("geometry", a.cfg.use_geometry)
      .add("geometry-width", a.cfg.geometry_width)
      .add("seed", a.cfg.seed)
      .print(out);
  print_manifest(out, manifest);

  const TrainResult result =
      train(samples, net, a.cfg, [&out](const EpochRecord& r) {
        out << "epoch " << r.epoch << " loss=" << fixed(r.train_loss, 6)
            << " val_f1=" << fixed(r.val_f1, 4)
            << " val_precision=" << fixed(r.val_precision, 4)
            << " val_recall=" << fixed(r.val_recall, 4) << '\n';
      });

  save_checkpoint(result.network, a.out);
  try {
    write_file_atomic(a.history, history_csv(result.history));
  } catch (...) {
    std::error_code ec;
    fs::remove(a.out, ec);
    throw;
  }
  out << "best epoch " << result.best_epoch << "; wrote " << a.out << " and "
      << a.history << '\n';
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
  std::string data;
  std::string model;
  std::string out;
  std::uint32_t geometry_width = 2;
};

void cmd_predict(const PredictArgs& a, std::ostream& out) {
  const auto [manifest, samples] = load_nonempty(a.data);
  const LifNetwork net = load_checkpoint(a.model);
  const bool geometry = model_uses_geometry(net, manifest.config);
  ResolvedConfig("predict")
      .add_path("data", a.data)
      .add_path("model", a.model)
      .add_path("out", a.out)
      .add("geometry-width", a.geometry_width)
      .print(out);
  out << "model: input=" << net.in_dim() << " output=" << net.out_dim()
      << " geometry=" << (geometry ? 1 : 0) << '\n';

  const PredictionRun run =
      predict(net, samples, geometry, a.geometry_width, worker_count());
  DatasetManifest m = manifest;
  m.has_geometry_features = false;
  write_dataset(as_unlabeled(run.trains), m, a.out);
  out << "predicted " << run.trains.size() << " samples in "
      << fixed(run.seconds, 3) << " s (" << fixed(run.samples_per_second(), 1)
      << " samples/s); wrote " << a.out << '\n';
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string data;
  std::uint32_t tolerance = kDefaultTolerance;
  std::string report;
};

void cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto [pm, preds] = read_dataset(a.pred);
  const auto [dm, samples] = load_nonempty(a.data);
  if (pm.config != dm.config) {
    throw std::invalid_argument("prediction and dataset dimensions differ");
  }
  if (preds.size() != samples.size()) {
    throw std::invalid_argument(
        "prediction count " + std::to_string(preds.size()) +
        " does not match sample count " + std::to_string(samples.size()));
  }
  ResolvedConfig cfg("eval");
  cfg.add_path("pred", a.pred).add_path("data", a.data).add("tolerance", a.tolerance);
  if (!a.report.empty()) cfg.add_path("report", a.report);
  cfg.print(out);

  const std::vector<SpikeTrain> trains = inputs_of(preds);
  const MatchReport total =
      evaluate_dataset(trains, samples, a.tolerance, worker_count()).total;
  const std::string line = format_record(total);
  out << line << '\n';
  if (!a.report.empty()) write_file_atomic(a.report, line + "\n");
}

// ----------------------------------------------------------------- compare

struct CompareArgs {
  std::string data;
  std::string model;
  ScwConfig scw;
  std::uint32_t tolerance = kDefaultTolerance;
  std::uint32_t geometry_width = 2;
};

void cmd_compare(const CompareArgs& a, std::ostream& out) {
  const auto [manifest, samples] = load_nonempty(a.data);
  const LifNetwork net = load_checkpoint(a.model);
  const bool geometry = model_uses_geometry(net, manifest.config);
  a.scw.validate(manifest.config);
  ResolvedConfig("compare")
      .add_path("data", a.data)
      .add_path("model", a.model)
      .add("window", a.scw.window)
      .add("min-separation", a.scw.min_ring_separation)
      .add_switch("geometry-filter", a.scw.geometry_filter)
      .add("tolerance", a.tolerance)
      .add("geometry-width", a.geometry_width)
      .print(out);

  const unsigned threads = worker_count();
  const ScwRun scw = run_scw(samples, a.scw, manifest.config);
  const PredictionRun snn =
      predict(net, samples, geometry, a.geometry_width, threads);

  const std::vector<MethodRow> rows = {
      {"SCW", evaluate_dataset(scw.labels, samples, a.tolerance, threads).total,
       scw.seconds},
      {geometry ? "SNN+geometry" : "SNN",
       evaluate_dataset(snn.trains, samples, a.tolerance, threads).total,
       snn.seconds},
  };
  print_scw_totals(out, scw.total);
  out << format_comparison(rows);
  out << "time: wall-clock seconds over " << samples.size()
      << " samples on this machine (" << threads
      << " threads); not comparable to published hardware figures\n";
}

// ----------------------------------------------------------------- inspect

struct InspectArgs {
  std::string data;
  std::uint64_t sample = 0;
  std::string csv;
};

void cmd_inspect(const InspectArgs& a, std::ostream& out) {
  const auto [manifest, samples] = read_dataset(a.data);
  ResolvedConfig cfg("inspect");
  cfg.add_path("data", a.data).add("sample", a.sample);
  if (!a.csv.empty()) cfg.add_path("csv", a.csv);
  cfg.print(out);
  print_manifest(out, manifest);

  std::uint64_t inputs = 0, labels = 0;
  for (const Sample& s : samples) {
    inputs += s.input.size();
    labels += s.label.size();
  }
  const double n = std::max<double>(1.0, static_cast<double>(samples.size()));
  out << "events: input=" << inputs << " label=" << labels
      << " input_per_sample=" << fixed(static_cast<double>(inputs) / n, 2)
      << " label_per_sample=" << fixed(static_cast<double>(labels) / n, 2)
      << '\n';

  if (samples.empty()) {
    if (!a.csv.empty()) throw std::invalid_argument("dataset has no samples");
    return;
  }
  if (a.sample >= samples.size()) {
    throw std::out_of_range("sample " + std::to_string(a.sample) +
                            " out of range (dataset has " +
                            std::to_string(samples.size()) + ")");
  }
  const Sample& s = samples[a.sample];
  out << "sample " << a.sample << ": input=" << s.input.size()
      << " label=" << s.label.size() << '\n';
  if (!a.csv.empty()) {
    export_csv(s, a.csv);
    out << "wrote " << a.csv << '\n';
  }
}

void add_scw_flags(CLI::App* cmd, ScwConfig& scw) {
  cmd->add_option("--window", scw.window, "coincidence window in time steps")
      ->capture_default_str();
  cmd->add_option("--min-separation", scw.min_ring_separation,
                  "largest tolerated deviation of a pair from C/2")
      ->capture_default_str();
  cmd->add_flag("--geometry-filter", scw.geometry_filter,
                "reject pairs that are not roughly opposite");
}

}  // namespace

std::string format_comparison(std::span<const MethodRow> rows) {
  std::size_t name_width = 6;
  for (const MethodRow& r : rows) name_width = std::max(name_width, r.method.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "method"
      << std::right << std::setw(10) << "TP" << std::setw(10) << "FP"
      << std::setw(10) << "FN" << std::setw(9) << "F1" << std::setw(11)
      << "precision" << std::setw(11) << "time" << '\n';
  out << std::fixed;
  for (const MethodRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(name_width)) << r.method
        << std::right << std::setw(10) << r.report.tp << std::setw(10)
        << r.report.fp << std::setw(10) << r.report.fn << std::setprecision(4)
        << std::setw(9) << r.report.f1 << std::setw(11) << r.report.precision
        << std::setprecision(3) << std::setw(10) << r.seconds << "s" << '\n';
  }
  return out.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"PET coincidence detection with spiking networks", "petnet"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
  simulate->add_option("--crystals", sim.crystals, "crystals on the ring (even)")
      ->capture_default_str();
  simulate->add_option("--timesteps", sim.timesteps, "time steps per sample")
      ->capture_default_str();
  simulate->add_option("--events", sim.events, "decays per sample")
      ->capture_default_str();
  simulate->add_option("--p-detect", sim.p_detect, "photon detection probability")
      ->capture_default_str();
  simulate->add_option("--max-shift", sim.max_shift,
                       "largest crystal offset from the opposite one")
      ->capture_default_str();
  simulate->add_option("--samples", sim.samples, "number of samples")->required();
  simulate->add_option("--seed", sim.seed, "generator seed")->capture_default_str();
  simulate->add_option("--out", sim.out, "dataset file to write")->required();

  ScwArgs scw;
  auto* scw_cmd = app.add_subcommand("scw", "single-coincidence-window sorting");
  scw_cmd->add_option("--data", scw.data, "dataset file")->required();
  add_scw_flags(scw_cmd, scw.scw);
  scw_cmd->add_option("--tolerance", scw.tolerance, "match tolerance in steps")
      ->capture_default_str();
  scw_cmd->add_option("--out", scw.out, "optional prediction file to write");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train a spiking network");
  train_cmd->add_option("--data", tr.data, "training dataset")->required();
  train_cmd->add_option("--out", tr.out, "checkpoint file to write")->required();
  train_cmd->add_option("--history", tr.history,
                        "per-epoch CSV (default: <out>.history.csv)");
  train_cmd->add_option("--hidden", tr.hidden, "hidden width (0: 1.533 C)")
      ->capture_default_str();
  train_cmd->add_option("--layers", tr.layers, "hidden layer count")
      ->capture_default_str();
  train_cmd->add_option("--loss", tr.loss, "count | combined-mse | combined-chamfer")
      ->capture_default_str();
  train_cmd->add_option("--a", tr.cfg.loss.a, "count term weight")
      ->capture_default_str();
  train_cmd->add_option("--b", tr.cfg.loss.b, "timing term weight")
      ->capture_default_str();
  train_cmd->add_option("--timing-gradient", tr.timing_gradient,
                        "all-steps | emitted-spikes")
      ->capture_default_str();
  train_cmd->add_flag("--raw-time", tr.raw_time,
                      "measure timing distances in raw steps instead of units of T");
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train_cmd->add_option("--batch", tr.cfg.batch_size, "mini-batch size")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.max_epochs, "epoch limit")
      ->capture_default_str();
  train_cmd->add_option("--patience", tr.cfg.patience, "early-stopping patience")
      ->capture_default_str();
  train_cmd->add_flag("--strict-patience", tr.strict_patience,
                      "count patience from epoch 1 even while F1 is 0");
  train_cmd->add_option("--tolerance", tr.cfg.eval_tolerance,
                        "validation match tolerance")
      ->capture_default_str();
  train_cmd->add_option("--val-fraction", tr.cfg.validation_fraction,
                        "held-out share for early stopping")
      ->capture_default_str();
  train_cmd->add_flag("--geometry", tr.cfg.use_geometry, "add geometry channels");
  train_cmd->add_option("--geometry-width", tr.cfg.geometry_width,
                        "geometry half-width w")
      ->capture_default_str();
  train_cmd->add_option("--seed", tr.cfg.seed, "initialization and shuffle seed")
      ->capture_default_str();

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "run a trained network");
  predict_cmd->add_option("--data", pr.data, "dataset file")->required();
  predict_cmd->add_option("--model", pr.model, "checkpoint file")->required();
  predict_cmd->add_option("--out", pr.out, "prediction file to write")->required();
  predict_cmd->add_option("--geometry-width", pr.geometry_width,
                          "geometry half-width used in training")
      ->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "score predictions against labels");
  eval_cmd->add_option("--pred", ev.pred, "prediction file")->required();
  eval_cmd->add_option("--data", ev.data, "labeled dataset")->required();
  eval_cmd->add_option("--tolerance", ev.tolerance, "match tolerance in steps")
      ->capture_default_str();
  eval_cmd->add_option("--report", ev.report, "optional report file");

  CompareArgs cmp;
  auto* compare_cmd = app.add_subcommand("compare", "SCW versus network table");
  compare_cmd->add_option("--data", cmp.data, "held-out dataset")->required();
  compare_cmd->add_option("--model", cmp.model, "checkpoint file")->required();
  add_scw_flags(compare_cmd, cmp.scw);
  compare_cmd->add_option("--tolerance", cmp.tolerance, "match tolerance in steps")
      ->capture_default_str();
  compare_cmd->add_option("--geometry-width", cmp.geometry_width,
                          "geometry half-width used in training")
      ->capture_default_str();

  InspectArgs in;
  auto* inspect_cmd = app.add_subcommand("inspect", "summarize a dataset file");
  inspect_cmd->add_option("--data", in.data, "dataset file")->required();
  inspect_cmd->add_option("--sample", in.sample, "sample to show")
      ->capture_default_str();
  inspect_cmd->add_option("--csv", in.csv, "export the sample as CSV");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*simulate) cmd_simulate(sim, out);
    else if (*scw_cmd) cmd_scw(scw, out);
    else if (*train_cmd) cmd_train(tr, out);
    else if (*predict_cmd) cmd_predict(pr, out);
    else if (*eval_cmd) cmd_eval(ev, out);
    else if (*compare_cmd) cmd_compare(cmp, out);
    else if (*inspect_cmd) cmd_inspect(in, out);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}

}  // namespace petnet
