#include "les/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "les/io.hpp"
#include "les/operators.hpp"
#include "les/rng.hpp"

namespace les {

namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex(std::uint64_t x) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, x);
  return buf;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string kind_tag(ClosureKind kind) {
  std::string s = lower(closure_name(kind));
  s.erase(std::remove(s.begin(), s.end(), '-'), s.end());
  return s;
}

void note(const RunDir& run, const std::string& msg) {
  if (run.log) run.log(msg);
}

void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// Writes bytes and returns the manifest line for the report.
std::string emit(const RunDir& run, const std::string& name, const std::vector<std::uint8_t>& bytes,
                 const std::string& extra = {}) {
  write_file(run.path(name), bytes);
  return "file " + name + " bytes=" + std::to_string(bytes.size()) + " fnv1a=" + hex(fnv1a64(bytes.data(), bytes.size())) +
         (extra.empty() ? "" : " " + extra) + "\n";
}

std::string emit_text(const RunDir& run, const std::string& name, const std::string& text) {
  return emit(run, name, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<ClosureKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<ClosureKind> out;
  for (const auto& n : names) {
    const ClosureKind k = parse_closure_kind(n);
    require(closure_has_network(k), ErrorCode::kInvalidArgument,
            std::string("variant ") + closure_name(k) + " has nothing to train");
    out.push_back(k);
  }
  return out;
}

std::string spectrum_csv(const std::vector<std::pair<std::string, const Spectrum*>>& cols) {
  std::ostringstream out;
  out << "bin_low,bin_high";
  for (const auto& c : cols) out << "," << c.first;
  out << "\n";
  const Spectrum& ref = *cols.front().second;
  for (std::size_t b = 0; b < ref.size(); ++b) {
    out << num(ref.bin_low[b]) << "," << num(ref.bin_high[b]);
    for (const auto& c : cols) out << "," << (b < c.second->size() ? num(c.second->energy[b]) : "");
    out << "\n";
  }
  return out.str();
}

std::string outcome_line(const std::string& name, bool blew_up, double blowup_time, int steps) {
  return "model " + name + (blew_up ? " BLOWUP t=" + num(blowup_time) : " completed") +
         " steps=" + std::to_string(steps) + "\n";
}

// Per-snapshot error, energy and spectrum error, one column group per model.
std::string decay_csv(const std::vector<double>& times, const std::vector<double>& fdns_energy,
                      const std::vector<ModelOutcome>& models) {
  std::ostringstream out;
  out << "t,fdns_energy";
  for (const auto& m : models) out << "," << m.name << "_error," << m.name << "_energy," << m.name << "_spectrum_error";
  out << "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out << num(times[k]) << "," << num(fdns_energy[k]);
    for (const auto& m : models) {
      if (k < m.error.size()) {
        out << "," << num(m.error[k]) << "," << num(m.energy[k]) << "," << num(m.spectrum_error[k]);
      } else {
        out << ",,,";
      }
    }
    out << "\n";
  }
  return out.str();
}

ClosureModel load_network(const std::string& path, ClosureKind kind) {
  ClosureModel m = read_checkpoint(path);
  require(m.kind == kind, ErrorCode::kFormat,
          path + ": holds " + closure_name(m.kind) + ", expected " + closure_name(kind));
  return m;
}

}  // namespace

std::string RunDir::path(const std::string& name) const {
  if (fs::path(name).is_absolute()) return name;
  return (fs::path(dir) / name).string();
}

std::string dataset_file(int coarse_n, int sim) {
  return "train_" + std::to_string(coarse_n) + "_" + std::to_string(sim) + ".lesd";
}

std::string checkpoint_file(ClosureKind kind, int coarse_n) {
  return kind_tag(kind) + "_" + std::to_string(coarse_n) + ".lesp";
}

std::string ensemble_checkpoint_file(ClosureKind kind, int coarse_n, int replica) {
  return "ensemble_" + kind_tag(kind) + "_" + std::to_string(coarse_n) + "_" + std::to_string(replica) + ".lesp";
}

void write_report_section(const RunDir& run, const std::string& name, const std::string& body) {
  fs::create_directories(run.dir);
  const ExperimentConfig& c = run.cfg;
  write_text(run.path("config.snapshot"), c.to_text());

  std::ostringstream sec;
  sec << "== " << name << " ==\n";
  sec << "config_hash = " << hex(c.hash()) << "\n";
  sec << "seed = " << c.seed << "\n";
  sec << "eval_seed = " << c.eval_seed << "\n";
  sec << "fine_res = " << c.fine_n << "\n";
  sec << "coarse_res =";
  for (int n : c.coarse_n) sec << " " << n;
  sec << "\n";
  sec << "dt = " << num(c.dt) << "\n";
  sec << "dt_coarse = " << num(c.dt_coarse()) << "\n";
  sec << "t_train = " << num(c.t_train) << "\n";
  sec << "t_eval = " << num(c.eval_horizon()) << "\n";
  sec << "kf_warmup = " << num(c.kf_warmup) << "\n";
  sec << "kf_horizon = " << num(c.kf_horizon) << "\n";
  sec << body;
  if (!body.empty() && body.back() != '\n') sec << "\n";

  // Sections start at lines "== name ==" and run to the next such line.
  std::vector<std::pair<std::string, std::string>> sections;
  if (fs::exists(run.path("report.txt"))) {
    const auto bytes = read_file(run.path("report.txt"));
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("== ", 0) == 0 && line.size() > 6 && line.compare(line.size() - 3, 3, " ==") == 0) {
        sections.push_back({line.substr(3, line.size() - 6), {}});
      } else if (!sections.empty()) {
        sections.back().second += line + "\n";
      }
    }
    // Drop the blank separator lines between sections.
    for (auto& s : sections) {
      while (s.second.size() >= 2 && s.second.compare(s.second.size() - 2, 2, "\n\n") == 0) s.second.pop_back();
    }
  }
  const std::string text = sec.str();
  bool replaced = false;
  for (auto& s : sections) {
    if (s.first == name) {
      s.second = text.substr(text.find('\n') + 1);
      replaced = true;
    }
  }
  if (!replaced) sections.push_back({name, text.substr(text.find('\n') + 1)});
  std::string out;
  for (std::size_t k = 0; k < sections.size(); ++k) {
    if (k) out += "\n";
    out += "== " + sections[k].first + " ==\n" + sections[k].second;
  }
  write_text(run.path("report.txt"), out);
}

std::string read_report_section(const RunDir& run, const std::string& name) {
  if (!fs::exists(run.path("report.txt"))) return {};
  const auto bytes = read_file(run.path("report.txt"));
  const std::string text(bytes.begin(), bytes.end());
  const std::string head = "== " + name + " ==\n";
  auto b = text.find(head);
  if (b == std::string::npos) return {};
  auto e = text.find("\n== ", b + head.size());
  return text.substr(b, e == std::string::npos ? std::string::npos : e + 1 - b);
}

TrainingData command_gen_data(const RunDir& run) {
  fs::create_directories(run.dir);
  const TrainingData data = generate_training_data(run.cfg, run.log);
  std::string body;
  for (std::size_t s = 0; s < data.sim_seeds.size(); ++s) {
    body += "simulation " + std::to_string(s) + " seed=" + std::to_string(data.sim_seeds[s]) +
            " fine_fingerprint=" + hex(data.fine_fingerprints[s]) + "\n";
  }
  for (std::size_t r = 0; r < data.coarse_n.size(); ++r) {
    for (std::size_t s = 0; s < data.sets[r].size(); ++s) {
      const auto& d = data.sets[r][s];
      body += emit(run, dataset_file(data.coarse_n[r], static_cast<int>(s)), encode_dataset(d),
                   "seed=" + std::to_string(d.seed) + " snapshots=" + std::to_string(d.size()));
    }
  }
  write_report_section(run, "gen-data", body);
  return data;
}

std::vector<SnapshotDataset> load_training_sets(const RunDir& run, int coarse_n) {
  std::vector<SnapshotDataset> out;
  for (int s = 0; s < run.cfg.n_sims; ++s) {
    const std::string p = run.path(dataset_file(coarse_n, s));
    require(fs::exists(p), ErrorCode::kIo, p + " is missing; run gen-data first");
    out.push_back(read_dataset(p));
    require(out.back().grid.nx == coarse_n, ErrorCode::kFormat, p + ": unexpected resolution");
  }
  return out;
}

std::vector<CalibrationResult> command_calibrate_smag(const RunDir& run) {
  const ExperimentConfig& c = run.cfg;
  const auto candidates = smagorinsky_candidates(c.cs_min, c.cs_max, c.cs_step);
  std::vector<CalibrationResult> out;
  std::string body;
  for (int n : c.coarse_n) {
    const auto data = load_training_sets(run, n);
    require(!data.empty(), ErrorCode::kInvalidArgument, "calibrate-smag: no training simulations");
    const double t_target = data.front().times.back() - data.front().times.front();
    note(run, "calibrate-smag: " + std::to_string(n) + "^2 against t = " + num(t_target));
    auto res = calibrate_smagorinsky(data, candidates, t_target, c.dt_coarse(), c.nu, run.log);
    std::ostringstream csv;
    csv << "cs,error\n";
    for (std::size_t k = 0; k < res.candidates.size(); ++k) csv << num(res.candidates[k]) << "," << num(res.errors[k]) << "\n";
    body += "coarse " + std::to_string(n) + " cs=" + num(res.cs) + " t_target=" + num(t_target) + "\n";
    body += emit_text(run, "calibration_" + std::to_string(n) + ".csv", csv.str());
    body += emit(run, checkpoint_file(ClosureKind::kSmagorinsky, n), encode_checkpoint(ClosureModel::smagorinsky(res.cs)));
    out.push_back(std::move(res));
  }
  write_report_section(run, "calibrate-smag", body);
  return out;
}

std::uint64_t training_seed(std::uint64_t base, ClosureKind kind) {
  return derive_seed(base, 0x7EA10000ULL + static_cast<std::uint64_t>(kind));
}

std::vector<TrainSummary> command_train(const RunDir& run, const std::vector<std::string>& closures) {
  const ExperimentConfig& c = run.cfg;
  const int n = c.train_coarse_n;
  const auto kinds = parse_kinds(closures.empty() ? c.closures : closures);
  const auto data = load_training_sets(run, n);
  const TrajectoryLoss loss(data.front().grid, c.loss_config());
  const auto windows = enumerate_windows(data, c.n_unroll, 0);
  require(!windows.empty(), ErrorCode::kInsufficientWindow, "train: datasets shorter than one window");
  const double nc = mean_window_loss(loss, ClosureModel::none(), data, windows, c.threads);

  std::vector<TrainSummary> out;
  std::string body = "coarse " + std::to_string(n) + " windows=" + std::to_string(windows.size()) +
                     " nc_window_loss=" + num(nc) + "\n";
  for (ClosureKind kind : kinds) {
    TrainSummary s;
    s.kind = kind;
    s.coarse_n = n;
    s.seed = training_seed(c.seed, kind);
    TrainConfig tc = c.train_config();
    tc.seed = s.seed;
    const std::string name = closure_name(kind);
    note(run, "train: " + name + " on " + std::to_string(n) + "^2 for " + std::to_string(tc.epochs) + " epochs");
    auto result = train(data, c.initial_model(kind, s.seed), tc, [&](const EpochRecord& e) {
      note(run, "train: " + name + " epoch " + std::to_string(e.epoch) + " loss " + num(e.mean_loss) +
                    " relative " + num(e.relative_loss));
    });
    s.model = std::move(result.model);
    s.history = std::move(result.history);
    s.window_loss = mean_window_loss(loss, s.model, data, windows, c.threads);
    s.nc_window_loss = nc;

    std::ostringstream csv;
    csv << "epoch,mean_loss,nc_loss,relative_loss\n";
    for (const auto& e : s.history)
      csv << e.epoch << "," << num(e.mean_loss) << "," << num(e.nc_loss) << "," << num(e.relative_loss) << "\n";
    body += "variant " + name + " seed=" + std::to_string(s.seed) + " epochs=" + std::to_string(tc.epochs) +
            " window_loss=" + num(s.window_loss) + " relative_to_nc=" + num(s.window_loss / nc) + "\n";
    body += emit_text(run, "train_" + kind_tag(kind) + "_" + std::to_string(n) + ".csv", csv.str());
    body += emit(run, checkpoint_file(kind, n), encode_checkpoint(s.model), "seed=" + std::to_string(s.seed));
    out.push_back(std::move(s));
  }
  write_report_section(run, "train", body);
  return out;
}

ClosureModel smagorinsky_for(const RunDir& run, int coarse_n, std::string* source) {
  const std::string p = run.path(checkpoint_file(ClosureKind::kSmagorinsky, coarse_n));
  if (fs::exists(p)) {
    const ClosureModel m = read_checkpoint(p);
    require(m.kind == ClosureKind::kSmagorinsky, ErrorCode::kFormat, p + ": not a SMAG checkpoint");
    if (source) *source = "calibrated";
    return m;
  }
  if (source) *source = "fallback";
  return ClosureModel::smagorinsky(run.cfg.cs_fallback);
}

DecayReport command_run_decay(const RunDir& run) {
  const ExperimentConfig& c = run.cfg;
  const int n = c.train_coarse_n;
  std::string smag_source;
  std::vector<NamedModel> models{{"NC", ClosureModel::none()}, {"SMAG", smagorinsky_for(run, n, &smag_source)}};
  std::string body;
  for (ClosureKind kind : parse_kinds(c.closures)) {
    const std::string p = run.path(checkpoint_file(kind, n));
    if (fs::exists(p)) {
      models.push_back({closure_name(kind), load_network(p, kind)});
    } else {
      body += "variant " + std::string(closure_name(kind)) + " not trained (no " + checkpoint_file(kind, n) + ")\n";
    }
  }
  const auto ref = make_reference(c, n, c.eval_seed, c.eval_horizon(), run.log);
  const DecayReport rep = run_decaying_experiment(models, ref, c, run.log);

  body += "coarse " + std::to_string(n) + " smag_cs=" + num(models[1].model.cs) + " (" + smag_source + ")\n";
  body += "extrapolation_from t=" + num(c.t_train) + "\n";
  for (const auto& m : rep.models) {
    body += outcome_line(m.name, m.blew_up, m.blowup_time, m.steps_completed);
    if (!m.error.empty()) {
      body += "  final_error=" + num(m.error.back()) + " final_spectrum_error=" + num(m.spectrum_error.back()) + "\n";
    }
  }
  body += emit_text(run, "decay_" + std::to_string(n) + ".csv", decay_csv(ref.times, rep.fdns_energy, rep.models));
  std::vector<std::pair<std::string, const Spectrum*>> cols{{"FDNS_mid", &rep.fdns_mid}, {"FDNS_final", &rep.fdns_final}};
  for (const auto& m : rep.models) {
    if (!m.mid_spectrum.energy.empty()) cols.push_back({m.name + "_mid", &m.mid_spectrum});
    if (!m.final_spectrum.energy.empty() && !m.blew_up) cols.push_back({m.name + "_final", &m.final_spectrum});
  }
  body += emit_text(run, "decay_" + std::to_string(n) + "_spectra.csv", spectrum_csv(cols));
  write_report_section(run, "run-decay", body);
  return rep;
}

KolmogorovReport command_run_kolmogorov(const RunDir& run) {
  const ExperimentConfig& c = run.cfg;
  const int n = c.kf_coarse_n;
  std::string smag_source, body;
  std::vector<NamedModel> models{{"NC", ClosureModel::none()}, {"SMAG", smagorinsky_for(run, n, &smag_source)}};
  for (ClosureKind kind : {ClosureKind::kSkew, ClosureKind::kCnn}) {
    std::string file = checkpoint_file(kind, n);
    if (!fs::exists(run.path(file))) file = ensemble_checkpoint_file(kind, n, 0);
    if (!fs::exists(run.path(file))) {
      body += "variant " + std::string(closure_name(kind)) + " skipped: no checkpoint at " + std::to_string(n) + "^2\n";
      continue;
    }
    ClosureModel m = load_network(run.path(file), kind);
    if (kind == ClosureKind::kCnn) m.kind = ClosureKind::kCnnClipped;
    models.push_back({closure_name(m.kind), m});
    body += "variant " + std::string(closure_name(m.kind)) + " from " + file + "\n";
  }
  const KolmogorovReport rep = run_kolmogorov_experiment(models, c, run.log);

  body += "coarse " + std::to_string(n) + " smag_cs=" + num(models[1].model.cs) + " (" + smag_source + ")" +
          " ic_seed=" + std::to_string(rep.seed) + "\n";
  for (const auto& m : rep.models) {
    body += outcome_line(m.name, m.blew_up, m.blowup_time, m.steps_completed);
    body += "  top_bin_energy=" + num(m.top_bin_energy) + " max_closure_energy=" + num(m.max_closure_energy) + "\n";
  }
  const std::string tag = std::to_string(n);
  std::ostringstream energy;
  energy << "t";
  for (const auto& m : rep.models) energy << "," << m.name << "_energy," << m.name << "_closure_energy";
  energy << "\n";
  std::size_t rows = 0;
  for (const auto& m : rep.models) rows = std::max(rows, m.steps.size());
  for (std::size_t k = 0; k < rows; ++k) {
    double t = 0.0;
    for (const auto& m : rep.models)
      if (k < m.steps.size()) t = m.steps[k].t;
    energy << num(t);
    for (const auto& m : rep.models) {
      if (k < m.steps.size()) {
        energy << "," << num(m.steps[k].energy) << "," << num(m.steps[k].closure_energy);
      } else {
        energy << ",,";
      }
    }
    energy << "\n";
  }
  body += emit_text(run, "kolmogorov_" + tag + "_energy.csv", energy.str());
  std::vector<std::pair<std::string, const Spectrum*>> cols;
  for (const auto& m : rep.models) cols.push_back({m.name, &m.mean_spectrum});
  body += emit_text(run, "kolmogorov_" + tag + "_spectra.csv", spectrum_csv(cols));
  std::ostringstream kde;
  kde << "model,energy,density\n";
  for (const auto& m : rep.models)
    for (std::size_t k = 0; k < m.kde_points.size(); ++k)
      kde << m.name << "," << num(m.kde_points[k]) << "," << num(m.kde_density[k]) << "\n";
  body += emit_text(run, "kolmogorov_" + tag + "_kde.csv", kde.str());
  write_report_section(run, "run-kolmogorov", body);
  return rep;
}

std::vector<EnsembleReport> command_run_ensemble(const RunDir& run, const std::vector<std::string>& closures) {
  const ExperimentConfig& c = run.cfg;
  const int n = c.ensemble_coarse_n;
  const auto kinds = parse_kinds(closures.empty() ? std::vector<std::string>{"SKEW", "CNN"} : closures);
  const auto data = load_training_sets(run, n);
  const auto ref = make_reference(c, n, c.eval_seed, c.eval_horizon(), run.log);
  std::vector<double> fdns_energy;
  for (const auto& s : ref.fdns) fdns_energy.push_back(kinetic_energy(s));

  std::vector<EnsembleReport> out;
  std::string body = "coarse " + std::to_string(n) + " replicas=" + std::to_string(c.n_replicas) +
                     " epochs=" + std::to_string(c.ensemble_epochs) + "\n";
  for (ClosureKind kind : kinds) {
    EnsembleReport rep = run_ensemble(kind, c.n_replicas, data, ref, c, c.ensemble_epochs, run.log);
    int stable = 0;
    std::vector<ModelOutcome> outcomes;
    for (const auto& r : rep.replicas) {
      stable += r.outcome.blew_up ? 0 : 1;
      body += "replica " + r.outcome.name + " seed=" + std::to_string(r.seed) +
              " final_relative_loss=" + num(r.final_relative_loss) + " " +
              outcome_line(r.outcome.name, r.outcome.blew_up, r.outcome.blowup_time, r.outcome.steps_completed).substr(6 + r.outcome.name.size());
      body += emit(run, ensemble_checkpoint_file(kind, n, r.replica), encode_checkpoint(r.model),
                   "seed=" + std::to_string(r.seed));
      outcomes.push_back(r.outcome);
    }
    body += "variant " + std::string(closure_name(kind)) + " stable " + std::to_string(stable) + "/" +
            std::to_string(rep.replicas.size()) + "\n";
    body += emit_text(run, "ensemble_" + kind_tag(kind) + "_" + std::to_string(n) + ".csv",
                      decay_csv(ref.times, fdns_energy, outcomes));
    out.push_back(std::move(rep));
  }
  write_report_section(run, "run-ensemble", body);
  return out;
}

Spectrum command_spectrum(const RunDir& run, const std::string& dataset, int index, const std::string& output) {
  require(!dataset.empty(), ErrorCode::kInvalidArgument, "spectrum: a dataset is required");
  const SnapshotDataset d = read_dataset(run.path(dataset));
  require(d.size() > 0, ErrorCode::kInvalidArgument, "spectrum: dataset has no snapshots");
  const long long k = index < 0 ? static_cast<long long>(d.size()) + index : index;
  require(k >= 0 && k < static_cast<long long>(d.size()), ErrorCode::kInvalidArgument,
          "spectrum: snapshot index out of range");
  const Spectrum s = energy_spectrum(d.snapshots[static_cast<std::size_t>(k)]);
  const std::string name = output.empty() ? "spectrum_" + fs::path(dataset).stem().string() + "_" + std::to_string(k) + ".csv" : output;
  std::string body = "dataset " + dataset + " snapshot=" + std::to_string(k) + " t=" + num(d.times[k]) +
                     " seed=" + std::to_string(d.seed) + "\n";
  body += emit_text(run, name, spectrum_csv({{"energy", &s}}));
  write_report_section(run, "spectrum", body);
  return s;
}

SkewDiagReport command_skew_diag(const RunDir& run, const std::string& checkpoint) {
  const ExperimentConfig& c = run.cfg;
  const int n = c.train_coarse_n;
  const std::string file = checkpoint.empty() ? checkpoint_file(ClosureKind::kSkew, n) : checkpoint;
  require(fs::exists(run.path(file)), ErrorCode::kIo, run.path(file) + " is missing; run train first");
  const ClosureModel skew = load_network(run.path(file), ClosureKind::kSkew);
  const auto ref = make_reference(c, n, c.eval_seed, c.eval_horizon(), run.log);

  SkewDiagReport rep;
  const int per = c.steps_per_snapshot();
  const auto traj = simulate(ref.fdns.front(),
                             les_config(c, skew, static_cast<int>(ref.fdns.size() - 1) * per, ForcingSpec::none(), per));
  rep.rows = skew_term_diagnostics(skew, traj.times, traj.snapshots, c.nu);
  for (const auto& [name, model] : std::vector<std::pair<std::string, ClosureModel>>{
           {"SKEW", skew}, {"SKEW-K", skew_ablation(skew, true, false)}, {"SKEW-Q", skew_ablation(skew, false, true)}}) {
    note(run, "skew-diag: " + name);
    rep.ablations.push_back(run_against_reference({name, model}, ref, c));
  }

  std::ostringstream csv;
  csv << "t,k_energy,q_energy,k_energy_relative,k_norm,q_norm,additivity_residual\n";
  double worst_k = 0.0, worst_add = 0.0, max_q = -1e300;
  for (const auto& r : rep.rows) {
    csv << num(r.t) << "," << num(r.k_energy) << "," << num(r.q_energy) << "," << num(r.k_energy_relative) << ","
        << num(r.k_norm) << "," << num(r.q_norm) << "," << num(r.additivity_residual) << "\n";
    worst_k = std::max(worst_k, r.k_energy_relative);
    worst_add = std::max(worst_add, r.additivity_residual);
    max_q = std::max(max_q, r.q_energy);
  }
  std::string body = "checkpoint " + file + " coarse " + std::to_string(n) + " snapshots=" + std::to_string(rep.rows.size()) + "\n";
  body += "max_k_energy_relative=" + num(worst_k) + " max_q_energy=" + num(max_q) +
          " max_additivity_residual=" + num(worst_add) + "\n";
  for (const auto& m : rep.ablations) body += outcome_line(m.name, m.blew_up, m.blowup_time, m.steps_completed);
  body += emit_text(run, "skew_diag_" + std::to_string(n) + ".csv", csv.str());
  std::vector<double> fdns_energy;
  for (const auto& s : ref.fdns) fdns_energy.push_back(kinetic_energy(s));
  body += emit_text(run, "skew_ablation_" + std::to_string(n) + ".csv", decay_csv(ref.times, fdns_energy, rep.ablations));
  write_report_section(run, "skew-diag", body);
  return rep;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"gen-data", "calibrate-smag", "train", "run-decay",
                                              "run-kolmogorov", "run-ensemble", "spectrum", "skew-diag"};
  return names;
}

std::string run_command(const std::string& name, const RunDir& run, const CommandOptions& opt) {
  run.cfg.validate();
  fs::create_directories(run.dir);
  if (name == "gen-data") {
    command_gen_data(run);
  } else if (name == "calibrate-smag") {
    command_calibrate_smag(run);
  } else if (name == "train") {
    command_train(run, opt.closures);
  } else if (name == "run-decay") {
    command_run_decay(run);
  } else if (name == "run-kolmogorov") {
    command_run_kolmogorov(run);
  } else if (name == "run-ensemble") {
    command_run_ensemble(run, opt.closures);
  } else if (name == "spectrum") {
    command_spectrum(run, opt.dataset, opt.snapshot, opt.output);
  } else if (name == "skew-diag") {
    command_skew_diag(run, opt.checkpoint);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown command '" + name + "'");
  }
  return read_report_section(run, name);
}

}  // namespace les
