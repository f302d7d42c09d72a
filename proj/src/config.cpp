#include "les/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "les/io.hpp"

namespace les {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* b = value.data();
  const char* e = b + value.size();
  const auto [ptr, ec] = std::from_chars(b, e, out);
  require(ec == std::errc() && ptr == e, ErrorCode::kInvalidArgument,
          "config: bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  fail(ErrorCode::kInvalidArgument, "config: bad boolean '" + value + "' for " + key);
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << v[k];
  return out.str();
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Key table in canonical output order.
const std::vector<std::pair<std::string, Field>>& fields() {
  using C = ExperimentConfig;
  static const std::vector<std::pair<std::string, Field>> table = [] {
    std::vector<std::pair<std::string, Field>> t;
    const auto add_int = [&t](const char* key, int C::*member) {
      t.push_back({key, {[key, member](C& c, const std::string& v) { c.*member = parse_number<int>(key, v); },
                         [member](const C& c) { return std::to_string(c.*member); }}});
    };
    const auto add_u64 = [&t](const char* key, std::uint64_t C::*member) {
      t.push_back({key,
                   {[key, member](C& c, const std::string& v) { c.*member = parse_number<std::uint64_t>(key, v); },
                    [member](const C& c) { return std::to_string(c.*member); }}});
    };
    const auto add_double = [&t](const char* key, double C::*member) {
      t.push_back({key, {[key, member](C& c, const std::string& v) { c.*member = parse_number<double>(key, v); },
                         [member](const C& c) { return fmt(c.*member); }}});
    };
    add_int("fine_n", &C::fine_n);
    t.push_back({"coarse_n", {[](C& c, const std::string& v) {
                                c.coarse_n.clear();
                                for (const auto& s : split_list(v)) c.coarse_n.push_back(parse_number<int>("coarse_n", s));
                              },
                              [](const C& c) { return join(c.coarse_n); }}});
    add_double("dt", &C::dt);
    add_int("coarse_multiplier", &C::coarse_multiplier);
    add_int("snapshot_stride", &C::snapshot_stride);
    add_double("nu", &C::nu);
    add_double("t_train", &C::t_train);
    add_int("n_sims", &C::n_sims);
    add_u64("seed", &C::seed);
    add_u64("eval_seed", &C::eval_seed);
    add_int("kappa_max", &C::kappa_max);
    add_double("target_energy", &C::target_energy);
    t.push_back({"closures", {[](C& c, const std::string& v) { c.closures = split_list(v); },
                              [](const C& c) { return join(c.closures); }}});
    add_int("hidden_channels", &C::hidden_channels);
    add_int("hidden_layers", &C::hidden_layers);
    add_int("radius", &C::radius);
    add_int("epochs", &C::epochs);
    add_int("batch_size", &C::batch_size);
    add_double("lr", &C::lr);
    add_int("n_unroll", &C::n_unroll);
    add_int("threads", &C::threads);
    add_int("train_coarse_n", &C::train_coarse_n);
    add_double("cs_min", &C::cs_min);
    add_double("cs_max", &C::cs_max);
    add_double("cs_step", &C::cs_step);
    add_double("cs_fallback", &C::cs_fallback);
    add_double("t_eval", &C::t_eval);
    add_int("n_replicas", &C::n_replicas);
    add_int("ensemble_epochs", &C::ensemble_epochs);
    add_int("ensemble_coarse_n", &C::ensemble_coarse_n);
    add_double("kf_warmup", &C::kf_warmup);
    add_double("kf_horizon", &C::kf_horizon);
    add_int("kf_coarse_n", &C::kf_coarse_n);
    add_int("kf_sample_stride", &C::kf_sample_stride);
    t.push_back({"kf_reference", {[](C& c, const std::string& v) { c.kf_reference = parse_bool("kf_reference", v); },
                                  [](const C& c) { return std::string(c.kf_reference ? "1" : "0"); }}});
    return t;
  }();
  return table;
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(*this, trim(value));
      return;
    }
  }
  fail(ErrorCode::kInvalidArgument, "config: unknown key '" + key + "'");
}

void ExperimentConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos, ErrorCode::kInvalidArgument,
          "config: override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidArgument,
            "config: line " + std::to_string(lineno) + " is not key = value");
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  const auto bytes = read_file(path);
  return parse(std::string(bytes.begin(), bytes.end()));
}

void ExperimentConfig::validate() const {
  const auto check = [](bool ok, const std::string& what) {
    require(ok, ErrorCode::kInvalidArgument, "config: " + what);
  };
  check(is_power_of_two(fine_n) && fine_n >= 8, "fine_n must be a power of two >= 8");
  check(!coarse_n.empty(), "coarse_n must not be empty");
  for (int n : coarse_n) {
    check(is_power_of_two(n) && n >= 4 && n <= fine_n, "coarse_n entries must be powers of two in [4, fine_n]");
  }
  const auto listed = [&](int n) {
    for (int c : coarse_n)
      if (c == n) return true;
    return false;
  };
  check(listed(train_coarse_n), "train_coarse_n must be one of coarse_n");
  check(listed(ensemble_coarse_n), "ensemble_coarse_n must be one of coarse_n");
  check(listed(kf_coarse_n), "kf_coarse_n must be one of coarse_n");
  check(dt > 0.0 && nu >= 0.0, "dt must be > 0 and nu >= 0");
  check(coarse_multiplier >= 1, "coarse_multiplier must be >= 1");
  check(snapshot_stride >= 1 && snapshot_stride % coarse_multiplier == 0,
        "snapshot_stride must be a positive multiple of coarse_multiplier");
  check(t_train > 0.0 && t_eval >= 0.0, "t_train must be > 0 and t_eval >= 0");
  check(n_sims >= 0, "n_sims must be >= 0");
  check(kappa_max >= 1 && kappa_max < fine_n / 2, "kappa_max must be in [1, fine_n/2)");
  check(target_energy > 0.0, "target_energy must be > 0");
  for (const auto& c : closures) {
    const ClosureKind k = parse_closure_kind(c);
    check(closure_has_network(k), "closures lists trainable variants only (got " + c + ")");
  }
  check(hidden_channels >= 1 && hidden_layers >= 0 && radius >= 0, "bad network shape");
  check(epochs >= 0 && ensemble_epochs >= 0 && batch_size >= 1, "epochs >= 0 and batch_size >= 1");
  check(lr > 0.0 && n_unroll >= 1 && threads >= 1, "lr > 0, n_unroll >= 1, threads >= 1");
  check(cs_min >= 0.0 && cs_step > 0.0 && cs_max >= cs_min, "bad Smagorinsky search grid");
  check(cs_fallback >= 0.0, "cs_fallback must be >= 0");
  check(n_replicas >= 2, "n_replicas must be >= 2");
  check(kf_warmup >= 0.0 && kf_horizon > 0.0 && kf_sample_stride >= 1, "bad Kolmogorov horizon settings");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [name, field] : fields()) out << name << " = " << field.get(*this) << "\n";
  return out.str();
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string text = to_text();
  return fnv1a64(text.data(), text.size());
}

LossConfig ExperimentConfig::loss_config() const {
  LossConfig lc;
  lc.dt = dt_coarse();
  lc.steps_per_snapshot = steps_per_snapshot();
  lc.n_unroll = n_unroll;
  lc.nu = nu;
  lc.forcing = ForcingSpec::none();
  return lc;
}

TrainConfig ExperimentConfig::train_config(int epochs_override) const {
  TrainConfig tc;
  tc.epochs = epochs_override >= 0 ? epochs_override : epochs;
  tc.batch_size = batch_size;
  tc.adam.lr = lr;
  tc.seed = seed;
  tc.threads = threads;
  tc.loss = loss_config();
  return tc;
}

ClosureModel ExperimentConfig::initial_model(ClosureKind kind, std::uint64_t model_seed) const {
  return ClosureModel::network(kind, hidden_channels, hidden_layers, radius, model_seed);
}

}  // namespace les
