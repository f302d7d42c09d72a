#include "lesclosure.h"

#include <cstring>
#include <mutex>
#include <new>
#include <sstream>
#include <string>

#include "les/commands.hpp"
#include "les/diagnostics.hpp"
#include "les/io.hpp"

struct les_config_s {
  les::ExperimentConfig cfg;
};

struct les_dataset_s {
  les::SnapshotDataset ds;
};

struct les_model_s {
  les::ClosureModel model;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
les_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

void log_message(const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  if (g_log_fn) g_log_fn(msg.c_str(), g_log_user);
}

// Runs f, translating exceptions to status codes and the thread's message.
template <class F>
int guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return LES_OK;
  } catch (const les::Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return LES_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LES_ERR_INTERNAL;
  }
}

void need(bool cond, const char* what) { les::require(cond, les::ErrorCode::kInvalidArgument, what); }

void copy_out(const void* data, std::size_t n, void* buf, std::size_t cap, std::size_t* needed) {
  if (needed) *needed = n;
  if (!buf) return;
  need(cap >= n, "output buffer too small");
  std::memcpy(buf, data, n);
}

void copy_string(const std::string& s, char* buf, std::size_t cap, std::size_t* needed) {
  copy_out(s.c_str(), s.size() + 1, buf, cap, needed);
}

std::vector<std::string> split_commas(const char* text) {
  std::vector<std::string> out;
  if (!text) return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(item.substr(b, item.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

}  // namespace

extern "C" {

const char* les_version(void) { return "1.0.0"; }

const char* les_status_name(int status) {
  switch (status) {
    case LES_OK: return "ok";
    case LES_ERR_INVALID_ARGUMENT: return "invalid argument";
    case LES_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case LES_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case LES_ERR_INCOMPATIBLE_RHS: return "incompatible right-hand side";
    case LES_ERR_BLOW_UP: return "blow-up";
    case LES_ERR_NON_FINITE_GRADIENT: return "non-finite gradient";
    case LES_ERR_INSUFFICIENT_WINDOW: return "insufficient window";
    case LES_ERR_IO: return "i/o error";
    case LES_ERR_FORMAT: return "format error";
    case LES_ERR_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

const char* les_last_error(void) { return g_last_error.c_str(); }

void les_set_log(les_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

int les_config_default(les_config* out) {
  return guarded([&] {
    need(out, "null output handle");
    *out = new les_config_s{};
  });
}

int les_config_parse(const char* text, les_config* out) {
  return guarded([&] {
    need(text && out, "null argument");
    *out = new les_config_s{les::ExperimentConfig::parse(text)};
  });
}

int les_config_load(const char* path, les_config* out) {
  return guarded([&] {
    need(path && out, "null argument");
    *out = new les_config_s{les::ExperimentConfig::load(path)};
  });
}

int les_config_set(les_config cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg && key && value, "null argument");
    cfg->cfg.set(key, value);
  });
}

int les_config_override(les_config cfg, const char* assignment) {
  return guarded([&] {
    need(cfg && assignment, "null argument");
    cfg->cfg.apply_override(assignment);
  });
}

int les_config_validate(les_config cfg) {
  return guarded([&] {
    need(cfg, "null config");
    cfg->cfg.validate();
  });
}

int les_config_hash(les_config cfg, uint64_t* out) {
  return guarded([&] {
    need(cfg && out, "null argument");
    *out = cfg->cfg.hash();
  });
}

int les_config_text(les_config cfg, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(cfg, "null config");
    copy_string(cfg->cfg.to_text(), buf, cap, needed);
  });
}

void les_config_free(les_config cfg) { delete cfg; }

int les_command_count(void) { return static_cast<int>(les::command_names().size()); }

const char* les_command_name(int index) {
  const auto& names = les::command_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

void les_command_options_init(les_command_options* opt) {
  if (!opt) return;
  *opt = les_command_options{nullptr, nullptr, -1, nullptr, nullptr};
}

int les_command_run(const char* name, const char* run_dir, les_config cfg, const les_command_options* opt) {
  return guarded([&] {
    need(name && run_dir && cfg, "null argument");
    les::RunDir run{run_dir, cfg->cfg, log_message};
    les::CommandOptions o;
    if (opt) {
      o.closures = split_commas(opt->closures);
      if (opt->dataset) o.dataset = opt->dataset;
      o.snapshot = opt->snapshot;
      if (opt->output) o.output = opt->output;
      if (opt->checkpoint) o.checkpoint = opt->checkpoint;
    }
    les::run_command(name, run, o);
  });
}

int les_report_section(const char* run_dir, const char* name, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(run_dir && name, "null argument");
    les::RunDir run;
    run.dir = run_dir;
    copy_string(les::read_report_section(run, name), buf, cap, needed);
  });
}

int les_dataset_read(const char* path, les_dataset* out) {
  return guarded([&] {
    need(path && out, "null argument");
    *out = new les_dataset_s{les::read_dataset(path)};
  });
}

int les_dataset_info(les_dataset ds, int* nx, int* ny, int* n_snapshots, double* dt_between, double* nu,
                     uint64_t* seed) {
  return guarded([&] {
    need(ds, "null dataset");
    if (nx) *nx = ds->ds.grid.nx;
    if (ny) *ny = ds->ds.grid.ny;
    if (n_snapshots) *n_snapshots = static_cast<int>(ds->ds.size());
    if (dt_between) *dt_between = ds->ds.dt_between;
    if (nu) *nu = ds->ds.nu;
    if (seed) *seed = ds->ds.seed;
  });
}

int les_dataset_snapshot(les_dataset ds, int k, double* t, double* u, double* v) {
  return guarded([&] {
    need(ds, "null dataset");
    need(k >= 0 && static_cast<std::size_t>(k) < ds->ds.size(), "snapshot index out of range");
    const auto& s = ds->ds.snapshots[static_cast<std::size_t>(k)];
    if (t) *t = ds->ds.times[static_cast<std::size_t>(k)];
    if (u) std::memcpy(u, s.u.values().data(), s.u.values().size() * sizeof(double));
    if (v) std::memcpy(v, s.v.values().data(), s.v.values().size() * sizeof(double));
  });
}

int les_dataset_encode(les_dataset ds, uint8_t* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(ds, "null dataset");
    const auto bytes = les::encode_dataset(ds->ds);
    copy_out(bytes.data(), bytes.size(), buf, cap, needed);
  });
}

int les_dataset_write(les_dataset ds, const char* path) {
  return guarded([&] {
    need(ds && path, "null argument");
    les::write_dataset(path, ds->ds);
  });
}

void les_dataset_free(les_dataset ds) { delete ds; }

int les_model_read(const char* path, les_model* out) {
  return guarded([&] {
    need(path && out, "null argument");
    *out = new les_model_s{les::read_checkpoint(path)};
  });
}

int les_model_decode(const uint8_t* bytes, size_t n, les_model* out) {
  return guarded([&] {
    need(bytes && out, "null argument");
    *out = new les_model_s{les::decode_checkpoint(std::vector<std::uint8_t>(bytes, bytes + n))};
  });
}

int les_model_info(les_model model, int* kind, size_t* n_params) {
  return guarded([&] {
    need(model, "null model");
    if (kind) *kind = static_cast<int>(model->model.kind);
    if (n_params) *n_params = model->model.param_count();
  });
}

int les_model_params(les_model model, double* out, size_t cap) {
  return guarded([&] {
    need(model && out, "null argument");
    const auto& p = model->model.params;
    need(cap >= p.size(), "output buffer too small");
    std::memcpy(out, p.data(), p.size() * sizeof(double));
  });
}

int les_model_encode(les_model model, uint8_t* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(model, "null model");
    const auto bytes = les::encode_checkpoint(model->model);
    copy_out(bytes.data(), bytes.size(), buf, cap, needed);
  });
}

int les_model_write(les_model model, const char* path) {
  return guarded([&] {
    need(model && path, "null argument");
    les::write_checkpoint(path, model->model);
  });
}

void les_model_free(les_model model) { delete model; }

int les_spectrum(const double* u, const double* v, int nx, int ny, double* energy, int cap, int* n_bins) {
  return guarded([&] {
    need(u && v, "null velocity");
    const les::Grid g = les::Grid::periodic_square(nx);
    les::require(ny == nx, les::ErrorCode::kDimensionMismatch, "les_spectrum: grid must be square");
    les::StaggeredVelocity vel(g);
    std::memcpy(vel.u.values().data(), u, g.size() * sizeof(double));
    std::memcpy(vel.v.values().data(), v, g.size() * sizeof(double));
    const les::Spectrum s = les::energy_spectrum(vel);
    if (n_bins) *n_bins = static_cast<int>(s.size());
    if (!energy) return;
    need(cap >= static_cast<int>(s.size()), "output buffer too small");
    std::memcpy(energy, s.energy.data(), s.size() * sizeof(double));
  });
}

int les_file_fnv1a(const char* path, uint64_t* out) {
  return guarded([&] {
    need(path && out, "null argument");
    const auto bytes = les::read_file(path);
    *out = les::fnv1a64(bytes.data(), bytes.size());
  });
}

}  // extern "C"
