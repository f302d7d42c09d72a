#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "lesclosure.h"

namespace {

struct Options {
  std::string config;
  std::string run_dir = "run";
  std::vector<std::string> overrides;
  std::string closures;
  std::string dataset;
  int snapshot = -1;
  std::string output;
  std::string checkpoint;
  bool quiet = false;
};

void print_log(const char* message, void*) { std::fprintf(stderr, "[les] %s\n", message); }

int report_failure(int status) {
  std::fprintf(stderr, "error (%s): %s\n", les_status_name(status), les_last_error());
  return status;
}

// Loads the config file (or the defaults) and applies --set overrides.
int make_config(const Options& o, les_config* cfg) {
  int st = o.config.empty() ? les_config_default(cfg) : les_config_load(o.config.c_str(), cfg);
  if (st != LES_OK) return st;
  for (const auto& kv : o.overrides) {
    st = les_config_override(*cfg, kv.c_str());
    if (st != LES_OK) return st;
  }
  return les_config_validate(*cfg);
}

int run(const std::string& command, const Options& o) {
  if (!o.quiet) les_set_log(print_log, nullptr);
  les_config cfg = nullptr;
  int st = make_config(o, &cfg);
  if (st != LES_OK) {
    les_config_free(cfg);
    return report_failure(st);
  }
  if (command == "show-config") {
    std::size_t n = 0;
    les_config_text(cfg, nullptr, 0, &n);
    std::string text(n, '\0');
    les_config_text(cfg, text.data(), n, &n);
    std::fputs(text.c_str(), stdout);
    les_config_free(cfg);
    return 0;
  }
  les_command_options opt;
  les_command_options_init(&opt);
  opt.closures = o.closures.empty() ? nullptr : o.closures.c_str();
  opt.dataset = o.dataset.empty() ? nullptr : o.dataset.c_str();
  opt.snapshot = o.snapshot;
  opt.output = o.output.empty() ? nullptr : o.output.c_str();
  opt.checkpoint = o.checkpoint.empty() ? nullptr : o.checkpoint.c_str();
  st = les_command_run(command.c_str(), o.run_dir.c_str(), cfg, &opt);
  les_config_free(cfg);
  if (st != LES_OK) return report_failure(st);
  std::size_t n = 0;
  les_report_section(o.run_dir.c_str(), command.c_str(), nullptr, 0, &n);
  std::string section(n, '\0');
  if (les_report_section(o.run_dir.c_str(), command.c_str(), section.data(), n, &n) == LES_OK)
    std::fputs(section.c_str(), stdout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learned LES closures on a staggered periodic grid"};
  app.require_subcommand(1);
  Options o;
  std::vector<std::string> names;
  for (int k = 0; k < les_command_count(); ++k) names.emplace_back(les_command_name(k));
  names.emplace_back("show-config");

  const char* help_text[] = {
      "Run the DNS training simulations and write filtered datasets",
      "Sweep the Smagorinsky constant against the training data",
      "Train the network closures by trajectory fitting",
      "Evaluate all closures on a fresh decaying-turbulence run",
      "Run the forced Kolmogorov-flow experiment",
      "Train and evaluate replica ensembles",
      "Energy spectrum of one dataset snapshot",
      "Energy split of the SKEW closure and ablated runs",
      "Print the effective configuration",
  };
  std::string chosen;
  for (std::size_t k = 0; k < names.size(); ++k) {
    CLI::App* sub = app.add_subcommand(names[k], help_text[k]);
    sub->add_option("-c,--config", o.config, "Configuration file (key = value lines)")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", o.overrides, "Override a configuration key: key=value");
    sub->add_flag("-q,--quiet", o.quiet, "No progress messages");
    if (names[k] != "show-config") sub->add_option("-r,--run-dir", o.run_dir, "Output directory")->capture_default_str();
    if (names[k] == "train" || names[k] == "run-ensemble")
      sub->add_option("--closures", o.closures, "Comma-separated variants to train");
    if (names[k] == "spectrum") {
      sub->add_option("--dataset", o.dataset, "Dataset (.lesd), relative to the run directory")->required();
      sub->add_option("--snapshot", o.snapshot, "Snapshot index, -1 for the last")->capture_default_str();
      sub->add_option("-o,--output", o.output, "CSV name");
    }
    if (names[k] == "skew-diag") sub->add_option("--checkpoint", o.checkpoint, "SKEW checkpoint (.lesp)");
    sub->callback([&chosen, name = names[k]] { chosen = name; });
  }
  CLI11_PARSE(app, argc, argv);
  return run(chosen, o);
}
