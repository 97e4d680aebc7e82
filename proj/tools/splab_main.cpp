#include <CLI11.hpp>
#include <iostream>

#include "splab/csv.hpp"
#include "splab/pipeline.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir{"out"};
  long long seed_override{-1};
  std::string stages_csv;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "config file (key = value lines)");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed_override, "override sim.seed");
}

splab::RunConfig load_config(const CommonOpts& o) {
  splab::RunConfig cfg = o.config_path.empty()
                             ? splab::parse_config("")
                             : splab::parse_config_file(o.config_path);
  if (o.seed_override >= 0)
    cfg.sim.seed = static_cast<std::uint64_t>(o.seed_override);
  return cfg;
}

std::vector<std::string> split_stages(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int run_stages(const CommonOpts& o, const std::vector<std::string>& stages) {
  const splab::RunConfig cfg = load_config(o);
  try {
    const splab::RunManifest man = splab::run_pipeline(cfg, stages, o.out_dir);
    std::cout << splab::emit_report(man, o.out_dir);
    return splab::all_checks_pass(man, o.out_dir) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for supercritical measure-valued "
               "branching processes"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::map<std::string, std::vector<std::string>> simple = {
      {"eigen", {"eigen"}},
      {"flow", {"flow"}},
      {"extinct", {"extinct"}},
      {"norming", {"norming"}},
      {"oracle", {"oracle"}},
      {"simulate", {"simulate"}},
      {"verify", {"verify"}},
  };
  std::map<std::string, CLI::App*> cmds;
  for (auto& [name, _] : simple) {
    CLI::App* c = app.add_subcommand(
        name, name == "verify" ? "run the full pipeline and the checks"
                               : "run the " + name + " stage (and dependencies)");
    add_common(c, opts);
    cmds[name] = c;
  }
  CLI::App* run = app.add_subcommand("run", "run an explicit stage list");
  add_common(run, opts);
  run->add_option("--stages", opts.stages_csv, "comma-separated stage list")
      ->required();
  CLI::App* report = app.add_subcommand("report", "re-print the report of a run");
  add_common(report, opts);

  CLI11_PARSE(app, argc, argv);

  for (auto& [name, stages] : simple)
    if (cmds[name]->parsed()) return run_stages(opts, stages);
  if (run->parsed()) return run_stages(opts, split_stages(opts.stages_csv));
  if (report->parsed()) {
    try {
      const std::string man_text = splab::read_file(opts.out_dir + "/manifest.txt");
      splab::RunManifest man;
      man.tool_version = splab::kToolVersion;
      std::stringstream ss(man_text);
      std::string line;
      while (std::getline(ss, line)) {
        if (line.rfind("stage.", 0) == 0) {
          const size_t eq = line.find(" = ");
          splab::StageStatus st;
          st.name = line.substr(6, eq - 6);
          st.completed = line.substr(eq + 3) == "completed";
          man.stages.push_back(st);
        } else if (line.rfind("config_hash = ", 0) == 0) {
          man.config_hash = line.substr(14);
        } else if (line.rfind("seed = ", 0) == 0) {
          man.seed = std::stoull(line.substr(7));
        }
      }
      std::cout << splab::emit_report(man, opts.out_dir);
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 0;
}
