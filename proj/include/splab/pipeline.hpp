#pragma once

#include <memory>
#include <optional>

#include "splab/config.hpp"

namespace splab {

struct StageStatus {
  std::string name;
  bool completed{false};
  std::string error;
};

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed{0};
  std::string tool_version;
  std::string started, finished;
  std::vector<StageStatus> stages;
  std::vector<std::pair<std::string, std::string>> files;  // name, digest

  std::string text() const;
};

/// In-memory results of a pipeline run; stages fill what they computed.
struct RunState {
  RunConfig cfg;
  ModelSpec model;
  std::optional<GeneratorMatrix> gen;
  std::shared_ptr<Propagator> prop;
  std::optional<EigenTriple> triple;
  std::shared_ptr<NonlinearFlow> flow;
  std::optional<UniformBound> bound;
  std::optional<FlowResult> flow_result;
  std::optional<ExtinctionResult> ext;
  std::optional<BackwardFamily> family;
  std::optional<SHReport> sh_report;
  std::optional<ShConstants> oracle;
  std::vector<PathRecord> paths;
  std::optional<LaplaceCheck> laplace;
  std::optional<ShDiagnostics> diagnostics;
  double ratio_expected{0.0};
};

/// Executes the requested stages (dependencies are pulled in automatically)
/// in the canonical order eigen, flow, extinct, norming, oracle, simulate,
/// verify; writes the CSV artifacts and the manifest into out_dir. A stage
/// failure halts the run and leaves a partial manifest.
RunManifest run_pipeline(const RunConfig& cfg,
                         const std::vector<std::string>& stages,
                         const std::string& out_dir, RunState* state_out = nullptr);

/// Human-readable summary: one table per verified limit-theorem group.
std::string emit_report(const RunManifest& manifest, const std::string& out_dir);

/// True when every check executed by the run passed.
bool all_checks_pass(const RunManifest& manifest, const std::string& out_dir);

extern const char* kToolVersion;

}  // namespace splab
