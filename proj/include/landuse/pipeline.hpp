#ifndef LANDUSE_PIPELINE_HPP
#define LANDUSE_PIPELINE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "landuse/adaptive.hpp"
#include "landuse/config.hpp"
#include "landuse/evaluation.hpp"
#include "landuse/fusion.hpp"

namespace landuse {

enum class Subcommand { Filter, Train, Adapt, Predict, Map, Eval, Synth, All };
Subcommand parse_subcommand(std::string_view name);
std::string_view to_string(Subcommand s);

enum class VoteMode { Hard, ScoreSum };

/// Typed view of a Config for the pipeline stages. Unset keys take the documented defaults.
struct PipelineConfig {
  Config raw;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<Taxonomy> custom_taxonomy;
  Level level = Level::Fine;
  std::vector<std::string> streams{"object", "scene"};
  double dilation_m = kDefaultDilationM;
  Schedule train;
  GateConfig gate;
  std::optional<FusionWeights> fusion;
  bool predict_adapted = true;
  Level map_level = Level::Fine;
  VoteMode vote = VoteMode::Hard;
  Level eval_level = Level::Fine;
  MappingOptions eval;

  /// `out_dir_override` (e.g. from LANDUSE_OUT_DIR) wins over the out_dir key.
  static PipelineConfig from(const Config& config, const std::optional<std::string>& out_dir_override = {});
  const Taxonomy& taxonomy() const { return custom_taxonomy ? *custom_taxonomy : builtin_taxonomy(); }
  FusionWeights fusion_weights() const;
};

/// Runs one subcommand; artifacts are written under `cfg.out_dir`.
void run(Subcommand subcommand, const PipelineConfig& cfg);

/// Names of the files each subcommand writes (relative to out_dir).
std::vector<std::string> artifacts_of(Subcommand subcommand, const PipelineConfig& cfg);

}  // namespace landuse

#endif  // LANDUSE_PIPELINE_HPP
