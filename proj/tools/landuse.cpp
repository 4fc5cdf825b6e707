// landuse <filter|train|adapt|predict|map|eval|synth|all> --config PATH [key=value ...]

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "landuse/error.hpp"
#include "landuse/pipeline.hpp"

namespace {

// The last line of stderr on failure is one JSON object: {"error": kind, "message": text}.
int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Land-use mapping pipeline over geotagged image features"};
  std::string subcommand;
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("subcommand", subcommand, "filter|train|adapt|predict|map|eval|synth|all")->required();
  app.add_option("--config,-c", config_path, "key=value config file");
  app.add_option("overrides", overrides, "key=value overrides applied after the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fail("usage", e.what(), 2);
  }

  try {
    const landuse::Subcommand sub = landuse::parse_subcommand(subcommand);
    landuse::Config config = config_path.empty() ? landuse::Config::parse("", std::filesystem::current_path())
                                                 : landuse::Config::load(config_path);
    for (const auto& o : overrides) config.set(o);
    std::optional<std::string> out_dir;
    if (const char* env = std::getenv("LANDUSE_OUT_DIR"); env && *env) out_dir = env;
    const auto cfg = landuse::PipelineConfig::from(config, out_dir);
    landuse::run(sub, cfg);
    std::cout << subcommand << ": wrote";
    for (const auto& f : landuse::artifacts_of(sub, cfg)) std::cout << ' ' << (cfg.out_dir / f).string();
    std::cout << '\n';
  } catch (const landuse::Error& e) {
    return fail(e.kind(), e.what(), 1);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
