#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sunn/evaluation.hpp"
#include "sunn/leaky.hpp"
#include "sunn/popout.hpp"
#include "sunn/smart_neuron.hpp"
#include "sunn/topology.hpp"

namespace sunn {

struct PopoutSettings {
  std::size_t bins = 64;
  std::size_t max_levels = 3;
  /// Saliency path only: components below this fraction of the image are dropped.
  double min_component_fraction = 0.001;
};

struct PipelineConfig {
  TopologyConfig topology;
  GaussianParams gaussian;
  LeakConfig leak;
  PopoutSettings popout;
  double center_strength = 1.0;
  std::uint32_t channels = 1;
  unsigned threads = 1;

  void validate() const;
};

enum class Stage { Edges, PRMap, Popout, Saliency, Bilayer };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);
/// Adds the stages each requested stage depends on.
std::set<Stage> with_dependencies(std::set<Stage> stages);

struct StageTiming {
  std::string stage;
  double seconds;
};

/// In-memory products of one run. Fields for disabled stages stay empty.
struct PipelineResult {
  RandomTopology topology;
  WeightField weights;
  std::optional<CMap> cmap;
  std::optional<ScalarField> edges;
  std::optional<PRMap> prmap;
  std::optional<ThresholdSet> thresholds;
  std::optional<Popout> popout;
  std::optional<ScalarField> saliency;
  std::optional<Mask> saliency_mask;
  std::optional<Bilayer> bilayer;
  std::vector<StageTiming> timings;
};

/// Runs topology -> weights -> requested stages. Errors are rethrown with the
/// failing stage named; the error kind is kept.
PipelineResult execute(const PipelineConfig& config, const SignalField& signals, std::set<Stage> stages);

/// Primary popout mask of a PR map under the popout settings.
Mask top_level_mask(const PRMap& pr, const PopoutSettings& settings);

struct Artifact {
  std::string name;
  std::filesystem::path path;
  std::string sha256;
  bool raw = false;  // oracle interchange format, expected to reproduce bit-for-bit
};

struct RunManifest {
  std::string input_path;
  std::string input_sha256;
  PipelineConfig config;
  std::vector<std::string> stages;
  std::uint32_t iterations_run = 0;
  bool converged = false;
  std::vector<double> thresholds;
  std::size_t duplicate_links = 0;
  std::size_t dropped_links = 0;
  std::size_t isolated_neurons = 0;
  std::vector<Artifact> artifacts;
  std::vector<StageTiming> timings;
  std::map<std::string, std::string> extra;  // experiment summaries

  const Artifact* find(const std::string& name) const;
};

struct OutputOptions {
  std::filesystem::path out_dir;
  bool dump_topology = false;
  bool write_images = true;
};

/// Loads the input, executes, writes all artifacts plus manifest.json into
/// options.out_dir and returns the manifest.
RunManifest run_pipeline(const PipelineConfig& config, const std::filesystem::path& input, std::set<Stage> stages,
                         const OutputOptions& options);

/// Same, for an already decoded signal (input_path recorded as given).
RunManifest run_pipeline(const PipelineConfig& config, const SignalField& signals, const std::string& input_label,
                         const std::string& input_sha256, std::set<Stage> stages, const OutputOptions& options);

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);
/// Reads a parameters object (or a whole manifest); missing keys keep their
/// defaults. A custom sink mask is not part of the document.
PipelineConfig config_from_json(const std::string& text);

struct RobustnessResult {
  Mask clean;
  Mask noisy;
  double iou = 0.0;
};

/// Runs the pipeline on clean and perturbed weights and compares the
/// primary popout masks.
RobustnessResult robustness_experiment(const SignalField& signals, const PipelineConfig& config,
                                       double noise_fraction, std::uint64_t seed,
                                       NoiseMode mode = NoiseMode::Multiplicative);

}  // namespace sunn
