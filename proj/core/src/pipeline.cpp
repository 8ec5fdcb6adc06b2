#include "sunn/pipeline.hpp"

#include <chrono>
#include <fstream>

#include "sunn/image_io.hpp"

namespace sunn {

namespace {

template <class F>
auto timed_stage(const char* name, std::vector<StageTiming>& timings, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
    } else {
      auto result = body();
      timings.push_back({name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
      return result;
    }
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + name + "': " + e.what());
  }
}

}  // namespace

void PipelineConfig::validate() const {
  topology.validate();
  gaussian.validate();
  leak.validate();
  if (popout.bins < 2) throw Error(ErrorKind::InvalidConfig, "popout bins must be >= 2");
  if (popout.max_levels < 1) throw Error(ErrorKind::InvalidConfig, "max_levels must be >= 1");
  if (!(popout.min_component_fraction >= 0.0 && popout.min_component_fraction <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "min_component_fraction must be in [0, 1]");
  if (!(center_strength >= 0.0)) throw Error(ErrorKind::InvalidConfig, "center strength must be >= 0");
  if (channels != 1 && channels != 3) throw Error(ErrorKind::InvalidConfig, "channels must be 1 or 3");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Edges: return "edges";
    case Stage::PRMap: return "prmap";
    case Stage::Popout: return "popout";
    case Stage::Saliency: return "saliency";
    case Stage::Bilayer: return "bilayer";
  }
  return "unknown";
}

Stage stage_from_string(const std::string& s) {
  for (auto st : {Stage::Edges, Stage::PRMap, Stage::Popout, Stage::Saliency, Stage::Bilayer})
    if (to_string(st) == s) return st;
  throw Error(ErrorKind::InvalidConfig, "unknown stage '" + s + "'");
}

std::set<Stage> with_dependencies(std::set<Stage> stages) {
  if (stages.count(Stage::Popout) || stages.count(Stage::Saliency) || stages.count(Stage::Bilayer))
    stages.insert(Stage::PRMap);
  return stages;
}

Mask top_level_mask(const PRMap& pr, const PopoutSettings& settings) {
  const auto set = find_thresholds(pr_histogram(pr, settings.bins), settings.max_levels);
  return primary_mask(pr.residue, set);
}

PipelineResult execute(const PipelineConfig& config, const SignalField& signals, std::set<Stage> stages) {
  config.validate();
  stages = with_dependencies(std::move(stages));
  PipelineResult r;
  const unsigned threads = config.threads;
  r.topology = timed_stage("topology", r.timings,
                           [&] { return build_random_topology(signals.dims, config.topology, threads); });
  r.weights = timed_stage("weights", r.timings,
                          [&] { return compute_weights(signals, r.topology, config.gaussian, threads); });
  if (stages.count(Stage::Edges)) {
    timed_stage("edges", r.timings, [&] {
      r.cmap = connectivity_map(r.weights);
      r.edges = edge_map(*r.cmap);
    });
  }
  if (stages.count(Stage::PRMap)) {
    r.prmap = timed_stage("leaky", r.timings, [&] { return run_leaky(r.weights, r.topology, config.leak, threads); });
  }
  if (stages.count(Stage::Popout)) {
    timed_stage("popout", r.timings, [&] {
      r.thresholds = find_thresholds(pr_histogram(*r.prmap, config.popout.bins), config.popout.max_levels);
      r.popout = popout_components(*r.prmap, *r.thresholds);
    });
  }
  if (stages.count(Stage::Saliency)) {
    timed_stage("saliency", r.timings, [&] {
      r.saliency = center_fusion(*r.prmap, config.center_strength);
      const auto set = find_thresholds(histogram(*r.saliency, config.popout.bins), 1);
      const auto min_area = std::size_t(config.popout.min_component_fraction * double(signals.dims.size()));
      r.saliency_mask = filter_small_components(primary_mask(*r.saliency, set), min_area);
    });
  }
  if (stages.count(Stage::Bilayer)) {
    r.bilayer = timed_stage("bilayer", r.timings, [&] { return bilayer_segment(*r.prmap, config.popout.bins); });
  }
  return r;
}

const Artifact* RunManifest::find(const std::string& name) const {
  for (const auto& a : artifacts)
    if (a.name == name) return &a;
  return nullptr;
}

RunManifest run_pipeline(const PipelineConfig& config, const std::filesystem::path& input, std::set<Stage> stages,
                         const OutputOptions& options) {
  SignalField signals;
  std::string hash;
  try {
    signals = io::load_image(input, config.channels);
    hash = io::sha256_file(input);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage 'load': ") + e.what());
  }
  return run_pipeline(config, signals, input.string(), hash, std::move(stages), options);
}

RunManifest run_pipeline(const PipelineConfig& config, const SignalField& signals, const std::string& input_label,
                         const std::string& input_sha256, std::set<Stage> stages, const OutputOptions& options) {
  stages = with_dependencies(std::move(stages));
  auto result = execute(config, signals, stages);

  RunManifest m;
  m.input_path = input_label;
  m.input_sha256 = input_sha256;
  m.config = config;
  m.config.topology.connections_per_neuron = config.topology.degree();
  for (auto s : stages) m.stages.push_back(to_string(s));
  m.duplicate_links = result.topology.duplicate_count();
  m.dropped_links = result.topology.dropped_count();
  m.timings = result.timings;

  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, options.out_dir.string() + ": " + ec.message());

  auto add = [&](const std::string& name, const std::filesystem::path& file, bool raw) {
    m.artifacts.push_back({name, file, io::sha256_file(file), raw});
  };
  auto raw = [&](const std::string& name, const ScalarField& f) {
    const auto file = options.out_dir / (name + ".raw");
    io::save_raw(f, file);
    add(name, file, true);
  };
  auto image = [&](const std::string& name, const ScalarField& f) {
    if (!options.write_images) return;
    const auto file = options.out_dir / (name + ".png");
    io::save_map(f, file, io::MapFormat::Gray8);
    add(name + "_image", file, false);
  };
  auto mask = [&](const std::string& name, const Mask& msk) {
    const auto file = options.out_dir / (name + ".pbm");
    io::save_mask(msk, file);
    add(name, file, true);
  };

  timed_stage("write", m.timings, [&] {
    if (options.dump_topology) {
      const auto file = options.out_dir / "topology.txt";
      std::ofstream os(file);
      if (!os) throw Error(ErrorKind::Io, file.string() + ": cannot open for writing");
      result.topology.write_dump(os);
      os.close();
      add("topology", file, true);
    }
    if (result.edges) {
      raw("cmap", result.cmap->values);
      raw("edges", *result.edges);
      image("cmap", result.cmap->values);
      image("edges", *result.edges);
      if (!result.cmap->empty_neurons.empty())
        m.extra["cmap_empty_neurons"] = std::to_string(result.cmap->empty_neurons.size());
    }
    if (result.prmap) {
      m.iterations_run = result.prmap->iterations_run;
      m.converged = result.prmap->converged;
      raw("prmap", result.prmap->residue);
      image("prmap", normalize_min_max(result.prmap->residue));
      const auto file = options.out_dir / "trace.txt";
      std::ofstream os(file);
      if (!os) throw Error(ErrorKind::Io, file.string() + ": cannot open for writing");
      os.precision(17);
      os << "# iteration total_residue\n";
      for (const auto& t : result.prmap->trace) os << t.iteration << ' ' << t.total << '\n';
      os.close();
      add("trace", file, true);
    }
    if (result.popout) {
      m.thresholds = result.thresholds->values;
      for (std::size_t j = 0; j < result.popout->masks.size(); ++j)
        mask("popout_" + std::to_string(j), result.popout->masks[j]);
      m.extra["popout_method"] = result.thresholds->method == ThresholdMethod::Valley ? "valley"
                                 : result.thresholds->method == ThresholdMethod::Otsu ? "otsu"
                                                                                      : "mean-fallback";
      if (!result.thresholds->empty()) m.extra["popout_primary"] = std::to_string(result.thresholds->primary);
    }
    if (result.saliency) {
      raw("saliency", *result.saliency);
      image("saliency", *result.saliency);
      mask("saliency_mask", *result.saliency_mask);
    }
    if (result.bilayer) {
      mask("foreground", result.bilayer->foreground);
      mask("background", result.bilayer->background);
      m.extra["bilayer_threshold"] = std::to_string(result.bilayer->threshold);
      if (result.bilayer->degenerate) m.extra["bilayer_degenerate"] = "true";
    }
  });

  if (result.prmap) m.isolated_neurons = result.prmap->isolated_neurons;

  const auto manifest_file = options.out_dir / "manifest.json";
  const auto text = manifest_to_json(m);
  io::write_file(manifest_file, std::vector<std::uint8_t>(text.begin(), text.end()));
  return m;
}

RobustnessResult robustness_experiment(const SignalField& signals, const PipelineConfig& config,
                                       double noise_fraction, std::uint64_t seed, NoiseMode mode) {
  config.validate();
  const auto topology = build_random_topology(signals.dims, config.topology, config.threads);
  const auto weights = compute_weights(signals, topology, config.gaussian, config.threads);
  const auto noisy_weights = perturb_weights(weights, noise_fraction, seed, mode);
  RobustnessResult r;
  r.clean = top_level_mask(run_leaky(weights, topology, config.leak, config.threads), config.popout);
  r.noisy = top_level_mask(run_leaky(noisy_weights, topology, config.leak, config.threads), config.popout);
  r.iou = iou(r.clean, r.noisy);
  return r;
}

}  // namespace sunn
