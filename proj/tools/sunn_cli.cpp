// sunn: edge maps, potential-residue maps and popout segmentation from the
// command line. Exit codes: 0 ok, 2 usage/config, 3 input/output, 4 numerical.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "sunn/evaluation.hpp"
#include "sunn/image_io.hpp"
#include "sunn/parallel.hpp"
#include "sunn/pipeline.hpp"
#include "sunn/synthetic.hpp"

using namespace sunn;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InfeasibleConfig:
      return kExitUsage;
    case ErrorKind::NumericalFailure:
      return kExitNumerical;
    default:
      return kExitInput;
  }
}

// Flags shared by every pipeline subcommand. Strings are parsed after the
// optional --config file so explicit flags win.
struct PipelineFlags {
  std::string config_file;
  std::string border, sink, symmetrization, normalization;
  std::string sink_mask;
  std::map<std::string, double> numbers;
  std::map<std::string, std::uint64_t> integers;
  unsigned threads = 1;
  bool threads_set = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config_file, "JSON parameters file (a manifest also works)")
        ->check(CLI::ExistingFile);
    auto num = [&](const char* flag, const char* key, const char* help) {
      app.add_option_function<double>(flag, [this, key](double v) { numbers[key] = v; }, help);
    };
    auto integer = [&](const char* flag, const char* key, const char* help) {
      app.add_option_function<std::uint64_t>(flag, [this, key](std::uint64_t v) { integers[key] = v; }, help);
    };
    integer("-R,--radius", "radius", "connection radius R (default 5)");
    integer("--connections", "connections", "connections per neuron (default 8R)");
    integer("--seed", "seed", "topology seed (default 0)");
    app.add_option("--border", border, "border policy: resample, clamp, drop");
    num("--sigma", "sigma", "Gaussian kernel width (default 0.1)");
    num("--leak-rate", "leak_rate", "lambda in (0, 1] (default 0.5)");
    num("--ground", "ground", "ground conductance gamma (default 1)");
    app.add_option("--sink", sink, "sink set: border, none, custom");
    app.add_option("--sink-mask", sink_mask, "mask image for --sink custom")->check(CLI::ExistingFile);
    integer("--max-iterations", "max_iterations", "leaky iteration cap (default 50)");
    num("--tolerance", "tolerance", "convergence tolerance on max |dv| (default 1e-6)");
    app.add_option("--symmetrization", symmetrization, "average, max, directed");
    app.add_option("--normalization", normalization, "conductance, random-walk");
    integer("--bins", "bins", "histogram bins (default 64)");
    integer("--levels", "levels", "maximum popout thresholds (default 3)");
    num("--min-component", "min_component", "saliency component floor as image fraction (default 0.001)");
    num("--center", "center", "center-prior strength (default 1)");
    integer("--channels", "channels", "1 = luminance, 3 = RGB (default 1)");
    app.add_option_function<unsigned>(
        "-j,--threads", [this](unsigned v) { threads = v, threads_set = true; }, "worker threads, 0 = all cores");
  }

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (!config_file.empty()) {
      const auto bytes = io::read_file(config_file);
      c = config_from_json(std::string(bytes.begin(), bytes.end()));
    }
    auto n = [&](const char* key, auto& field) {
      if (auto it = numbers.find(key); it != numbers.end()) field = it->second;
      if (auto it = integers.find(key); it != integers.end())
        field = static_cast<std::remove_reference_t<decltype(field)>>(it->second);
    };
    n("radius", c.topology.radius);
    n("connections", c.topology.connections_per_neuron);
    n("seed", c.topology.seed);
    n("sigma", c.gaussian.sigma);
    n("leak_rate", c.leak.leak_rate);
    n("ground", c.leak.ground_conductance);
    n("max_iterations", c.leak.max_iterations);
    n("tolerance", c.leak.tolerance);
    n("bins", c.popout.bins);
    n("levels", c.popout.max_levels);
    n("min_component", c.popout.min_component_fraction);
    n("center", c.center_strength);
    n("channels", c.channels);
    if (!border.empty()) c.topology.border_policy = border_policy_from_string(border);
    if (!sink.empty()) c.leak.sink = sink_kind_from_string(sink);
    if (!symmetrization.empty()) c.leak.symmetrization = symmetrization_from_string(symmetrization);
    if (!normalization.empty()) c.leak.normalization = normalization_from_string(normalization);
    if (!sink_mask.empty()) c.leak.custom_sink = io::load_mask(sink_mask);
    if (threads_set) c.threads = threads;
    c.validate();
    return c;
  }
};

struct StageCommand {
  Stage stage;
  std::string input;
  std::string out_dir;
  bool dump_topology = false;
  bool no_images = false;
  PipelineFlags flags;
};

void print_summary(const RunManifest& m, const std::filesystem::path& out_dir) {
  std::printf("manifest %s\n", (out_dir / "manifest.json").c_str());
  if (!m.iterations_run) return;
  std::printf("iterations %u converged %s\n", m.iterations_run, m.converged ? "yes" : "no");
  if (!m.thresholds.empty()) {
    std::printf("thresholds");
    for (double t : m.thresholds) std::printf(" %.6g", t);
    std::printf("\n");
  }
}

int run_stage(const StageCommand& cmd) {
  const auto config = cmd.flags.resolve();
  OutputOptions out{cmd.out_dir, cmd.dump_topology, !cmd.no_images};
  auto m = run_pipeline(config, cmd.input, {cmd.stage}, out);
  if (!cmd.flags.sink_mask.empty()) {
    m.extra["custom_sink_mask"] = cmd.flags.sink_mask;
    const auto text = manifest_to_json(m);
    io::write_file(out.out_dir / "manifest.json", {text.begin(), text.end()});
  }
  print_summary(m, out.out_dir);
  return 0;
}

ScalarField load_score(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".raw") return io::load_raw(path);
  const auto s = io::load_image(path, 1);
  ScalarField f(s.dims);
  f.values = s.values;
  return f;
}

struct EvalCommand {
  std::string score;
  std::string image;
  std::string baseline;
  std::string gt;
  std::string kind = "object";
  std::uint32_t tolerance = 2;
  std::size_t thresholds = 64;
  std::string out;
};

int run_eval(const EvalCommand& cmd) {
  if (cmd.score.empty() == cmd.baseline.empty())
    throw Error(ErrorKind::InvalidConfig, "give exactly one of --score or --baseline");
  if (cmd.kind != "object" && cmd.kind != "edges") throw Error(ErrorKind::InvalidConfig, "--kind is object or edges");
  ScalarField score;
  if (!cmd.score.empty()) {
    score = load_score(cmd.score);
  } else {
    if (cmd.image.empty()) throw Error(ErrorKind::InvalidConfig, "--baseline needs --image");
    GradientOperator op;
    if (cmd.baseline == "sobel")
      op = GradientOperator::Sobel;
    else if (cmd.baseline == "prewitt")
      op = GradientOperator::Prewitt;
    else
      throw Error(ErrorKind::InvalidConfig, "unknown baseline '" + cmd.baseline + "'");
    score = gradient_magnitude(io::load_image(cmd.image, 1), op);
  }
  const GroundTruth gt{io::load_mask(cmd.gt),
                       cmd.kind == "edges" ? GroundTruthKind::EdgePixels : GroundTruthKind::ObjectMask};
  const auto curve = binary_pr(score, gt, cmd.thresholds, cmd.tolerance);
  if (cmd.out.empty() || cmd.out == "-") {
    curve.write_csv(std::cout);
  } else {
    std::ofstream os(cmd.out);
    if (!os) throw Error(ErrorKind::Io, cmd.out + ": cannot open for writing");
    curve.write_csv(os);
  }
  std::fprintf(stderr, "best_f1 %.6f\n", curve.best_f1());
  return 0;
}

struct RobustnessCommand {
  std::string input;
  std::string out_dir;
  double noise = 0.1;
  std::uint64_t noise_seed = 1;
  std::string mode = "multiplicative";
  PipelineFlags flags;
};

int run_robustness(const RobustnessCommand& cmd) {
  const auto config = cmd.flags.resolve();
  NoiseMode mode;
  if (cmd.mode == "multiplicative")
    mode = NoiseMode::Multiplicative;
  else if (cmd.mode == "additive")
    mode = NoiseMode::Additive;
  else
    throw Error(ErrorKind::InvalidConfig, "unknown noise mode '" + cmd.mode + "'");
  if (!(cmd.noise >= 0.0)) throw Error(ErrorKind::InvalidConfig, "noise must be >= 0");
  const auto signals = io::load_image(cmd.input, config.channels);
  const auto r = robustness_experiment(signals, config, cmd.noise, cmd.noise_seed, mode);

  const std::filesystem::path dir = cmd.out_dir;
  std::filesystem::create_directories(dir);
  RunManifest m;
  m.input_path = cmd.input;
  m.input_sha256 = io::sha256_file(cmd.input);
  m.config = config;
  m.stages = {"robustness"};
  for (const auto& [name, mask] : {std::pair{"clean_mask", &r.clean}, std::pair{"noisy_mask", &r.noisy}}) {
    const auto file = dir / (std::string(name) + ".pbm");
    io::save_mask(*mask, file);
    m.artifacts.push_back({name, file, io::sha256_file(file), true});
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", r.iou);
  m.extra = {{"iou", buf}, {"noise_fraction", std::to_string(cmd.noise)}, {"noise_mode", cmd.mode},
             {"noise_seed", std::to_string(cmd.noise_seed)}};
  const auto text = manifest_to_json(m);
  io::write_file(dir / "manifest.json", {text.begin(), text.end()});
  std::printf("iou %.6f\n", r.iou);
  return 0;
}

struct BenchCommand {
  std::string input;
  std::uint32_t size = 512;
  std::uint32_t iterations = 50;
  unsigned repeat = 3;
  unsigned compare_threads = 0;
  PipelineFlags flags;
};

int run_bench(const BenchCommand& cmd) {
  auto config = cmd.flags.resolve();
  config.leak.max_iterations = cmd.iterations;
  config.leak.tolerance = 1e-300;  // always run the full count
  if (cmd.repeat < 1) throw Error(ErrorKind::InvalidConfig, "--repeat must be >= 1");
  const auto signals =
      cmd.input.empty() ? synthetic::random_field({cmd.size, cmd.size}, config.channels, config.topology.seed)
                        : io::load_image(cmd.input, config.channels);
  const double pixels = double(signals.dims.size());

  // One warm-up run, then `repeat` timed runs; reports the median per stage.
  auto measure = [&](unsigned threads) {
    auto c = config;
    c.threads = threads;
    auto r = execute(c, signals, {Stage::Edges, Stage::PRMap});
    std::map<std::string, std::vector<double>> stage_secs;
    std::vector<double> totals;
    for (unsigned i = 0; i < cmd.repeat; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      r = execute(c, signals, {Stage::Edges, Stage::PRMap});
      totals.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      for (const auto& t : r.timings) stage_secs[t.stage].push_back(t.seconds);
    }
    auto median = [](std::vector<double> v) {
      std::sort(v.begin(), v.end());
      return v[v.size() / 2];
    };
    std::printf("threads %u: total %.3f s\n", resolve_threads(threads), median(totals));
    for (const auto& t : r.timings) {
      const double secs = median(stage_secs[t.stage]);
      std::printf("  %-9s %9.4f s  %12.0f px/s\n", t.stage.c_str(), secs, secs > 0 ? pixels / secs : 0.0);
    }
    return std::pair{io::sha256_hex(io::encode_raw(*r.edges)), io::sha256_hex(io::encode_raw(r.prmap->residue))};
  };
  std::printf("grid %ux%u, R %u, %u links, %u iterations, %u runs after warm-up\n", signals.dims.width,
              signals.dims.height, config.topology.radius, config.topology.degree(), cmd.iterations, cmd.repeat);
  const auto base = measure(config.threads);
  std::printf("edges sha256 %s\nprmap sha256 %s\n", base.first.c_str(), base.second.c_str());
  if (cmd.compare_threads) {
    const bool same = measure(cmd.compare_threads) == base;
    std::printf("outputs %s\n", same ? "identical" : "DIFFER");
    if (!same) return kExitNumerical;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random sparse neuron nets: edges, potential-residue maps and popout segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sunn 0.1.0");

  std::vector<std::unique_ptr<StageCommand>> stage_cmds;
  const std::pair<const char*, const char*> stages[] = {
      {"edges", "connectivity and edge maps"},
      {"prmap", "potential-residue map from the leaky dynamics"},
      {"popout", "multi-threshold popout masks"},
      {"saliency", "center-weighted saliency map and mask"},
      {"bilayer", "foreground/background split"},
  };
  std::function<int()> action;
  for (const auto& [name, help] : stages) {
    auto cmd = std::make_unique<StageCommand>();
    cmd->stage = stage_from_string(name);
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("input", cmd->input, "PNG or PNM image")->required();
    sub->add_option("-o,--out", cmd->out_dir, "output directory")->required();
    sub->add_flag("--dump-topology", cmd->dump_topology, "write topology.txt");
    sub->add_flag("--no-images", cmd->no_images, "skip the PNG previews");
    cmd->flags.attach(*sub);
    auto* raw = cmd.get();
    sub->callback([&action, raw] { action = [raw] { return run_stage(*raw); }; });
    stage_cmds.push_back(std::move(cmd));
  }

  EvalCommand eval;
  auto* ev = app.add_subcommand("eval", "precision/recall curve of a score map, CSV output");
  ev->add_option("--score", eval.score, "score map (.raw dump or image)");
  ev->add_option("--baseline", eval.baseline, "gradient baseline instead of --score: sobel, prewitt");
  ev->add_option("--image", eval.image, "input image for --baseline");
  ev->add_option("--gt", eval.gt, "ground-truth mask")->required();
  ev->add_option("--kind", eval.kind, "object or edges")->capture_default_str();
  ev->add_option("--tolerance", eval.tolerance, "edge match tolerance in pixels")->capture_default_str();
  ev->add_option("--thresholds", eval.thresholds, "number of thresholds")->capture_default_str();
  ev->add_option("-o,--out", eval.out, "CSV file (default stdout)");
  ev->callback([&] { action = [&] { return run_eval(eval); }; });

  RobustnessCommand rob;
  auto* rb = app.add_subcommand("robustness", "popout IoU between clean and perturbed weights");
  rb->add_option("input", rob.input, "PNG or PNM image")->required();
  rb->add_option("-o,--out", rob.out_dir, "output directory")->required();
  rb->add_option("--noise", rob.noise, "noise fraction")->capture_default_str();
  rb->add_option("--noise-seed", rob.noise_seed, "noise seed")->capture_default_str();
  rb->add_option("--mode", rob.mode, "multiplicative or additive")->capture_default_str();
  rob.flags.attach(*rb);
  rb->callback([&] { action = [&] { return run_robustness(rob); }; });

  BenchCommand bench;
  auto* bn = app.add_subcommand("bench", "time edges plus a fixed number of leaky iterations");
  bn->add_option("input", bench.input, "image (default: random field)");
  bn->add_option("--size", bench.size, "random field side")->capture_default_str();
  bn->add_option("--iterations", bench.iterations, "leaky iterations")->capture_default_str();
  bn->add_option("--repeat", bench.repeat, "timed runs after one warm-up")->capture_default_str();
  bn->add_option("--compare-threads", bench.compare_threads, "rerun with this many threads and compare outputs");
  bench.flags.attach(*bn);
  bn->callback([&] { action = [&] { return run_bench(bench); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    std::fprintf(stderr, "sunn: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "sunn: %s\n", e.what());
    return kExitInput;
  }
}
