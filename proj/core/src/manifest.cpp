#include <json.hpp>

#include "sunn/pipeline.hpp"

namespace sunn {

using nlohmann::json;

std::string manifest_to_json(const RunManifest& m) {
  const auto& c = m.config;
  json j;
  j["input"] = {{"path", m.input_path}, {"sha256", m.input_sha256}};
  j["parameters"] = {
      {"topology",
       {{"radius", c.topology.radius},
        {"connections_per_neuron", c.topology.degree()},
        {"seed", c.topology.seed},
        {"border_policy", to_string(c.topology.border_policy)},
        {"rng", "splitmix64 per-neuron streams"}}},
      {"gaussian", {{"sigma", c.gaussian.sigma}, {"distance", "euclidean-over-channels"}}},
      {"leak",
       {{"leak_rate", c.leak.leak_rate},
        {"ground_conductance", c.leak.ground_conductance},
        {"sink", to_string(c.leak.sink)},
        {"max_iterations", c.leak.max_iterations},
        {"tolerance", c.leak.tolerance},
        {"symmetrization", to_string(c.leak.symmetrization)},
        {"normalization", to_string(c.leak.normalization)}}},
      {"popout",
       {{"bins", c.popout.bins},
        {"max_levels", c.popout.max_levels},
        {"min_component_fraction", c.popout.min_component_fraction}}},
      {"center_strength", c.center_strength},
      {"channels", c.channels},
      {"threads", c.threads},
  };
  j["stages"] = m.stages;
  j["result"] = {{"iterations_run", m.iterations_run},
                 {"converged", m.converged},
                 {"thresholds", m.thresholds},
                 {"duplicate_links", m.duplicate_links},
                 {"dropped_links", m.dropped_links},
                 {"isolated_neurons", m.isolated_neurons}};
  json arts = json::array();
  for (const auto& a : m.artifacts)
    arts.push_back({{"name", a.name}, {"path", a.path.string()}, {"sha256", a.sha256}, {"raw", a.raw}});
  j["artifacts"] = arts;
  json times = json::object();
  for (const auto& t : m.timings) times[t.stage] = t.seconds;
  j["timings_seconds"] = times;
  j["extra"] = m.extra;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("manifest: ") + e.what());
  }
  RunManifest m;
  try {
    m.input_path = j.at("input").at("path").get<std::string>();
    m.input_sha256 = j.at("input").at("sha256").get<std::string>();
    const auto& p = j.at("parameters");
    auto& c = m.config;
    const auto& t = p.at("topology");
    c.topology.radius = t.at("radius").get<std::uint32_t>();
    c.topology.connections_per_neuron = t.at("connections_per_neuron").get<std::uint32_t>();
    c.topology.seed = t.at("seed").get<std::uint64_t>();
    c.topology.border_policy = border_policy_from_string(t.at("border_policy").get<std::string>());
    c.gaussian.sigma = p.at("gaussian").at("sigma").get<double>();
    const auto& l = p.at("leak");
    c.leak.leak_rate = l.at("leak_rate").get<double>();
    c.leak.ground_conductance = l.at("ground_conductance").get<double>();
    c.leak.sink = sink_kind_from_string(l.at("sink").get<std::string>());
    c.leak.max_iterations = l.at("max_iterations").get<std::uint32_t>();
    c.leak.tolerance = l.at("tolerance").get<double>();
    c.leak.symmetrization = symmetrization_from_string(l.at("symmetrization").get<std::string>());
    c.leak.normalization = normalization_from_string(l.at("normalization").get<std::string>());
    const auto& po = p.at("popout");
    c.popout.bins = po.at("bins").get<std::size_t>();
    c.popout.max_levels = po.at("max_levels").get<std::size_t>();
    c.popout.min_component_fraction = po.at("min_component_fraction").get<double>();
    c.center_strength = p.at("center_strength").get<double>();
    c.channels = p.at("channels").get<std::uint32_t>();
    c.threads = p.at("threads").get<unsigned>();
    m.stages = j.at("stages").get<std::vector<std::string>>();
    const auto& r = j.at("result");
    m.iterations_run = r.at("iterations_run").get<std::uint32_t>();
    m.converged = r.at("converged").get<bool>();
    m.thresholds = r.at("thresholds").get<std::vector<double>>();
    m.duplicate_links = r.at("duplicate_links").get<std::size_t>();
    m.dropped_links = r.at("dropped_links").get<std::size_t>();
    m.isolated_neurons = r.at("isolated_neurons").get<std::size_t>();
    for (const auto& a : j.at("artifacts")) {
      m.artifacts.push_back({a.at("name").get<std::string>(), a.at("path").get<std::string>(),
                             a.at("sha256").get<std::string>(), a.at("raw").get<bool>()});
    }
    for (const auto& [k, v] : j.at("timings_seconds").items()) m.timings.push_back({k, v.get<double>()});
    m.extra = j.at("extra").get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("manifest: ") + e.what());
  }
  return m;
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("config: ") + e.what());
  }
  if (j.contains("parameters")) j = j["parameters"];
  if (!j.is_object()) throw Error(ErrorKind::Decode, "config: expected an object");
  PipelineConfig c;
  auto set = [](const json& obj, const char* key, auto& field) {
    if (obj.contains(key)) field = obj.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  auto set_enum = [](const json& obj, const char* key, auto& field, auto parse) {
    if (obj.contains(key)) field = parse(obj.at(key).get<std::string>());
  };
  try {
    const json empty = json::object();
    const auto& t = j.contains("topology") ? j["topology"] : empty;
    set(t, "radius", c.topology.radius);
    set(t, "connections_per_neuron", c.topology.connections_per_neuron);
    set(t, "seed", c.topology.seed);
    set_enum(t, "border_policy", c.topology.border_policy, border_policy_from_string);
    if (j.contains("gaussian")) set(j["gaussian"], "sigma", c.gaussian.sigma);
    const auto& l = j.contains("leak") ? j["leak"] : empty;
    set(l, "leak_rate", c.leak.leak_rate);
    set(l, "ground_conductance", c.leak.ground_conductance);
    set_enum(l, "sink", c.leak.sink, sink_kind_from_string);
    set(l, "max_iterations", c.leak.max_iterations);
    set(l, "tolerance", c.leak.tolerance);
    set_enum(l, "symmetrization", c.leak.symmetrization, symmetrization_from_string);
    set_enum(l, "normalization", c.leak.normalization, normalization_from_string);
    const auto& po = j.contains("popout") ? j["popout"] : empty;
    set(po, "bins", c.popout.bins);
    set(po, "max_levels", c.popout.max_levels);
    set(po, "min_component_fraction", c.popout.min_component_fraction);
    set(j, "center_strength", c.center_strength);
    set(j, "channels", c.channels);
    set(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Decode, std::string("config: ") + e.what());
  }
  return c;
}

}  // namespace sunn
