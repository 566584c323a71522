#include "stap/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "stap/error.hpp"
#include "stap/util.hpp"

namespace stap {

std::string_view to_string(PipelineMode m) {
  switch (m) {
    case PipelineMode::Parallel: return "parallel";
    case PipelineMode::Serial: return "serial";
    case PipelineMode::TemporalOnly: return "temporal-only";
    case PipelineMode::SpatialOnly: return "spatial-only";
  }
  return "parallel";
}

PipelineMode parse_pipeline_mode(std::string_view text) {
  for (auto m : {PipelineMode::Parallel, PipelineMode::Serial, PipelineMode::TemporalOnly, PipelineMode::SpatialOnly}) {
    if (to_string(m) == text) return m;
  }
  throw ConfigError("mode must be parallel, serial, temporal-only or spatial-only, got '" + std::string(text) + "'");
}

BackendSpec BackendSpec::parse(std::string_view text) {
  const auto t = trim(text);
  if (t == "synthetic") return {Kind::Synthetic, ""};
  if (t.rfind("synthetic:", 0) == 0) return {Kind::Synthetic, t.substr(10)};
  if (t.rfind("trace:", 0) == 0 && t.size() > 6) return {Kind::Trace, t.substr(6)};
  throw ConfigError("backend must be trace:FILE or synthetic:SPEC, got '" + t + "'");
}

std::string BackendSpec::text() const {
  if (kind == Kind::Trace) return "trace:" + argument;
  return argument.empty() ? "synthetic" : "synthetic:" + argument;
}

SpatialConfig PipelineConfig::effective_spatial() const {
  SpatialConfig s = spatial;
  if (mode == PipelineMode::Serial && !spatial_selection_explicit) {
    s.frame_selection = FrameSelection::All;
    s.frames_per_window = sampling.window_size;
  }
  return s;
}

void PipelineConfig::validate() const {
  sampling.validate();
  if (uses_spatial()) effective_spatial().validate(sampling.window_size);
  fusion.validate();
  if (mode == PipelineMode::Serial && !preprocess_variant) {
    throw ConfigError("serial mode requires a preprocess variant");
  }
  if (max_inflight_windows < 1) throw ConfigError("max_inflight_windows must be >= 1");
  if (!(anomaly_threshold >= 0.0 && anomaly_threshold <= 1.0)) throw ConfigError("anomaly_threshold must lie in [0,1]");
  if (!(skeleton.line_thickness_px > 0.0)) throw ConfigError("line_thickness_px must be > 0");
  if (!(skeleton.min_joint_conf >= 0.0 && skeleton.min_joint_conf <= 1.0)) {
    throw ConfigError("min_joint_conf must lie in [0,1]");
  }
  if (max_windows && *max_windows < 0) throw ConfigError("max_windows must be >= 0");
}

namespace {

std::vector<AnomalyClass> parse_priority(const std::string& text) {
  std::vector<AnomalyClass> out;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(parse_anomaly_class(item));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  return out;
}

std::string priority_text(const std::vector<AnomalyClass>& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ",";
    out += to_string(p[i]);
  }
  return out;
}

}  // namespace

namespace {

// "value   # note" -> "value". A '#' or ';' only starts a comment after whitespace.
std::string strip_inline_comment(const std::string& raw) {
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if ((raw[i] == '#' || raw[i] == ';') && (raw[i - 1] == ' ' || raw[i - 1] == '\t')) return trim(raw.substr(0, i));
  }
  return trim(raw);
}

}  // namespace

void apply_config_text(PipelineConfig& cfg, const std::string& text) {
  boost::property_tree::ptree tree;
  try {
    std::istringstream in(text);
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string value = strip_inline_comment(node.data());
      const std::string where = section + "." + key;
      if (section == "pipeline") {
        if (key == "mode") cfg.mode = parse_pipeline_mode(value);
        else if (key == "max_inflight_windows") cfg.max_inflight_windows = static_cast<std::size_t>(parse_int(value, where));
        else if (key == "anomaly_threshold") cfg.anomaly_threshold = parse_double(value, where);
        else if (key == "threads") cfg.threads = static_cast<std::size_t>(parse_int(value, where));
        else if (key == "max_windows") cfg.max_windows = parse_int(value, where);
        else if (key == "classes") cfg.profile = parse_profile(value);
        else throw ConfigError("config: unknown key " + where);
      } else if (section == "sampling") {
        if (key == "frame_interval") cfg.sampling.frame_interval = static_cast<std::size_t>(parse_int(value, where));
        else if (key == "window_size") cfg.sampling.window_size = static_cast<std::size_t>(parse_int(value, where));
        else if (key == "window_stride") cfg.sampling.window_stride = static_cast<std::size_t>(parse_int(value, where));
        else if (key == "tail_policy") cfg.sampling.tail_policy = parse_tail_policy(value);
        else throw ConfigError("config: unknown key " + where);
      } else if (section == "spatial") {
        if (key == "backend") cfg.spatial_backend = BackendSpec::parse(value);
        else if (key == "confidence_threshold") cfg.spatial.confidence_threshold = parse_double(value, where);
        else if (key == "frames_per_window") {
          cfg.spatial.frames_per_window = static_cast<std::size_t>(parse_int(value, where));
          cfg.spatial_selection_explicit = true;
        } else if (key == "frame_selection") {
          cfg.spatial.frame_selection = parse_frame_selection(value);
          cfg.spatial_selection_explicit = true;
        } else throw ConfigError("config: unknown key " + where);
      } else if (section == "preprocess") {
        if (key == "variant") cfg.preprocess_variant = parse_preprocess_variant(value);
        else if (key == "line_thickness_px") cfg.skeleton.line_thickness_px = parse_double(value, where);
        else if (key == "min_joint_conf") cfg.skeleton.min_joint_conf = parse_double(value, where);
        else throw ConfigError("config: unknown key " + where);
      } else if (section == "temporal") {
        if (key == "backend") cfg.temporal_backend = BackendSpec::parse(value);
        else throw ConfigError("config: unknown key " + where);
      } else if (section == "fusion") {
        if (key == "key_object_priority") cfg.fusion.key_object_priority = parse_priority(value);
        else if (key == "gate_required_for_gunshot") cfg.fusion.gate_required_for_gunshot = parse_bool(value, where);
        else if (key == "person_triggers_fight") cfg.fusion.person_triggers_fight = parse_bool(value, where);
        else throw ConfigError("config: unknown key " + where);
      } else {
        throw ConfigError("config: unknown section [" + section + "]");
      }
    }
  }
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  PipelineConfig cfg;
  apply_config_text(cfg, buf.str());
  // Relative trace paths are relative to the config file.
  const auto base = path.parent_path();
  for (auto* spec : {&cfg.spatial_backend, &cfg.temporal_backend}) {
    if (*spec && (*spec)->kind == BackendSpec::Kind::Trace && std::filesystem::path((*spec)->argument).is_relative()) {
      (*spec)->argument = std::filesystem::absolute(base / (*spec)->argument).lexically_normal().string();
    }
  }
  return cfg;
}

std::string to_config_text(const PipelineConfig& cfg) {
  std::ostringstream o;
  o << "[pipeline]\n";
  o << "mode = " << to_string(cfg.mode) << "\n";
  o << "max_inflight_windows = " << cfg.max_inflight_windows << "\n";
  o << "anomaly_threshold = " << format_double(cfg.anomaly_threshold) << "\n";
  o << "threads = " << cfg.threads << "\n";
  if (cfg.max_windows) o << "max_windows = " << *cfg.max_windows << "\n";
  o << "classes = " << static_cast<int>(cfg.profile) << "\n";
  o << "\n[sampling]\n";
  o << "frame_interval = " << cfg.sampling.frame_interval << "\n";
  o << "window_size = " << cfg.sampling.window_size << "\n";
  o << "window_stride = " << cfg.sampling.window_stride << "\n";
  o << "tail_policy = " << to_string(cfg.sampling.tail_policy) << "\n";
  o << "\n[spatial]\n";
  if (cfg.spatial_backend) o << "backend = " << cfg.spatial_backend->text() << "\n";
  const auto spatial = cfg.effective_spatial();
  o << "confidence_threshold = " << format_double(spatial.confidence_threshold) << "\n";
  o << "frames_per_window = " << spatial.frames_per_window << "\n";
  o << "frame_selection = " << to_string(spatial.frame_selection) << "\n";
  o << "\n[preprocess]\n";
  if (cfg.preprocess_variant) o << "variant = " << to_string(*cfg.preprocess_variant) << "\n";
  o << "line_thickness_px = " << format_double(cfg.skeleton.line_thickness_px) << "\n";
  o << "min_joint_conf = " << format_double(cfg.skeleton.min_joint_conf) << "\n";
  o << "\n[temporal]\n";
  if (cfg.temporal_backend) o << "backend = " << cfg.temporal_backend->text() << "\n";
  o << "\n[fusion]\n";
  o << "key_object_priority = " << priority_text(cfg.fusion.key_object_priority) << "\n";
  o << "gate_required_for_gunshot = " << (cfg.fusion.gate_required_for_gunshot ? "true" : "false") << "\n";
  o << "person_triggers_fight = " << (cfg.fusion.person_triggers_fight ? "true" : "false") << "\n";
  return o.str();
}

nlohmann::ordered_json to_json(const PipelineConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(cfg.mode);
  j["max_inflight_windows"] = cfg.max_inflight_windows;
  j["anomaly_threshold"] = cfg.anomaly_threshold;
  j["threads"] = cfg.threads;
  j["max_windows"] = cfg.max_windows ? nlohmann::ordered_json(*cfg.max_windows) : nlohmann::ordered_json();
  j["classes"] = static_cast<int>(cfg.profile);
  j["sampling"] = {{"frame_interval", cfg.sampling.frame_interval},
                   {"window_size", cfg.sampling.window_size},
                   {"window_stride", cfg.sampling.window_stride},
                   {"tail_policy", to_string(cfg.sampling.tail_policy)}};
  const auto spatial = cfg.effective_spatial();
  j["spatial"] = {{"backend", cfg.spatial_backend ? cfg.spatial_backend->text() : ""},
                  {"confidence_threshold", spatial.confidence_threshold},
                  {"frames_per_window", spatial.frames_per_window},
                  {"frame_selection", to_string(spatial.frame_selection)}};
  j["preprocess"] = {{"variant", cfg.preprocess_variant ? std::string(to_string(*cfg.preprocess_variant)) : ""},
                     {"line_thickness_px", cfg.skeleton.line_thickness_px},
                     {"min_joint_conf", cfg.skeleton.min_joint_conf}};
  j["temporal"] = {{"backend", cfg.temporal_backend ? cfg.temporal_backend->text() : ""}};
  j["fusion"] = {{"key_object_priority", priority_text(cfg.fusion.key_object_priority)},
                 {"gate_required_for_gunshot", cfg.fusion.gate_required_for_gunshot},
                 {"person_triggers_fight", cfg.fusion.person_triggers_fight}};
  return j;
}

std::shared_ptr<SpatialBackend> make_spatial_backend(const BackendSpec& spec) {
  if (spec.kind == BackendSpec::Kind::Trace) return std::make_shared<TraceSpatialBackend>(spec.argument);
  return std::make_shared<SyntheticSpatialBackend>(parse_synthetic_spatial_spec(spec.argument));
}

std::shared_ptr<TemporalBackend> make_temporal_backend(const BackendSpec& spec, ClassProfile profile) {
  if (spec.kind == BackendSpec::Kind::Trace) return std::make_shared<TraceTemporalBackend>(spec.argument, profile);
  // Explicit classes= in the spec wins over the pipeline profile.
  const std::string options = "classes=" + std::to_string(static_cast<int>(profile)) +
                              (spec.argument.empty() ? "" : "," + spec.argument);
  return std::make_shared<SyntheticTemporalBackend>(parse_synthetic_temporal_spec(options));
}

Backends make_backends(const PipelineConfig& cfg) {
  Backends b;
  if (cfg.uses_spatial()) {
    if (!cfg.spatial_backend) throw ConfigError(std::string(to_string(cfg.mode)) + " mode needs a spatial backend");
    b.spatial = make_spatial_backend(*cfg.spatial_backend);
  }
  if (cfg.uses_temporal()) {
    if (!cfg.temporal_backend) throw ConfigError(std::string(to_string(cfg.mode)) + " mode needs a temporal backend");
    b.temporal = make_temporal_backend(*cfg.temporal_backend, cfg.profile);
  }
  return b;
}

}  // namespace stap
