#include "simnet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "simnet/errors.hpp"

namespace simnet::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Binding {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw Error("key '" + key + "': cannot parse '" + text + "'");
  return v;
}

Binding bind_double(const std::string& key, double& ref) {
  return {key, [&ref, key](const std::string& s) { ref = parse_number<double>(key, s); },
          [&ref] { return format_double(ref); }};
}

Binding bind_degrees(const std::string& key, double& radians) {
  return {key,
          [&radians, key](const std::string& s) { radians = parse_number<double>(key, s) * std::numbers::pi / 180.0; },
          [&radians] {
            std::ostringstream os;
            os.precision(12);
            os << radians * 180.0 / std::numbers::pi;
            return os.str();
          }};
}

template <typename I>
Binding bind_int(const std::string& key, I& ref) {
  return {key, [&ref, key](const std::string& s) { ref = static_cast<I>(parse_number<long long>(key, s)); },
          [&ref] { return std::to_string(ref); }};
}

Binding bind_u64(const std::string& key, std::uint64_t& ref) {
  return {key, [&ref, key](const std::string& s) { ref = parse_number<std::uint64_t>(key, s); },
          [&ref] { return std::to_string(ref); }};
}

Binding bind_bool(const std::string& key, bool& ref) {
  return {key,
          [&ref, key](const std::string& s) {
            if (s == "true") {
              ref = true;
            } else if (s == "false") {
              ref = false;
            } else {
              throw Error("key '" + key + "': expected true or false, got '" + s + "'");
            }
          },
          [&ref] { return std::string(ref ? "true" : "false"); }};
}

Binding bind_string(const std::string& key, std::string& ref) {
  return {key, [&ref](const std::string& s) { ref = s; }, [&ref] { return ref; }};
}

Binding bind_int_list(const std::string& key, std::vector<int>& ref) {
  return {key,
          [&ref, key](const std::string& s) {
            ref.clear();
            std::stringstream ss(s);
            std::string item;
            while (std::getline(ss, item, ',')) ref.push_back(parse_number<int>(key, trim(item)));
            if (ref.empty()) throw Error("key '" + key + "': empty list");
          },
          [&ref] {
            std::string out;
            for (std::size_t i = 0; i < ref.size(); ++i) out += (i ? ", " : "") + std::to_string(ref[i]);
            return out;
          }};
}

template <typename E>
Binding bind_enum(const std::string& key, E& ref, std::vector<std::pair<std::string, E>> names) {
  return {key,
          [&ref, key, names](const std::string& s) {
            for (const auto& [name, value] : names) {
              if (name == s) {
                ref = value;
                return;
              }
            }
            throw Error("key '" + key + "': unknown value '" + s + "'");
          },
          [&ref, names] {
            for (const auto& [name, value] : names) {
              if (value == ref) return name;
            }
            return std::string("?");
          }};
}

std::vector<Binding> schema(RunConfig& c) {
  auto& s = c.scene;
  auto& e = c.engine;
  auto& o = c.optimizer;
  auto& l = c.localize;
  auto& d = c.diode;
  auto& g = c.gradcheck;
  auto& b = c.bench;
  return {
      bind_u64("run.seed", c.seed),
      bind_string("run.output_dir", c.output_dir),

      bind_double("scene.freq_hz", s.frequency_hz),
      bind_int("scene.q", s.stages),
      bind_int("scene.k_rows", s.rows),
      bind_int("scene.k_cols", s.cols),
      bind_double("scene.spacing_m", s.spacing_m),
      bind_double("scene.gap_m", s.gap_m),
      bind_double("scene.thickness_m", s.thickness_m),
      bind_int("scene.tx_ports", s.tx_ports),
      bind_double("scene.tx_distance_m", s.tx_distance_m),
      bind_double("scene.tx_spacing_m", s.tx_spacing_m),
      bind_int("scene.probe_rows", s.probe_rows),
      bind_int("scene.probe_cols", s.probe_cols),
      bind_double("scene.probe_distance_m", s.probe_distance_m),
      bind_double("scene.probe_spacing_m", s.probe_spacing_m),
      bind_bool("scene.edge_reflection", s.edge_reflection),
      bind_double("scene.edge_reflection_coeff", s.edge_reflection_coeff),
      bind_bool("scene.direct_path", s.direct_path),
      bind_degrees("scene.region.angle_min_deg", s.region.angle_min),
      bind_degrees("scene.region.angle_max_deg", s.region.angle_max),
      bind_double("scene.region.range_min_m", s.region.range_min),
      bind_double("scene.region.range_max_m", s.region.range_max),

      bind_enum("engine.kind", e.kind,
                {{"linear", optim::EngineKind::kLinear}, {"nonlinear", optim::EngineKind::kNonlinear}}),
      bind_enum("engine.solver", e.method,
                {{"structured", netcore::SolveMethod::kStructured}, {"dense", netcore::SolveMethod::kDense}}),
      bind_enum("engine.law.kind", e.law,
                {{"rapp", nlsim::LawKind::kRappRadial}, {"ideal", nlsim::LawKind::kIdealLinear}}),
      bind_double("engine.law.g0", e.rapp.g0),
      bind_double("engine.law.rs", e.rapp.rs),
      bind_double("engine.law.p", e.rapp.p),
      bind_double("engine.fixed_point.omega", e.fixed_point.omega),
      bind_double("engine.fixed_point.tol", e.fixed_point.tol),
      bind_int("engine.fixed_point.max_iters", e.fixed_point.max_iters),

      bind_double("optimizer.rate", o.rate),
      bind_double("optimizer.beta1", o.beta1),
      bind_double("optimizer.beta2", o.beta2),
      bind_double("optimizer.epsilon", o.epsilon),
      bind_int("optimizer.max_iters", o.max_iters),
      bind_int("optimizer.patience", o.patience),
      bind_double("optimizer.rel_tol", o.rel_tol),
      bind_double("optimizer.grad_tol", o.grad_tol),
      bind_double("optimizer.divergence_factor", o.divergence_factor),
      bind_int("optimizer.starts", o.starts),

      bind_double("localize.snr_db", l.snr_db),
      bind_int("localize.trials", l.trials),
      bind_int("localize.anchors_per_axis", l.anchors_per_axis),
      bind_double("localize.drive_rms", l.drive_rms),
      bind_int("localize.map_angle_points", l.map_angle_points),
      bind_int("localize.map_range_points", l.map_range_points),

      bind_double("diode.is", d.params.is),
      bind_double("diode.n", d.params.n),
      bind_double("diode.vt", d.params.vt),
      bind_double("diode.rs", d.params.rs),
      bind_double("diode.z0", d.params.z0),
      bind_int("diode.samples_per_period", d.samples_per_period),
      bind_double("diode.r_min", d.r_min),
      bind_double("diode.r_max", d.r_max),
      bind_int("diode.points", d.points),

      bind_int("gradcheck.linear_scenes", g.linear_scenes),
      bind_int("gradcheck.nonlinear_scenes", g.nonlinear_scenes),
      bind_double("gradcheck.linear_step", g.linear_step),
      bind_double("gradcheck.nonlinear_step", g.nonlinear_step),
      bind_double("gradcheck.linear_tol", g.linear_tol),
      bind_double("gradcheck.nonlinear_tol", g.nonlinear_tol),

      bind_int_list("bench.q_values", b.q_values),
      bind_int_list("bench.k_values", b.k_values),
      bind_int("bench.fixed_k", b.fixed_k),
      bind_int("bench.fixed_q", b.fixed_q),
      bind_int("bench.repeats", b.repeats),
  };
}

}  // namespace

KeyValues parse(std::istream& in) {
  KeyValues kv;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("unterminated section header", line);
      section = trim(text.substr(1, text.size() - 2));
      if (section.empty()) throw ConfigError("empty section name", line);
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key", line);
    const std::string full = section.empty() ? key : section + "." + key;
    if (kv.count(full)) throw ConfigError("duplicate key '" + full + "'", line);
    kv[full] = Entry{value, line};
  }
  return kv;
}

KeyValues parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse(in);
}

void apply_override(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form key=value");
  kv[trim(assignment.substr(0, eq))] = Entry{trim(assignment.substr(eq + 1)), 0};
}

RunConfig from_key_values(const KeyValues& kv) {
  RunConfig cfg;
  auto bindings = schema(cfg);
  for (const auto& [key, entry] : kv) {
    auto it = std::find_if(bindings.begin(), bindings.end(), [&](const Binding& b) { return b.key == key; });
    if (it == bindings.end()) throw ConfigError("unknown key '" + key + "'", entry.line);
    try {
      it->set(entry.value);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what(), entry.line);
    }
  }
  return cfg;
}

RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  KeyValues kv = parse_file(path);
  for (const auto& o : overrides) apply_override(kv, o);
  return from_key_values(kv);
}

std::string to_text(const RunConfig& config) {
  RunConfig copy = config;
  const auto bindings = schema(copy);
  std::string out;
  std::string section;
  for (const auto& b : bindings) {
    const auto dot = b.key.rfind('.');
    const std::string sec = b.key.substr(0, dot);
    if (sec != section) {
      out += (out.empty() ? "" : "\n") + std::string("[") + sec + "]\n";
      section = sec;
    }
    out += b.key.substr(dot + 1) + " = " + b.get() + "\n";
  }
  return out;
}

}  // namespace simnet::config
