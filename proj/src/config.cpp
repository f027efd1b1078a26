#include "bandlab/config.hpp"

#include <functional>
#include <sstream>

#include "bandlab/errors.hpp"
#include "bandlab/textio.hpp"

namespace bandlab {
namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(textio::parse_u64(v)); }

int to_int(const std::string& v) {
  const long long x = textio::parse_int(v);
  if (x < -1000000 || x > 1000000) throw DomainError("integer out of range: " + v);
  return static_cast<int>(x);
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw DomainError("expected a boolean, got '" + v + "'");
}

SpectrumKind to_spectrum(const std::string& v) {
  if (v == "flat") return SpectrumKind::flat;
  if (v == "decaying") return SpectrumKind::decaying;
  if (v == "single-tone") return SpectrumKind::single_tone;
  throw DomainError("unknown target profile '" + v + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& v, F parse) {
  std::vector<T> out;
  for (const auto& item : textio::split(v, ',')) {
    const std::string s(textio::trim(item));
    if (s.empty()) throw DomainError("empty list item in '" + v + "'");
    out.push_back(parse(s));
  }
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& v) { c.seed = textio::parse_u64(v); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},

      {"target.d", [](RunConfig& c, const std::string& v) { c.experiment.dim = to_size(v); }},
      {"target.K", [](RunConfig& c, const std::string& v) { c.experiment.target.bandwidth = to_int(v); }},
      {"target.profile", [](RunConfig& c, const std::string& v) { c.experiment.target.kind = to_spectrum(v); }},
      {"target.exponent",
       [](RunConfig& c, const std::string& v) { c.experiment.target.exponent = textio::parse_double(v); }},
      {"target.amplitude",
       [](RunConfig& c, const std::string& v) { c.experiment.target.amplitude = textio::parse_double(v); }},

      {"sample.target", [](RunConfig& c, const std::string& v) { c.sample_target = v; }},
      {"sample.scheme", [](RunConfig& c, const std::string& v) { c.sample_scheme = scheme_from_string(v); }},
      {"sample.n", [](RunConfig& c, const std::string& v) { c.sample_n = to_size(v); }},

      {"reconstruct.samples", [](RunConfig& c, const std::string& v) { c.reconstruct_samples = v; }},
      {"reconstruct.K", [](RunConfig& c, const std::string& v) { c.reconstruct_bandwidth = to_int(v); }},
      {"reconstruct.truth", [](RunConfig& c, const std::string& v) { c.reconstruct_truth = v; }},

      {"network.hidden",
       [](RunConfig& c, const std::string& v) { c.experiment.hidden = to_list<std::size_t>(v, to_size); }},
      {"network.spread_kinks", [](RunConfig& c, const std::string& v) { c.experiment.spread_kinks = to_bool(v); }},

      {"train.samples", [](RunConfig& c, const std::string& v) { c.train_samples = v; }},
      {"train.learning_rate",
       [](RunConfig& c, const std::string& v) { c.experiment.train.learning_rate = textio::parse_double(v); }},
      {"train.momentum",
       [](RunConfig& c, const std::string& v) { c.experiment.train.momentum = textio::parse_double(v); }},
      {"train.weight_decay",
       [](RunConfig& c, const std::string& v) { c.experiment.train.weight_decay = textio::parse_double(v); }},
      {"train.max_epochs", [](RunConfig& c, const std::string& v) { c.experiment.train.max_epochs = to_size(v); }},
      {"train.tolerance",
       [](RunConfig& c, const std::string& v) { c.experiment.train.tolerance = textio::parse_double(v); }},
      {"train.trace_every", [](RunConfig& c, const std::string& v) { c.experiment.train.trace_every = to_size(v); }},
      {"train.finisher",
       [](RunConfig& c, const std::string& v) { c.experiment.train.finisher = finisher_from_string(v); }},
      {"train.finisher_max_steps",
       [](RunConfig& c, const std::string& v) { c.experiment.train.finisher_max_steps = to_size(v); }},

      {"analyze.network", [](RunConfig& c, const std::string& v) { c.analyze_network = v; }},
      {"analyze.target", [](RunConfig& c, const std::string& v) { c.analyze_target = v; }},
      {"analysis.M",
       [](RunConfig& c, const std::string& v) {
         c.analysis_grid = to_size(v);
         c.experiment.analysis_grid = c.analysis_grid;
       }},
      {"analysis.Kmax", [](RunConfig& c, const std::string& v) { c.analysis_kmax = to_int(v); }},
      {"analysis.fit_lo", [](RunConfig& c, const std::string& v) { c.fit_lo = to_int(v); }},
      {"analysis.fit_hi", [](RunConfig& c, const std::string& v) { c.fit_hi = to_int(v); }},

      {"experiment.kind",
       [](RunConfig& c, const std::string& v) { c.experiment.kind = experiment_kind_from_string(v); }},
      {"experiment.n",
       [](RunConfig& c, const std::string& v) { c.experiment.sample_counts = to_list<std::size_t>(v, to_size); }},
      {"experiment.grid_K",
       [](RunConfig& c, const std::string& v) { c.experiment.grid_bandwidths = to_list<int>(v, to_int); }},
      {"experiment.schemes",
       [](RunConfig& c, const std::string& v) {
         c.experiment.schemes = to_list<Scheme>(v, [](const std::string& s) { return scheme_from_string(s); });
       }},
      {"experiment.seeds",
       [](RunConfig& c, const std::string& v) {
         c.experiment.seeds =
             to_list<std::uint64_t>(v, [](const std::string& s) { return textio::parse_u64(s); });
       }},
      {"experiment.fit_n_max", [](RunConfig& c, const std::string& v) { c.experiment.fit_n_max = to_size(v); }},
      {"experiment.betas",
       [](RunConfig& c, const std::string& v) {
         c.experiment.betas = to_list<double>(v, [](const std::string& s) { return textio::parse_double(s); });
       }},
      {"experiment.manova_K", [](RunConfig& c, const std::string& v) { c.experiment.manova_bandwidth = to_int(v); }},
      {"experiment.threads", [](RunConfig& c, const std::string& v) { c.experiment.threads = to_size(v); }},
  };
  return table;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = textio::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw DomainError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key(textio::trim(t.substr(0, eq)));
    const std::string value(textio::trim(t.substr(eq + 1)));
    if (key.empty()) throw DomainError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.entries.count(key)) {
      throw DomainError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.entries[key] = {value, lineno};
  }
  return kv;
}

RunConfig apply_config(const KeyValues& kv, RunConfig base) {
  const auto& table = setters();
  for (const auto& [key, entry] : kv.entries) {
    const auto& [value, lineno] = entry;
    const auto it = table.find(key);
    const std::string where = lineno ? "config line " + std::to_string(lineno) : std::string("setting");
    if (it == table.end()) throw DomainError(where + ": unknown key '" + key + "'");
    try {
      it->second(base, value);
    } catch (const DomainError& e) {
      throw DomainError(where + " (" + key + "): " + e.what());
    }
  }
  base.experiment.base_seed = base.seed;
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw DomainError("config file not found: " + path.string());
  return apply_config(parse_key_values(textio::read_file(path)));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

}  // namespace bandlab
