#include "rpmixer/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace rpmixer {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
    throw ConfigError(key, "expected a finite number, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw ConfigError(key, "expected true or false, got '" + value + "'");
}

std::string show(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string show(bool v) { return v ? "true" : "false"; }

template <typename Int>
std::string show_int(Int v) {
  return std::to_string(v);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

template <typename Int, typename Field>
Setter int_setter(Field field) {
  return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
    field(c) = parse_int<Int>(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto size = [&](const char* key, std::size_t ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*m = parse_int<std::size_t>(k, v);
      };
    };
    auto real = [&](const char* key, double ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*m = parse_double(k, v);
      };
    };
    auto flag = [&](const char* key, bool ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*m = parse_bool(k, v);
      };
    };
    auto syn_size = [&](const char* key, std::size_t SyntheticSpec::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.synthetic.*m = parse_int<std::size_t>(k, v);
      };
    };
    auto syn_real = [&](const char* key, double SyntheticSpec::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.synthetic.*m = parse_double(k, v);
      };
    };

    t["dataset"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.dataset = v;
    };
    t["aggregate_minutes"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.aggregate_minutes = parse_int<std::uint32_t>(k, v);
    };
    flag("forward_fill", &ExperimentConfig::forward_fill);
    t["split_ratios"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      std::istringstream is(v);
      std::string part;
      std::size_t i = 0;
      std::array<std::uint32_t, 3> r{};
      while (std::getline(is, part, ',')) {
        if (i == 3) throw ConfigError(k, "expected three comma-separated integers");
        r[i++] = parse_int<std::uint32_t>(k, trim(part));
      }
      if (i != 3) throw ConfigError(k, "expected three comma-separated integers");
      c.split_ratios = r;
    };
    size("stride", &ExperimentConfig::stride);

    syn_size("synthetic.nodes", &SyntheticSpec::nodes);
    syn_size("synthetic.steps", &SyntheticSpec::steps);
    syn_size("synthetic.steps_per_day", &SyntheticSpec::steps_per_day);
    syn_real("synthetic.daily_amplitude_min", &SyntheticSpec::daily_amplitude_min);
    syn_real("synthetic.daily_amplitude_max", &SyntheticSpec::daily_amplitude_max);
    syn_real("synthetic.weekly_amplitude_min", &SyntheticSpec::weekly_amplitude_min);
    syn_real("synthetic.weekly_amplitude_max", &SyntheticSpec::weekly_amplitude_max);
    syn_size("synthetic.latent_factors", &SyntheticSpec::latent_factors);
    syn_real("synthetic.factor_scale", &SyntheticSpec::factor_scale);
    syn_real("synthetic.factor_persistence", &SyntheticSpec::factor_persistence);
    syn_size("synthetic.max_lag", &SyntheticSpec::max_lag);
    syn_real("synthetic.noise_std", &SyntheticSpec::noise_std);
    syn_real("synthetic.base_min", &SyntheticSpec::base_min);
    syn_real("synthetic.base_max", &SyntheticSpec::base_max);
    t["synthetic.interval_minutes"] = [](ExperimentConfig& c, const std::string& k,
                                         const std::string& v) {
      c.synthetic.interval_minutes = parse_int<std::uint32_t>(k, v);
    };

    size("t_past", &ExperimentConfig::t_past);
    size("t_future", &ExperimentConfig::t_future);
    size("n_block", &ExperimentConfig::n_block);
    real("m_neuron", &ExperimentConfig::m_neuron);
    flag("pre_activation", &ExperimentConfig::pre_activation);
    flag("random_projection", &ExperimentConfig::random_projection);
    flag("frequency_domain", &ExperimentConfig::frequency_domain);
    flag("complex_bias", &ExperimentConfig::complex_bias);
    size("nodes", &ExperimentConfig::nodes);
    size("features", &ExperimentConfig::features);

    t["seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.seed = parse_int<std::uint64_t>(k, v);
    };
    t["loss"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.loss = parse_loss(v);
      } catch (const std::invalid_argument&) {
        throw ConfigError(k, "expected mae or mse, got '" + v + "'");
      }
    };
    size("batch_size", &ExperimentConfig::batch_size);
    real("lr", &ExperimentConfig::lr);
    real("weight_decay", &ExperimentConfig::weight_decay);
    size("max_epochs", &ExperimentConfig::max_epochs);
    size("patience", &ExperimentConfig::patience);
    size("threads", &ExperimentConfig::threads);
    flag("standardize", &ExperimentConfig::standardize);
    flag("mask_zero", &ExperimentConfig::mask_zero);
    flag("record_timing", &ExperimentConfig::record_timing);
    t["out_dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.out_dir = v;
    };
    return t;
  }();
  return table;
}

}  // namespace

ModelConfig ExperimentConfig::model_config() const {
  ModelConfig m;
  m.nodes = nodes;
  m.features = features;
  m.t_past = t_past;
  m.t_future = t_future;
  m.n_block = n_block;
  m.m_neuron = m_neuron;
  m.seed = seed;
  m.pre_activation = pre_activation;
  m.random_projection = random_projection;
  m.frequency_domain = frequency_domain;
  m.complex_bias = complex_bias;
  return m;
}

FitOptions ExperimentConfig::fit_options() const {
  FitOptions o;
  o.loss = loss;
  o.max_epochs = max_epochs;
  o.batch_size = batch_size;
  o.patience = patience;
  o.optimizer.lr = lr;
  o.optimizer.weight_decay = weight_decay;
  o.seed = seed;
  o.threads = threads;
  o.mask_zero = mask_zero;
  o.record_timing = record_timing;
  return o;
}

AblationFlags ExperimentConfig::flags() const {
  return {pre_activation, random_projection, frequency_domain};
}

void ExperimentConfig::set_flags(const AblationFlags& f) {
  pre_activation = f.pre_activation;
  random_projection = f.random_projection;
  frequency_domain = f.frequency_domain;
}

SyntheticSpec ExperimentConfig::synthetic_spec() const {
  SyntheticSpec s = synthetic;
  s.seed = seed;
  return s;
}

void ExperimentConfig::validate() const {
  auto positive = [](const char* key, std::size_t v) {
    if (v == 0) throw ConfigError(key, "must be >= 1");
  };
  positive("t_past", t_past);
  positive("t_future", t_future);
  positive("n_block", n_block);
  positive("batch_size", batch_size);
  positive("stride", stride);
  positive("threads", threads);
  if (!(m_neuron > 0.0)) throw ConfigError("m_neuron", "must be > 0");
  if (!(lr > 0.0)) throw ConfigError("lr", "must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay", "must be >= 0");
  for (auto r : split_ratios)
    if (r == 0) throw ConfigError("split_ratios", "every ratio must be >= 1");
  if (dataset.empty()) {
    try {
      synthetic.validate();
    } catch (const DataError& e) {
      throw ConfigError("synthetic", e.what());
    }
  }
}

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError(key, "unknown key");
  it->second(config, key, value);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream is(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "line " + std::to_string(number) + " is not of the form key = value");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  const SyntheticSpec& s = c.synthetic;
  os << "# data\n"
     << "dataset = " << c.dataset << '\n'
     << "aggregate_minutes = " << c.aggregate_minutes << '\n'
     << "forward_fill = " << show(c.forward_fill) << '\n'
     << "split_ratios = " << c.split_ratios[0] << ',' << c.split_ratios[1] << ','
     << c.split_ratios[2] << '\n'
     << "stride = " << c.stride << '\n'
     << "synthetic.nodes = " << s.nodes << '\n'
     << "synthetic.steps = " << s.steps << '\n'
     << "synthetic.steps_per_day = " << s.steps_per_day << '\n'
     << "synthetic.daily_amplitude_min = " << show(s.daily_amplitude_min) << '\n'
     << "synthetic.daily_amplitude_max = " << show(s.daily_amplitude_max) << '\n'
     << "synthetic.weekly_amplitude_min = " << show(s.weekly_amplitude_min) << '\n'
     << "synthetic.weekly_amplitude_max = " << show(s.weekly_amplitude_max) << '\n'
     << "synthetic.latent_factors = " << s.latent_factors << '\n'
     << "synthetic.factor_scale = " << show(s.factor_scale) << '\n'
     << "synthetic.factor_persistence = " << show(s.factor_persistence) << '\n'
     << "synthetic.max_lag = " << s.max_lag << '\n'
     << "synthetic.noise_std = " << show(s.noise_std) << '\n'
     << "synthetic.base_min = " << show(s.base_min) << '\n'
     << "synthetic.base_max = " << show(s.base_max) << '\n'
     << "synthetic.interval_minutes = " << s.interval_minutes << '\n'
     << "# model\n"
     << "t_past = " << c.t_past << '\n'
     << "t_future = " << c.t_future << '\n'
     << "n_block = " << c.n_block << '\n'
     << "m_neuron = " << show(c.m_neuron) << '\n'
     << "pre_activation = " << show(c.pre_activation) << '\n'
     << "random_projection = " << show(c.random_projection) << '\n'
     << "frequency_domain = " << show(c.frequency_domain) << '\n'
     << "complex_bias = " << show(c.complex_bias) << '\n'
     << "nodes = " << c.nodes << '\n'
     << "features = " << c.features << '\n'
     << "# training\n"
     << "seed = " << c.seed << '\n'
     << "loss = " << to_string(c.loss) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "lr = " << show(c.lr) << '\n'
     << "weight_decay = " << show(c.weight_decay) << '\n'
     << "max_epochs = " << c.max_epochs << '\n'
     << "patience = " << c.patience << '\n'
     << "threads = " << c.threads << '\n'
     << "standardize = " << show(c.standardize) << '\n'
     << "mask_zero = " << show(c.mask_zero) << '\n'
     << "record_timing = " << show(c.record_timing) << '\n'
     << "out_dir = " << c.out_dir << '\n';
  return os.str();
}

}  // namespace rpmixer
