#include "amckfac/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace amckfac {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: bad numeric value for '" + key + "': " + s);
  }
}

long long to_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("config: bad integer value for '" + key + "': " + s);
  }
}

bool to_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("config: bad boolean value for '" + key + "': " + s);
}

std::vector<double> to_grid(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const std::string& item : split(s, ',')) {
    if (!item.empty()) out.push_back(to_double(item, key));
  }
  if (out.empty()) throw ParseError("config: empty grid for '" + key + "'");
  return out;
}

// e.g. "1-28:24,29-end:26"
std::vector<ScheduleEntry> parse_schedule(const std::string& s) {
  std::vector<ScheduleEntry> out;
  for (const std::string& item : split(s, ',')) {
    const auto colon = item.find(':');
    const auto dash = item.find('-');
    if (colon == std::string::npos || dash == std::string::npos ||
        dash > colon) {
      throw ParseError("config: bad precision_schedule entry: " + item);
    }
    ScheduleEntry e;
    e.first_epoch =
        static_cast<int>(to_int(trim(item.substr(0, dash)), "schedule"));
    const std::string last = trim(item.substr(dash + 1, colon - dash - 1));
    e.last_epoch =
        last == "end" ? -1 : static_cast<int>(to_int(last, "schedule"));
    e.total_bits =
        static_cast<int>(to_int(trim(item.substr(colon + 1)), "schedule"));
    out.push_back(e);
  }
  return out;
}

void validate_schedule(const std::vector<ScheduleEntry>& sched, int epochs) {
  int expected = 1;
  for (std::size_t i = 0; i < sched.size(); ++i) {
    const auto& e = sched[i];
    if (e.first_epoch != expected)
      throw ParseError("config: precision_schedule ranges must partition [1, epochs]");
    const int last = e.last_epoch < 0 ? epochs : e.last_epoch;
    if (last < e.first_epoch)
      throw ParseError("config: precision_schedule range is empty");
    if (e.last_epoch < 0 && i + 1 != sched.size())
      throw ParseError("config: 'end' only allowed in the final schedule entry");
    expected = last + 1;
  }
  if (sched.empty() || (sched.back().last_epoch > 0 &&
                        sched.back().last_epoch < epochs))
    throw ParseError("config: precision_schedule does not cover all epochs");
}

}  // namespace

ConfigSections parse_ini(const std::string& text) {
  ConfigSections out;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ParseError("config line " + std::to_string(lineno) +
                         ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) +
                       ": expected 'key = value'");
    out[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigSections parse_ini_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ini(ss.str());
}

ExperimentConfig ExperimentConfig::from_sections(const ConfigSections& s) {
  ExperimentConfig cfg;

  auto section = [&](const char* name) -> const std::map<std::string, std::string>* {
    const auto it = s.find(name);
    return it == s.end() ? nullptr : &it->second;
  };

  if (const auto* d = section("device")) {
    for (const auto& [k, v] : *d) {
      if (k == "g_min") cfg.device.g_min = to_double(v, k);
      else if (k == "g_max") cfg.device.g_max = to_double(v, k);
      else if (k == "g_unit") cfg.device.g_unit = to_double(v, k);
      else if (k == "write_tolerance") cfg.device.write_tolerance = to_double(v, k);
      else if (k == "off_leak_max") cfg.device.off_leak_max = to_double(v, k);
      else if (k == "read_noise_sigma") cfg.device.read_noise_sigma = to_double(v, k);
      else if (k == "leaf_max") cfg.device.leaf_max = static_cast<int>(to_int(v, k));
      else throw ParseError("config: unknown [device] key: " + k);
    }
  }
  if (const auto* c = section("converters")) {
    for (const auto& [k, v] : *c) {
      if (k == "dac_bits") cfg.converters.dac_bits = static_cast<int>(to_int(v, k));
      else if (k == "adc_bits") cfg.converters.adc_bits = static_cast<int>(to_int(v, k));
      else if (k == "full_scale") cfg.converters.full_scale = to_double(v, k);
      else throw ParseError("config: unknown [converters] key: " + k);
    }
  }
  if (const auto* kf = section("kfac")) {
    for (const auto& [k, v] : *kf) {
      if (k == "damping") cfg.kfac.damping = to_double(v, k);
      else if (k == "learning_rate") cfg.kfac.learning_rate = to_double(v, k);
      else throw ParseError("config: unknown [kfac] key: " + k);
    }
  }
  if (const auto* t = section("train")) {
    for (const auto& [k, v] : *t) {
      if (k == "optimizer") cfg.train.optimizer = v;
      else if (k == "epochs") cfg.train.epochs = static_cast<int>(to_int(v, k));
      else if (k == "baseline_epochs") cfg.train.baseline_epochs = static_cast<int>(to_int(v, k));
      else if (k == "batch_size") cfg.train.batch_size = static_cast<int>(to_int(v, k));
      else if (k == "seed") cfg.train.seed = static_cast<std::uint64_t>(to_int(v, k));
      else if (k == "precision_schedule") cfg.train.precision_schedule = parse_schedule(v);
      else if (k == "synthetic") cfg.train.synthetic = to_bool(v, k);
      else if (k == "synthetic_noise") cfg.train.synthetic_noise = to_double(v, k);
      else if (k == "per_class_train") cfg.train.per_class_train = static_cast<int>(to_int(v, k));
      else if (k == "per_class_test") cfg.train.per_class_test = static_cast<int>(to_int(v, k));
      else if (k == "max_iters") cfg.max_iters = static_cast<int>(to_int(v, k));
      else if (k == "sgdm_lr_grid") cfg.train.sgdm_lr_grid = to_grid(v, k);
      else if (k == "sgdm_momentum_grid") cfg.train.sgdm_momentum_grid = to_grid(v, k);
      else if (k == "adam_lr_grid") cfg.train.adam_lr_grid = to_grid(v, k);
      else if (k == "sgdm_lr") cfg.train.sgdm_lr = to_double(v, k);
      else if (k == "sgdm_momentum") cfg.train.sgdm_momentum = to_double(v, k);
      else if (k == "adam_lr") cfg.train.adam_lr = to_double(v, k);
      else throw ParseError("config: unknown [train] key: " + k);
    }
  }
  if (const auto* d = section("data")) {
    for (const auto& [k, v] : *d) {
      if (k == "images") cfg.data.images = v;
      else if (k == "labels") cfg.data.labels = v;
      else throw ParseError("config: unknown [data] key: " + k);
    }
  }

  cfg.device.validate();
  cfg.converters.validate();
  if (cfg.train.epochs < 1 || cfg.train.batch_size < 1)
    throw ParseError("config: epochs and batch_size must be positive");
  validate_schedule(cfg.train.precision_schedule, cfg.train.epochs);
  const int train_total = cfg.train.per_class_train * 4;
  if (train_total % cfg.train.batch_size != 0)
    throw ParseError("config: batch_size must divide the train-set size");
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  return from_sections(parse_ini_file(path));
}

int ExperimentConfig::bits_for_epoch(int epoch) const {
  for (const auto& e : train.precision_schedule) {
    const int last = e.last_epoch < 0 ? train.epochs : e.last_epoch;
    if (epoch >= e.first_epoch && epoch <= last) return e.total_bits;
  }
  return train.precision_schedule.back().total_bits;
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream out;
  out.precision(17);
  out << "device:" << device.g_min << ',' << device.g_max << ','
      << device.g_unit << ',' << device.write_tolerance << ','
      << device.off_leak_max << ',' << device.read_noise_sigma << ','
      << device.leaf_max << ";converters:" << converters.dac_bits << ','
      << converters.adc_bits << ',' << converters.full_scale
      << ";kfac:" << kfac.damping << ',' << kfac.learning_rate
      << ";train:" << train.optimizer << ',' << train.epochs << ','
      << train.batch_size << ',' << train.seed << ',' << train.synthetic << ','
      << train.synthetic_noise << ',' << train.per_class_train << ','
      << train.per_class_test << ";schedule:";
  for (const auto& e : train.precision_schedule)
    out << e.first_epoch << '-' << e.last_epoch << ':' << e.total_bits << ',';
  out << ";data:" << data.images << ',' << data.labels
      << ";max_iters:" << max_iters;
  return out.str();
}

std::string ExperimentConfig::hash() const {
  // FNV-1a 64
  const std::string s = canonical();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace amckfac
