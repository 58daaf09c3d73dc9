#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "amckfac/amc.hpp"
#include "amckfac/device.hpp"
#include "amckfac/kfac.hpp"

namespace amckfac {

using ConfigSections = std::map<std::string, std::map<std::string, std::string>>;

// "[section]" / "key = value" plain-text format; '#' starts a comment.
ConfigSections parse_ini(const std::string& text);
ConfigSections parse_ini_file(const std::string& path);

struct ScheduleEntry {
  int first_epoch = 1;
  int last_epoch = -1;  // -1 means "end"
  int total_bits = 24;
};

struct TrainSettings {
  std::string optimizer = "kfac-amc";  // kfac-amc|kfac-exact|sgdm|adam
  int epochs = 50;
  int baseline_epochs = 120;  // sgdm/adam need >50 epochs to reach 100%
  int batch_size = 100;
  std::uint64_t seed = 1;
  std::vector<ScheduleEntry> precision_schedule = {{1, 28, 24}, {29, -1, 26}};
  bool synthetic = false;
  double synthetic_noise = 0.4;
  int per_class_train = 50;
  int per_class_test = 100;
  // sweep grids for the baseline comparison
  std::vector<double> sgdm_lr_grid = {0.05, 0.1, 0.2};
  std::vector<double> sgdm_momentum_grid = {0.9};
  std::vector<double> adam_lr_grid = {0.001, 0.002};
  double sgdm_lr = 0.1;
  double sgdm_momentum = 0.9;
  double adam_lr = 0.001;
};

struct DataSettings {
  std::string images;
  std::string labels;
};

struct ExperimentConfig {
  DeviceConfig device;
  ConverterConfig converters;
  KfacConfig kfac;
  TrainSettings train;
  DataSettings data;
  int max_iters = 200;

  static ExperimentConfig from_sections(const ConfigSections& sections);
  static ExperimentConfig from_file(const std::string& path);

  // Bits for hp_solve during a given 1-based epoch.
  int bits_for_epoch(int epoch) const;

  // Stable hash of the canonical serialization, recorded in run headers.
  std::string hash() const;
  std::string canonical() const;
};

}  // namespace amckfac
