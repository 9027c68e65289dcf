#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfh/tfh.h"

namespace tfh::cli {

enum class Command {
  kGenSynthetic,
  kTrainBackbone,
  kDistill,
  kExtractFeatures,
  kTrainHallucinator,
  kFineTune,
  kEvaluate,
  kSweepM,
  kCrossDomain,
  kExportFeatures,
  kPrintConfig,
};

const char* command_name(Command c);
std::optional<Command> parse_command(const std::string& name);

struct Paths {
  std::string out;
  std::string features;
  std::string images;
  std::string backbone;
  std::string teacher;
  std::string model;
  std::string target;
  std::string base_out;
  std::string val_out;
  std::string novel_out;
  std::string images_out;
};

/// Class split applied by gen-synthetic when any of the split outputs is set.
/// Explicit lists win; otherwise n_base / n_val / n_novel draw a random split
/// from the run seed; with neither, the first half of the classes is base and
/// the rest novel.
struct SplitSpec {
  std::vector<std::size_t> base_classes;
  std::vector<std::size_t> val_classes;
  std::vector<std::size_t> novel_classes;
  std::size_t n_base = 0;
  std::size_t n_val = 0;
  std::size_t n_novel = 0;
};

struct CrossDomainNames {
  std::string source_name = "source";
  std::string target_name = "target";
};

struct RunConfig {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool normalize_features = false;
  Paths paths;
  tfh_synthetic_spec synthetic{};
  tfh_image_spec images{};
  SplitSpec split;
  tfh_backbone_config backbone{};
  tfh_train_config train{};
  tfh_distill_config distill{};
  std::string hallucinator_preset = "desk";
  /// True when the config sets hallucinator.feature_shape; otherwise the
  /// shape is taken from the input features.
  bool feature_shape_given = false;
  tfh_hallucinator_config hallucinator{};
  tfh_meta_train_config meta_train{};
  bool fine_tune_enabled = false;
  tfh_fine_tune_config fine_tune{};
  tfh_eval_config eval{};
  std::string classifier = "prototype";
  std::vector<std::size_t> counts{0, 1, 2, 5, 10, 50, 100};
  std::size_t task_index = 0;
  CrossDomainNames cross_domain;

  RunConfig();

  /// Effective configuration, every field included.
  nlohmann::ordered_json to_json() const;
  /// FNV-1a of the compact effective configuration, 16 hex digits.
  std::string fingerprint() const;
};

/// Every problem found while reading or validating a configuration.
class ConfigProblems : public std::runtime_error {
 public:
  explicit ConfigProblems(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// One command-line override: the flag's value replaces the JSON value at
/// `pointer` (RFC 6901) before parsing.
struct Override {
  std::string pointer;
  std::string value;
  bool is_string = false;
};

/// Parses `text` as JSON; a syntax error becomes a ConfigProblems naming the
/// file and byte offset.
nlohmann::json read_config_text(const std::string& text, const std::string& origin);
nlohmann::json read_config_file(const std::string& path);

/// Writes each override into `root`. Non-string values are read as JSON
/// literals; a bare comma list such as 0,1,2 becomes an array.
void apply_overrides(nlohmann::json& root, const std::vector<Override>& overrides);

/// Builds the RunConfig from the merged JSON and validates it for `command`,
/// throwing ConfigProblems with every unknown key, type mismatch and
/// violated invariant.
RunConfig parse_config(const nlohmann::json& root, Command command);

/// parse_config over an optional file plus overrides.
RunConfig load_run_config(const std::string& config_path, const std::vector<Override>& overrides,
                          Command command);

}  // namespace tfh::cli
