#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "otf/dataset.hpp"
#include "otf/embedding.hpp"
#include "otf/evaluation.hpp"
#include "otf/policy.hpp"
#include "otf/trainer.hpp"

namespace otf {

inline constexpr const char* kFormatVersion = "1";

// "%.17g" rendering; parses back to the identical double.
std::string format_real(double value);

// Compact JSON with keys in insertion order and reals via format_real.
std::string dump_json(const nlohmann::ordered_json& value);

// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);
std::string read_file(const std::string& path);

// JSON Lines: header, photos, then train and test episodes.
std::string serialize_dataset(const Dataset& dataset);
// Errors carry the 1-based line number.
Dataset parse_dataset(std::string_view text);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

enum class ModelKind { kHead, kPolicy };

struct ModelFile {
  ModelKind kind = ModelKind::kHead;
  LinearHead head;                     // the policy mean head for kPolicy
  Vector sigma;                        // kPolicy only
  std::optional<LinearHead> gallery_head;  // frozen photo head, kPolicy only
  nlohmann::ordered_json training_meta = nlohmann::ordered_json::object();

  // Head that embeds the gallery photos.
  const LinearHead& photo_head() const { return gallery_head ? *gallery_head : head; }
  GaussianPolicy policy() const;
  void validate() const;
};

ModelFile make_head_model(const LinearHead& head, nlohmann::ordered_json meta);
ModelFile make_policy_model(const GaussianPolicy& policy, const LinearHead& gallery_head,
                            nlohmann::ordered_json meta);

std::string serialize_model(const ModelFile& model);
ModelFile parse_model(std::string_view text);
void save_model(const ModelFile& model, const std::string& path);
ModelFile load_model(const std::string& path);

// CSV bodies with a header row and LF endings.
std::string history_csv(std::span<const EpochRecord> history);
std::string summary_csv_header();
std::string summary_csv_row(const std::string& label, const EvalSummary& summary);
std::string curve_csv(const EvalSummary& summary);

}  // namespace otf
