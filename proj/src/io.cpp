#include "otf/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "otf/error.hpp"

namespace otf {

using nlohmann::ordered_json;

std::string format_real(double value) {
  if (!std::isfinite(value)) throw NumericError("cannot serialize a non-finite value");
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

void dump_into(const ordered_json& value, std::string& out) {
  switch (value.type()) {
    case ordered_json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, member] : value.items()) {
        if (!first) out += ',';
        first = false;
        out += ordered_json(key).dump();
        out += ':';
        dump_into(member, out);
      }
      out += '}';
      break;
    }
    case ordered_json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& element : value) {
        if (!first) out += ',';
        first = false;
        dump_into(element, out);
      }
      out += ']';
      break;
    }
    case ordered_json::value_t::number_float:
      out += format_real(value.get<double>());
      break;
    default:
      out += value.dump();
  }
}

ordered_json real_array(std::span<const double> values) {
  ordered_json out = ordered_json::array();
  for (double v : values) out.push_back(v);
  return out;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json out = ordered_json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(real_array(m.row(r)));
  return out;
}

// Checked accessors for parsed records; `where` prefixes error messages.
const ordered_json& member(const ordered_json& object, const char* key, const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) throw InvalidInput(where + ": missing '" + key + "'");
  return *it;
}

std::string get_string(const ordered_json& object, const char* key, const std::string& where) {
  const auto& v = member(object, key, where);
  if (!v.is_string()) throw InvalidInput(where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

std::size_t get_count(const ordered_json& object, const char* key, const std::string& where) {
  const auto& v = member(object, key, where);
  if (!v.is_number_unsigned()) throw InvalidInput(where + ": '" + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

Vector to_vector(const ordered_json& v, std::size_t expected, const std::string& where,
                 const std::string& what) {
  if (!v.is_array()) throw InvalidInput(where + ": '" + what + "' must be an array");
  if (v.size() != expected) {
    throw InvalidInput(where + ": '" + what + "' has " + std::to_string(v.size()) +
                       " entries, expected " + std::to_string(expected));
  }
  Vector out;
  out.reserve(v.size());
  for (const auto& x : v) {
    if (!x.is_number()) throw InvalidInput(where + ": '" + what + "' holds a non-number");
    out.push_back(x.get<double>());
  }
  require_finite(out, where + ": " + what);
  return out;
}

Matrix to_matrix(const ordered_json& v, std::size_t rows, std::size_t cols, const std::string& where,
                 const std::string& what) {
  if (!v.is_array() || v.size() != rows) {
    throw InvalidInput(where + ": '" + what + "' must be an array of " + std::to_string(rows) + " rows");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = to_vector(v[r], cols, where, what + " row " + std::to_string(r));
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

void reject_unknown(const ordered_json& object, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidInput(where + ": unknown field '" + key + "'");
  }
}

ordered_json episode_json(const SketchEpisode& episode) {
  ordered_json out;
  out["kind"] = "episode";
  out["id"] = episode.id;
  out["paired_photo_id"] = episode.paired_photo_id;
  ordered_json states = ordered_json::array();
  for (const auto& s : episode.states) states.push_back(real_array(s));
  out["states"] = std::move(states);
  if (episode.strokes) {
    ordered_json points = ordered_json::array();
    for (const auto& p : episode.strokes->points) {
      points.push_back(ordered_json::array({p.x, p.y, p.pen_lift ? 1 : 0}));
    }
    out["strokes"] = std::move(points);
  }
  if (episode.outlier_step) out["outlier_step"] = *episode.outlier_step;
  return out;
}

SketchEpisode parse_episode(const ordered_json& record, std::size_t feature_dim, std::size_t steps,
                            const std::string& where) {
  reject_unknown(record, {"kind", "id", "paired_photo_id", "states", "strokes", "outlier_step"}, where);
  SketchEpisode episode;
  episode.id = get_string(record, "id", where);
  episode.paired_photo_id = get_string(record, "paired_photo_id", where);
  const auto& states = member(record, "states", where);
  if (!states.is_array() || states.size() != steps) {
    throw InvalidInput(where + ": 'states' must hold " + std::to_string(steps) + " states");
  }
  for (std::size_t t = 0; t < steps; ++t) {
    episode.states.push_back(to_vector(states[t], feature_dim, where, "states[" + std::to_string(t) + "]"));
  }
  if (const auto it = record.find("strokes"); it != record.end()) {
    if (!it->is_array()) throw InvalidInput(where + ": 'strokes' must be an array");
    StrokeSketch sketch;
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
          !p[2].is_number_unsigned() || p[2].get<unsigned>() > 1) {
        throw InvalidInput(where + ": stroke points must be [x, y, 0|1]");
      }
      sketch.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<unsigned>() == 1});
    }
    try {
      sketch.validate();
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + ": " + e.what());
    }
    episode.strokes = std::move(sketch);
  }
  if (record.contains("outlier_step")) episode.outlier_step = get_count(record, "outlier_step", where);
  return episode;
}

ordered_json head_fields(const LinearHead& head) {
  return {{"in_dim", head.in_dim()},
          {"out_dim", head.out_dim()},
          {"weight", matrix_json(head.weight)},
          {"bias", real_array(head.bias)}};
}

LinearHead parse_head(const ordered_json& object, const std::string& where) {
  const std::size_t in_dim = get_count(object, "in_dim", where);
  const std::size_t out_dim = get_count(object, "out_dim", where);
  if (in_dim == 0 || out_dim == 0) throw InvalidInput(where + ": dimensions must be positive");
  LinearHead head;
  head.weight = to_matrix(member(object, "weight", where), out_dim, in_dim, where, "weight");
  head.bias = to_vector(member(object, "bias", where), out_dim, where, "bias");
  return head;
}

}  // namespace

std::string dump_json(const ordered_json& value) {
  std::string out;
  dump_into(value, out);
  return out;
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + temp.string() + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw InvalidInput("write failed for '" + temp.string() + "'");
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw InvalidInput("cannot move output into place at '" + path + "'");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string serialize_dataset(const Dataset& dataset) {
  dataset.validate();
  ordered_json roles;
  roles["train"] = ordered_json::array();
  roles["test"] = ordered_json::array();
  for (const auto& e : dataset.train) roles["train"].push_back(e.id);
  for (const auto& e : dataset.test) roles["test"].push_back(e.id);
  ordered_json header = {{"kind", "header"},
                         {"format_version", kFormatVersion},
                         {"feature_dim", dataset.feature_dim},
                         {"T", dataset.steps},
                         {"roles", std::move(roles)}};
  std::string out = dump_json(header) + "\n";
  for (const auto& photo : dataset.photos) {
    out += dump_json({{"kind", "photo"}, {"id", photo.id}, {"features", real_array(photo.features)}});
    out += '\n';
  }
  for (const auto* split : {&dataset.train, &dataset.test}) {
    for (const auto& episode : *split) out += dump_json(episode_json(episode)) + "\n";
  }
  return out;
}

Dataset parse_dataset(std::string_view text) {
  Dataset dataset;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<SketchEpisode> episodes;
  std::size_t line_number = 0;
  bool have_header = false;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    const std::string where = "line " + std::to_string(line_number);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    ordered_json record;
    try {
      record = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(where + ": " + e.what());
    }
    if (!record.is_object()) throw InvalidInput(where + ": record must be an object");
    if (!have_header) {
      reject_unknown(record, {"kind", "format_version", "feature_dim", "T", "roles"}, where);
      if (record.contains("kind") && record["kind"] != "header") {
        throw InvalidInput(where + ": the first record must be the header");
      }
      if (get_string(record, "format_version", where) != kFormatVersion) {
        throw InvalidInput(where + ": unsupported format_version");
      }
      dataset.feature_dim = get_count(record, "feature_dim", where);
      dataset.steps = get_count(record, "T", where);
      const auto& roles = member(record, "roles", where);
      if (!roles.is_object()) throw InvalidInput(where + ": 'roles' must be an object");
      reject_unknown(roles, {"train", "test"}, where + " roles");
      for (auto [key, ids] : {std::pair{"train", &train_ids}, std::pair{"test", &test_ids}}) {
        const auto& list = member(roles, key, where + " roles");
        if (!list.is_array()) throw InvalidInput(where + ": roles." + key + " must be an array");
        for (const auto& id : list) {
          if (!id.is_string()) throw InvalidInput(where + ": roles." + key + " must hold strings");
          ids->push_back(id.get<std::string>());
        }
      }
      have_header = true;
      continue;
    }
    const std::string kind = get_string(record, "kind", where);
    if (kind == "photo") {
      reject_unknown(record, {"kind", "id", "features"}, where);
      Photo photo;
      photo.id = get_string(record, "id", where);
      photo.features = to_vector(member(record, "features", where), dataset.feature_dim, where, "features");
      dataset.photos.push_back(std::move(photo));
    } else if (kind == "episode") {
      episodes.push_back(parse_episode(record, dataset.feature_dim, dataset.steps, where));
    } else {
      throw InvalidInput(where + ": unknown record kind '" + kind + "'");
    }
  }
  if (!have_header) throw InvalidInput("dataset has no header");

  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (!by_id.emplace(episodes[i].id, i).second) {
      throw InvalidInput("duplicate episode id '" + episodes[i].id + "'");
    }
  }
  std::vector<bool> used(episodes.size(), false);
  for (auto [ids, split] : {std::pair{&train_ids, &dataset.train}, std::pair{&test_ids, &dataset.test}}) {
    for (const auto& id : *ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw InvalidInput("roles lists unknown episode '" + id + "'");
      if (used[it->second]) throw InvalidInput("episode '" + id + "' listed twice in roles");
      used[it->second] = true;
      split->push_back(episodes[it->second]);
    }
  }
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (!used[i]) throw InvalidInput("episode '" + episodes[i].id + "' has no role");
  }
  dataset.validate();
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  write_file_atomic(path, serialize_dataset(dataset));
}

Dataset load_dataset(const std::string& path) {
  try {
    return parse_dataset(read_file(path));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

GaussianPolicy ModelFile::policy() const {
  if (kind != ModelKind::kPolicy) throw InvalidInput("model is a head, not a policy");
  return GaussianPolicy{head, sigma};
}

void ModelFile::validate() const {
  head.validate();
  if (kind == ModelKind::kPolicy) {
    policy().validate();
    for (double s : sigma) {
      if (!(s >= kSigmaMin)) throw InvalidInput("policy sigma below the floor");
    }
    if (!gallery_head) throw InvalidInput("policy model lacks its gallery head");
    gallery_head->validate();
    if (gallery_head->out_dim() != head.out_dim() || gallery_head->in_dim() != head.in_dim()) {
      throw InvalidInput("gallery head shape does not match the policy");
    }
  } else if (!sigma.empty() || gallery_head) {
    throw InvalidInput("head model must not carry sigma or a gallery head");
  }
}

ModelFile make_head_model(const LinearHead& head, ordered_json meta) {
  ModelFile model;
  model.kind = ModelKind::kHead;
  model.head = head;
  model.training_meta = std::move(meta);
  return model;
}

ModelFile make_policy_model(const GaussianPolicy& policy, const LinearHead& gallery_head,
                            ordered_json meta) {
  ModelFile model;
  model.kind = ModelKind::kPolicy;
  model.head = policy.mean_head;
  model.sigma = policy.sigma;
  model.gallery_head = gallery_head;
  model.training_meta = std::move(meta);
  return model;
}

std::string serialize_model(const ModelFile& model) {
  model.validate();
  ordered_json out;
  out["format_version"] = kFormatVersion;
  out["kind"] = model.kind == ModelKind::kHead ? "head" : "policy";
  const ordered_json fields = head_fields(model.head);
  for (const auto& [key, value] : fields.items()) out[key] = value;
  if (model.kind == ModelKind::kPolicy) {
    out["sigma"] = real_array(model.sigma);
    out["gallery_head"] = head_fields(*model.gallery_head);
  }
  out["training_meta"] = model.training_meta;
  return dump_json(out) + "\n";
}

ModelFile parse_model(std::string_view text) {
  ordered_json document;
  try {
    document = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("model parse error: ") + e.what());
  }
  const std::string where = "model";
  if (!document.is_object()) throw InvalidInput("model must be a JSON object");
  if (get_string(document, "format_version", where) != kFormatVersion) {
    throw InvalidInput("unsupported model format_version");
  }
  ModelFile model;
  const std::string kind = get_string(document, "kind", where);
  if (kind == "head") {
    model.kind = ModelKind::kHead;
    reject_unknown(document, {"format_version", "kind", "in_dim", "out_dim", "weight", "bias", "training_meta"},
                   where);
  } else if (kind == "policy") {
    model.kind = ModelKind::kPolicy;
    reject_unknown(document,
                   {"format_version", "kind", "in_dim", "out_dim", "weight", "bias", "sigma", "gallery_head",
                    "training_meta"},
                   where);
  } else {
    throw InvalidInput("unknown model kind '" + kind + "'");
  }
  model.head = parse_head(document, where);
  if (model.kind == ModelKind::kPolicy) {
    model.sigma = to_vector(member(document, "sigma", where), model.head.out_dim(), where, "sigma");
    const auto& gallery = member(document, "gallery_head", where);
    if (!gallery.is_object()) throw InvalidInput("'gallery_head' must be an object");
    reject_unknown(gallery, {"in_dim", "out_dim", "weight", "bias"}, "gallery_head");
    model.gallery_head = parse_head(gallery, "gallery_head");
  }
  if (const auto it = document.find("training_meta"); it != document.end()) model.training_meta = *it;
  model.validate();
  return model;
}

void save_model(const ModelFile& model, const std::string& path) {
  write_file_atomic(path, serialize_model(model));
}

ModelFile load_model(const std::string& path) {
  try {
    return parse_model(read_file(path));
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,mean_reward,mA,mB,acc1,acc5,acc10,sbi\n";
  for (const auto& row : history) {
    const EvalSummary& e = row.eval;
    out += std::to_string(row.epoch);
    for (double v : {e.mean_reward, e.m_at_a, e.m_at_b, e.acc1, e.acc5, e.acc10, e.sbi}) {
      out += ',' + format_real(v);
    }
    out += '\n';
  }
  return out;
}

std::string summary_csv_header() { return "reward,episodes,mean_reward,mA,mB,acc1,acc5,acc10,sbi\n"; }

std::string summary_csv_row(const std::string& label, const EvalSummary& summary) {
  std::string out = label + ',' + std::to_string(summary.episodes);
  for (double v : {summary.mean_reward, summary.m_at_a, summary.m_at_b, summary.acc1, summary.acc5,
                   summary.acc10, summary.sbi}) {
    out += ',' + format_real(v);
  }
  return out + '\n';
}

std::string curve_csv(const EvalSummary& summary) {
  std::string out = "step_fraction,mean_percentile,mean_inverse_rank\n";
  const std::size_t steps = summary.curves.mean_percentile.size();
  for (std::size_t t = 0; t < steps; ++t) {
    const double fraction = static_cast<double>(t + 1) / static_cast<double>(steps);
    out += format_real(fraction) + ',' + format_real(summary.curves.mean_percentile[t]) + ',' +
           format_real(summary.curves.mean_inverse_rank[t]) + '\n';
  }
  return out;
}

}  // namespace otf
