#include "otf/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "otf/error.hpp"

namespace otf {

using nlohmann::ordered_json;

std::string_view to_string(DistanceMetric metric) {
  return metric == DistanceMetric::kEuclidean ? "euclidean" : "cosine";
}

DistanceMetric parse_distance(std::string_view name) {
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "cosine") return DistanceMetric::kCosine;
  throw InvalidInput("unknown distance '" + std::string(name) + "'");
}

namespace {

std::string_view to_string(EvalSplit split) { return split == EvalSplit::kTest ? "test" : "train"; }

EvalSplit parse_split(std::string_view name) {
  if (name == "test") return EvalSplit::kTest;
  if (name == "train") return EvalSplit::kTrain;
  throw InvalidInput("unknown split '" + std::string(name) + "'");
}

// Reads the members of one JSON object, remembering which keys were consumed
// so leftovers can be reported.
class Section {
 public:
  Section(const ordered_json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) throw InvalidInput("config key '" + path_ + "' must be an object");
  }

  const ordered_json* find(const char* key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const char* key, double& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number()) throw InvalidInput("config key '" + name(key) + "' must be a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, std::size_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw InvalidInput("config key '" + name(key) + "' must be a non-negative integer");
      }
      out = v->get<std::size_t>();
    }
  }

  void read_seed(const char* key, std::uint64_t& out) {
    if (const auto* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw InvalidInput("config key '" + name(key) + "' must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void read(const char* key, bool& out) {
    if (const auto* v = find(key)) {
      if (!v->is_boolean()) throw InvalidInput("config key '" + name(key) + "' must be a boolean");
      out = v->get<bool>();
    }
  }

  template <typename Parse>
  void read_enum(const char* key, Parse parse) {
    if (const auto* v = find(key)) {
      if (!v->is_string()) throw InvalidInput("config key '" + name(key) + "' must be a string");
      try {
        parse(v->get<std::string>());
      } catch (const InvalidInput& e) {
        throw InvalidInput("config key '" + name(key) + "': " + e.what());
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) throw InvalidInput("unknown config key '" + name(key.c_str()) + "'");
    }
  }

 private:
  const ordered_json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_adam(Section& parent, AdamConfig& adam) {
  if (const auto* v = parent.find("adam")) {
    Section s(*v, parent.name("adam"));
    s.read("beta1", adam.beta1);
    s.read("beta2", adam.beta2);
    s.read("eps", adam.eps);
    s.finish();
  }
}

ordered_json adam_json(const AdamConfig& adam) {
  return {{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}};
}

}  // namespace

void RunConfig::validate() const {
  sim.validate();
  pretrain.validate();
  reward.validate();
  train.validate();
}

RunConfig parse_run_config(const ordered_json& document) {
  RunConfig config;
  Section root(document, "");
  if (const auto* v = root.find("sim")) {
    Section s(*v, "sim");
    SimConfig& c = config.sim;
    s.read_enum("mode", [&](const std::string& x) { c.mode = parse_sim_mode(x); });
    s.read("num_photos", c.num_photos);
    s.read("n_train", c.n_train);
    s.read("n_test", c.n_test);
    s.read("steps", c.steps);
    s.read("feature_dim", c.feature_dim);
    s.read("noise_scale", c.noise_scale);
    s.read("noise_rank", c.noise_rank);
    s.read("outlier_prob", c.outlier_prob);
    s.read("outlier_magnitude", c.outlier_magnitude);
    s.read("grid_size", c.grid_size);
    s.read("pool_size", c.pool_size);
    s.read("strokes_per_sketch", c.strokes_per_sketch);
    s.read("points_per_stroke", c.points_per_stroke);
    s.read("jitter", c.jitter);
    s.read_seed("seed", c.seed);
    s.finish();
  }
  if (const auto* v = root.find("pretrain")) {
    Section s(*v, "pretrain");
    PretrainConfig& c = config.pretrain;
    s.read("margin", c.margin);
    s.read("epochs", c.epochs);
    s.read("batch_size", c.batch_size);
    s.read("lr", c.lr);
    s.read("embed_dim", c.embed_dim);
    s.read("init_scale", c.init_scale);
    s.read("use_partial_anchors", c.use_partial_anchors);
    read_adam(s, c.adam);
    s.read_seed("seed", c.seed);
    s.finish();
  }
  if (const auto* v = root.find("reward")) {
    Section s(*v, "reward");
    RewardConfig& c = config.reward;
    s.read_enum("scheme", [&](const std::string& x) { c.scheme = parse_reward_scheme(x); });
    s.read("threshold_q", c.threshold_q);
    s.read("gamma1", c.gamma1);
    s.read("gamma2", c.gamma2);
    s.read("reward_to_go", c.reward_to_go);
    s.finish();
  }
  if (const auto* v = root.find("train")) {
    Section s(*v, "train");
    TrainConfig& c = config.train;
    s.read("epochs", c.epochs);
    s.read("episodes_per_batch", c.episodes_per_batch);
    s.read("inner_epochs", c.inner_epochs);
    s.read("clip_epsilon", c.clip_epsilon);
    s.read("lr_initial", c.lr_initial);
    s.read("lr_final", c.lr_final);
    s.read("lr_drop_epoch", c.lr_drop_epoch);
    s.read_enum("objective", [&](const std::string& x) { c.objective = parse_objective(x); });
    read_adam(s, c.adam);
    s.read("sigma_init", c.sigma_init);
    s.read("sigma_min", c.sigma_min);
    s.read_seed("seed", c.seed);
    s.finish();
  }
  if (const auto* v = root.find("eval")) {
    Section s(*v, "eval");
    EvalConfig& c = config.eval;
    s.read_enum("distance", [&](const std::string& x) { c.distance = parse_distance(x); });
    s.read_enum("split", [&](const std::string& x) { c.split = parse_split(x); });
    s.read_seed("seed", c.seed);
    s.finish();
  }
  root.finish();
  config.train.metric = config.eval.distance;
  config.validate();
  return config;
}

RunConfig parse_run_config_text(std::string_view text) {
  ordered_json document;
  try {
    document = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(std::string("config parse error: ") + e.what());
  }
  return parse_run_config(document);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_run_config_text(text.str());
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

ordered_json to_json(const RunConfig& config) {
  const SimConfig& sim = config.sim;
  const PretrainConfig& pre = config.pretrain;
  const RewardConfig& reward = config.reward;
  const TrainConfig& train = config.train;
  ordered_json out;
  out["sim"] = {{"mode", to_string(sim.mode)},
                {"num_photos", sim.num_photos},
                {"n_train", sim.n_train},
                {"n_test", sim.n_test},
                {"steps", sim.steps},
                {"feature_dim", sim.feature_dim},
                {"noise_scale", sim.noise_scale},
                {"noise_rank", sim.noise_rank},
                {"outlier_prob", sim.outlier_prob},
                {"outlier_magnitude", sim.outlier_magnitude},
                {"grid_size", sim.grid_size},
                {"pool_size", sim.pool_size},
                {"strokes_per_sketch", sim.strokes_per_sketch},
                {"points_per_stroke", sim.points_per_stroke},
                {"jitter", sim.jitter},
                {"seed", sim.seed}};
  out["pretrain"] = {{"margin", pre.margin},
                     {"epochs", pre.epochs},
                     {"batch_size", pre.batch_size},
                     {"lr", pre.lr},
                     {"embed_dim", pre.embed_dim},
                     {"init_scale", pre.init_scale},
                     {"use_partial_anchors", pre.use_partial_anchors},
                     {"adam", adam_json(pre.adam)},
                     {"seed", pre.seed}};
  out["reward"] = {{"scheme", to_string(reward.scheme)},
                   {"threshold_q", reward.threshold_q},
                   {"gamma1", reward.gamma1},
                   {"gamma2", reward.gamma2},
                   {"reward_to_go", reward.reward_to_go}};
  out["train"] = {{"epochs", train.epochs},
                  {"episodes_per_batch", train.episodes_per_batch},
                  {"inner_epochs", train.inner_epochs},
                  {"clip_epsilon", train.clip_epsilon},
                  {"lr_initial", train.lr_initial},
                  {"lr_final", train.lr_final},
                  {"lr_drop_epoch", train.lr_drop_epoch},
                  {"objective", to_string(train.objective)},
                  {"adam", adam_json(train.adam)},
                  {"sigma_init", train.sigma_init},
                  {"sigma_min", train.sigma_min},
                  {"seed", train.seed}};
  out["eval"] = {{"distance", to_string(config.eval.distance)},
                 {"split", to_string(config.eval.split)},
                 {"seed", config.eval.seed}};
  return out;
}

}  // namespace otf
