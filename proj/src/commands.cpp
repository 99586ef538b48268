#include "otf/commands.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otf/config.hpp"
#include "otf/error.hpp"
#include "otf/io.hpp"
#include "otf/rng.hpp"

namespace otf {

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string dataset;
  std::string head;
  std::string model;
  std::string history;
  std::string curve;
  std::string episode;
  bool shuffle_strokes = false;
  bool all_schemes = false;
  bool dump_lists = false;
};

RunConfig load_config(const Options& options) {
  return options.config_path.empty() ? RunConfig{} : load_run_config(options.config_path);
}

const std::vector<SketchEpisode>& eval_split(const Dataset& dataset, const EvalConfig& eval) {
  return eval.split == EvalSplit::kTest ? dataset.test : dataset.train;
}

std::vector<std::size_t> final_ranks(const LinearHead& head, std::span<const SketchEpisode> episodes,
                                     const Gallery& gallery, DistanceMetric metric) {
  std::vector<std::size_t> ranks;
  for (const auto& e : episodes) {
    ranks.push_back(rank_of_index(embed(head, e.states.back()), gallery, gallery.index_of(e.paired_photo_id), metric));
  }
  return ranks;
}

int gen_synth(const Options& options, std::ostream& out) {
  RunConfig config = load_config(options);
  if (options.seed) config.sim.seed = *options.seed;
  const Dataset dataset = gen_synthetic_dataset(config.sim);
  save_dataset(dataset, options.out);
  out << "photos=" << dataset.photos.size() << " train=" << dataset.train.size()
      << " test=" << dataset.test.size() << " feature_dim=" << dataset.feature_dim
      << " T=" << dataset.steps << '\n';
  return kExitOk;
}

int pretrain_command(const Options& options, std::ostream& out) {
  RunConfig config = load_config(options);
  if (options.seed) config.pretrain.seed = *options.seed;
  const Dataset dataset = load_dataset(options.dataset);
  const PretrainResult result = pretrain(config.pretrain, dataset.train, dataset.photos);
  const Gallery gallery = build_gallery(result.head, dataset.photos);

  nlohmann::ordered_json meta;
  meta["stage"] = "pretrain";
  meta["pretrain"] = to_json(config)["pretrain"];
  meta["final_loss"] = result.epoch_loss.empty() ? 0.0 : result.epoch_loss.back();
  save_model(make_head_model(result.head, std::move(meta)), options.out);

  const auto metric = config.eval.distance;
  out << "epochs=" << result.epoch_loss.size();
  if (!result.epoch_loss.empty()) out << " final_loss=" << format_real(result.epoch_loss.back());
  if (!dataset.train.empty()) {
    out << " train_acc1=" << format_real(acc_at_q(final_ranks(result.head, dataset.train, gallery, metric), 1));
  }
  if (!dataset.test.empty()) {
    out << " test_acc1=" << format_real(acc_at_q(final_ranks(result.head, dataset.test, gallery, metric), 1));
  }
  out << '\n';
  return kExitOk;
}

int train_rl_command(const Options& options, std::ostream& out) {
  RunConfig config = load_config(options);
  if (options.seed) config.train.seed = *options.seed;
  const Dataset dataset = load_dataset(options.dataset);
  const ModelFile head_model = load_model(options.head);
  if (head_model.kind != ModelKind::kHead) throw InvalidInput(options.head + ": expected a head model");
  if (head_model.head.in_dim() != dataset.feature_dim) {
    throw InvalidInput("head input dimension does not match the dataset");
  }
  const Gallery gallery = build_gallery(head_model.head, dataset.photos);
  const TrainResult result = train(config.train, head_model.head, dataset.train, gallery, config.reward,
                                   eval_split(dataset, config.eval));

  nlohmann::ordered_json meta;
  meta["stage"] = "train-rl";
  const auto full = to_json(config);
  meta["reward"] = full["reward"];
  meta["train"] = full["train"];
  save_model(make_policy_model(result.policy, head_model.head, std::move(meta)), options.out);
  write_file_atomic(options.history, history_csv(result.history));

  const EvalSummary& first = result.history.front().eval;
  const EvalSummary& last = result.history.back().eval;
  out << "epochs=" << config.train.epochs << " mB_before=" << format_real(first.m_at_b)
      << " mB_after=" << format_real(last.m_at_b) << " mA_after=" << format_real(last.m_at_a) << '\n';
  return kExitOk;
}

std::vector<RewardConfig> ablation_rewards(const RewardConfig& base) {
  std::vector<RewardConfig> rewards;
  for (auto scheme : {RewardScheme::kInverseRank, RewardScheme::kInverseSqrtRank, RewardScheme::kNegRank}) {
    RewardConfig r = base;
    r.scheme = scheme;
    rewards.push_back(r);
  }
  for (std::size_t q : {1, 5, 10}) {
    RewardConfig r = base;
    r.scheme = RewardScheme::kThreshold;
    r.threshold_q = q;
    rewards.push_back(r);
  }
  return rewards;
}

int eval_command(const Options& options, std::ostream& out) {
  RunConfig config = load_config(options);
  if (options.seed) config.eval.seed = *options.seed;
  const Dataset dataset = load_dataset(options.dataset);
  const ModelFile model = load_model(options.model);
  if (model.head.in_dim() != dataset.feature_dim) {
    throw InvalidInput("model input dimension does not match the dataset");
  }
  const Gallery gallery = build_gallery(model.photo_head(), dataset.photos);

  std::vector<SketchEpisode> episodes = eval_split(dataset, config.eval);
  if (episodes.empty()) throw InvalidInput("the evaluated split has no episodes");
  if (options.shuffle_strokes) {
    Rng rng(derive_seed(config.eval.seed, "shuffle"));
    for (auto& e : episodes) {
      e = shuffle_episode_strokes(e, config.sim.grid_size, config.sim.pool_size, rng);
      if (e.states.front().size() != dataset.feature_dim) {
        throw InvalidInput("sim grid settings do not reproduce the dataset feature dimension");
      }
    }
  }

  const std::vector<RewardConfig> rewards =
      options.all_schemes ? ablation_rewards(config.reward) : std::vector<RewardConfig>{config.reward};
  std::string summary = summary_csv_header();
  std::optional<EvalSummary> first;
  for (const auto& reward : rewards) {
    const EvalSummary s = evaluate(model.head, episodes, gallery, reward, config.eval.distance);
    summary += summary_csv_row(reward.label(), s);
    if (!first) first = s;
  }
  write_file_atomic(options.out, summary);
  const std::string curve_path = options.curve.empty() ? options.out + ".curve.csv" : options.curve;
  write_file_atomic(curve_path, curve_csv(*first));
  out << "episodes=" << first->episodes << " mA=" << format_real(first->m_at_a)
      << " mB=" << format_real(first->m_at_b) << " acc1=" << format_real(first->acc1)
      << " sbi=" << format_real(first->sbi) << '\n';
  return kExitOk;
}

int replay_command(const Options& options, std::ostream& out) {
  const RunConfig config = load_config(options);
  const Dataset dataset = load_dataset(options.dataset);
  const ModelFile model = load_model(options.model);
  if (model.head.in_dim() != dataset.feature_dim) {
    throw InvalidInput("model input dimension does not match the dataset");
  }
  const Gallery gallery = build_gallery(model.photo_head(), dataset.photos);
  const SketchEpisode& episode = dataset.find_episode(options.episode);
  const EpisodeEvaluation e = evaluate_episode(model.head, episode, gallery, config.reward, config.eval.distance);

  std::string text;
  for (std::size_t t = 0; t < e.trace.ranks.size(); ++t) {
    text += "step=" + std::to_string(t + 1) + " rank=" + std::to_string(e.trace.ranks[t]) +
            " percentile=" + format_real(e.trace.percentiles[t]) + " tau=";
    if (t > 0) text += format_real(e.taus[t - 1]);
    if (options.dump_lists) {
      text += " list=";
      for (std::size_t i = 0; i < e.rank_lists[t].size(); ++i) {
        if (i > 0) text += ',';
        text += std::to_string(e.rank_lists[t][i]);
      }
    }
    text += '\n';
  }
  if (options.out.empty()) {
    out << text;
  } else {
    write_file_atomic(options.out, text);
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"On-the-fly sketch retrieval: synthetic data, pretraining, RL fine-tuning and evaluation"};
  app.require_subcommand(1);
  Options options;

  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", options.config_path, "Run configuration JSON")->check(CLI::ExistingFile);
  };
  const auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", options.seed, "Overrides the seed of this stage");
  };

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic dataset");
  add_config(gen);
  add_seed(gen);
  gen->add_option("--out", options.out, "Dataset JSONL path")->required();

  auto* pre = app.add_subcommand("pretrain", "Triplet-pretrain the sketch head");
  add_config(pre);
  add_seed(pre);
  pre->add_option("--dataset", options.dataset)->required()->check(CLI::ExistingFile);
  pre->add_option("--out", options.out, "Head model path")->required();

  auto* rl = app.add_subcommand("train-rl", "Fine-tune a policy with ranking rewards");
  add_config(rl);
  add_seed(rl);
  rl->add_option("--dataset", options.dataset)->required()->check(CLI::ExistingFile);
  rl->add_option("--head", options.head, "Pretrained head model")->required()->check(CLI::ExistingFile);
  rl->add_option("--out", options.out, "Policy model path")->required();
  rl->add_option("--history", options.history, "Per-epoch history CSV")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a head or policy");
  add_config(ev);
  add_seed(ev);
  ev->add_option("--model", options.model)->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", options.dataset)->required()->check(CLI::ExistingFile);
  ev->add_option("--out", options.out, "Summary CSV path")->required();
  ev->add_option("--curve", options.curve, "Per-step curve CSV (default: <out>.curve.csv)");
  ev->add_flag("--shuffle-strokes", options.shuffle_strokes, "Shuffle stroke order and re-render first");
  ev->add_flag("--all-schemes", options.all_schemes, "One summary row per reward scheme");

  auto* rp = app.add_subcommand("replay", "Print the per-step trace of one episode");
  add_config(rp);
  rp->add_option("--model", options.model)->required()->check(CLI::ExistingFile);
  rp->add_option("--dataset", options.dataset)->required()->check(CLI::ExistingFile);
  rp->add_option("--episode", options.episode)->required();
  rp->add_option("--out", options.out, "Write the trace here instead of stdout");
  rp->add_flag("--dump-lists", options.dump_lists, "Append each step's rank list");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return gen_synth(options, out);
    if (pre->parsed()) return pretrain_command(options, out);
    if (rl->parsed()) return train_rl_command(options, out);
    if (ev->parsed()) return eval_command(options, out);
    return replay_command(options, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace otf
