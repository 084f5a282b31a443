#include "pssp/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pssp/checkpoint.hpp"
#include "pssp/error.hpp"
#include "pssp/evaluation.hpp"
#include "pssp/pipeline.hpp"
#include "pssp/render.hpp"
#include "pssp/tokenizer.hpp"

namespace pssp::cli {

nlohmann::json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"model", pssp::to_json(c.model)},
          {"train", pssp::to_json(c.train)},
          {"augment", pssp::to_json(c.augment)},
          {"dataset", c.dataset.string()},
          {"out", c.out.string()},
          {"checkpoint", c.checkpoint.string()},
          {"label_map", c.label_map.string()},
          {"max_windows", c.max_windows},
          {"seed", c.seed}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.command = j.value("command", c.command);
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    if (j.contains("augment")) c.augment = augment_config_from_json(j.at("augment"));
    c.dataset = j.value("dataset", std::string());
    c.out = j.value("out", std::string());
    c.checkpoint = j.value("checkpoint", std::string());
    c.label_map = j.value("label_map", std::string());
    c.max_windows = j.value("max_windows", c.max_windows);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("run configuration: ") + e.what());
  }
  return c;
}

namespace {

LabelMap label_map_for(const RunConfig& c) {
  return c.label_map.empty() ? LabelMap::standard() : LabelMap::from_file(c.label_map);
}

std::vector<WindowSample> build_windows(const std::vector<ProteinRecord>& records, const AugmentConfig& augment,
                                        std::size_t max_windows) {
  auto windows = augment_records(records, augment);
  if (max_windows > 0 && windows.size() > max_windows) windows.resize(max_windows);
  return windows;
}

void print_metrics(std::ostream& out, const WindowEvaluation& ev) {
  const auto s = eval::accuracy_recall_f1_summary(ev.report);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "validation loss: %.6f\nvalidation accuracy: %.6f\nweighted recall: %.6f\nweighted f1: %.6f\n",
                ev.loss, s.accuracy, s.recall, s.f1);
  out << buf;
  std::snprintf(buf, sizeof buf, "gap to reference accuracy %.4f: %+.4f\n", eval::kReferenceSummary.accuracy,
                s.accuracy - eval::kReferenceSummary.accuracy);
  out << buf << eval::format_report(ev.report);
  for (const auto& w : ev.report.warnings) out << "warning: " << w << '\n';
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  render::write_text_file(path, j.dump(2) + "\n");
}

int cmd_eda(const RunConfig& c, std::ostream& out) {
  const auto records = load_records(c.dataset, label_map_for(c));
  const auto eda = compute_eda(records);
  ensure_directory(c.out);
  render::write_eda_outputs(c.out, eda);
  out << "records: " << eda.record_count << '\n' << "residues: " << eda.residue_count << '\n';
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    out << "class " << to_char(kAllClasses[k]) << ": " << eda.class_frequency[k] << '\n';
  }
  out << "most frequent class: " << to_char(eda.most_frequent_class()) << '\n';
  return 0;
}

int cmd_augment(const RunConfig& c, std::ostream& out) {
  const auto records = load_records(c.dataset, label_map_for(c));
  const auto windows = build_windows(records, c.augment, c.max_windows);
  if (!c.out.empty()) {
    if (c.out.has_parent_path()) ensure_directory(c.out.parent_path());
    std::ofstream file(c.out, std::ios::binary);
    if (!file) throw Error(ErrorKind::IoFailure, "cannot write " + c.out.string());
    write_windows_csv(file, windows);
    if (!file) throw Error(ErrorKind::IoFailure, "write failed for " + c.out.string());
  }
  const double ref = static_cast<double>(kReferenceWindowCount);
  const double delta = static_cast<double>(windows.size()) - ref;
  char buf[160];
  std::snprintf(buf, sizeof buf, "windows: %zu\nreference: %zu\ndelta: %+.0f (%+.2f%%)\n", windows.size(),
                kReferenceWindowCount, delta, 100.0 * delta / ref);
  out << buf;
  return 0;
}

int cmd_train(RunConfig c, std::ostream& out) {
  const auto records = load_records(c.dataset, label_map_for(c));
  const auto windows = build_windows(records, c.augment, c.max_windows);
  if (c.model.max_len != c.augment.window) {
    throw Error(ErrorKind::InvalidConfig, "model max_len must equal the window size");
  }
  ensure_directory(c.out);
  if (c.checkpoint.empty()) c.checkpoint = c.out / "model.ckpt";
  write_json(c.out / "run_config.json", to_json(c));
  render::write_text_file(c.out / "vocab.json", build_vocabulary().to_json());
  out << "windows: " << windows.size() << '\n';

  auto result = training::train(c.model, c.train, windows, [&out](const training::EpochRecord& e) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "epoch %zu  train_loss %.4f  train_acc %.4f  val_loss %.4f  val_acc %.4f  lr %.3g  %.1fs\n",
                  e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc, e.lr, e.seconds);
    out << buf << std::flush;
  });
  out << (result.history.early_stopped ? "early stopping fired" : "ran all epochs") << " after "
      << result.history.epochs.size() << " epochs; best epoch " << result.history.best_epoch << '\n';

  CheckpointMeta meta{c.model, c.train, c.augment, c.max_windows, result.history};
  save_checkpoint(result.params, meta, c.checkpoint);
  render::write_history_outputs(c.out, result.history);

  const auto ev = evaluate_windows(result.params, result.split.val, c.train.exec);
  print_metrics(out, ev);
  return 0;
}

int cmd_eval(const RunConfig& c, std::ostream& out, const std::string& protein) {
  const auto ck = load_checkpoint(c.checkpoint);
  const auto records = load_records(c.dataset, label_map_for(c));
  const auto windows = build_windows(records, ck.meta.augment, ck.meta.max_windows);
  const auto split =
      split_train_val(windows, ck.meta.train.split_fraction, ck.meta.train.seed, ck.meta.train.split_mode);
  const auto ev = evaluate_windows(ck.params, split.val);
  ensure_directory(c.out);
  render::write_eval_outputs(c.out, ev.report);
  print_metrics(out, ev);

  const std::string wanted = protein.empty() ? split.val.front().source_id : protein;
  const auto it = std::find_if(records.begin(), records.end(), [&](const ProteinRecord& r) { return r.id == wanted; });
  if (it == records.end()) throw Error(ErrorKind::MalformedInput, "protein '" + wanted + "' is not in the dataset");
  const auto predicted = predict_sequence(ck.params, it->residues);
  render::write_alignment(c.out, {it->id, it->residues, labels_to_string(it->labels), labels_to_string(predicted)});
  return 0;
}

std::string normalize_query(const std::string& raw, std::ostream& err) {
  std::string seq;
  std::size_t unknown = 0;
  for (char ch : raw) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (!is_accepted_residue(c)) {
      throw Error(ErrorKind::MalformedInput, std::string("character '") + ch + "' is not an amino-acid letter");
    }
    if (Vocabulary::kCanonical.find(c) == std::string_view::npos) ++unknown;
    seq.push_back(c);
  }
  if (seq.empty()) throw Error(ErrorKind::MalformedInput, "empty sequence");
  if (unknown > 0) err << "warning: " << unknown << " nonstandard residue(s) mapped to the unknown token\n";
  return seq;
}

int cmd_predict(const RunConfig& c, std::ostream& out, std::ostream& err, const std::string& sequence,
                const std::filesystem::path& input) {
  const auto ck = load_checkpoint(c.checkpoint);
  std::ostringstream text;
  if (!sequence.empty()) {
    const auto seq = normalize_query(sequence, err);
    const auto pred = predict_sequence(ck.params, seq);
    text << ">query\n" << seq << '\n' << labels_to_string(pred) << '\n';
  } else {
    for (const auto& r : load_records(input, label_map_for(c))) {
      const auto pred = predict_sequence(ck.params, r.residues);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == r.labels[i] ? 1 : 0;
      char acc[64];
      std::snprintf(acc, sizeof acc, " accuracy=%.4f", static_cast<double>(hits) / static_cast<double>(pred.size()));
      text << '>' << r.id << acc << '\n'
           << r.residues << '\n'
           << labels_to_string(r.labels) << '\n'
           << labels_to_string(pred) << '\n';
    }
  }
  out << text.str();
  if (!c.out.empty()) render::write_text_file(c.out, text.str());
  return 0;
}

std::string find_config_arg(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    if (const auto path = find_config_arg(args); !path.empty()) {
      std::ifstream in(path);
      if (!in) throw Error(ErrorKind::IoFailure, "cannot open config " + path);
      try {
        c = run_config_from_json(nlohmann::json::parse(in));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, path + ": " + e.what());
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  CLI::App app{"Protein secondary structure prediction with a transformer encoder"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  int threads = 0;
  app.add_option("--config", config_path, "Resolved run_config.json to start from");
  app.add_option("--threads", threads, "OpenMP thread count (0 = runtime default)");

  std::string dataset = c.dataset.string(), out_path = c.out.string(), checkpoint = c.checkpoint.string(),
              label_map = c.label_map.string();
  std::string short_policy = to_string(c.augment.short_policy), split_mode = to_string(c.train.split_mode);
  std::uint64_t seed = c.seed;
  bool no_timing = !c.train.record_timing;
  bool serial = false;
  std::string sequence, input, protein;

  auto* eda = app.add_subcommand("eda", "Dataset statistics and distribution plots");
  auto* augment = app.add_subcommand("augment", "Sliding-window augmentation to CSV");
  auto* train = app.add_subcommand("train", "Train the encoder");
  auto* evaluate = app.add_subcommand("eval", "Evaluate a checkpoint on its validation split");
  auto* predict = app.add_subcommand("predict", "Predict labels for a sequence or record file");

  for (auto* sub : {eda, augment, train, evaluate}) {
    sub->add_option("--dataset", dataset, "Dataset in cb3 format")->required(c.dataset.empty());
    sub->add_option("--label-map", label_map, "JSON table mapping STRIDE characters to H/C/E");
  }
  for (auto* sub : {eda, augment, train, evaluate, predict}) {
    sub->add_option("--out", out_path, "Output directory (file for augment/predict)");
  }
  for (auto* sub : {augment, train}) {
    sub->add_option("--window", c.augment.window, "Window length")->capture_default_str();
    sub->add_option("--stride", c.augment.stride, "Window stride")->capture_default_str();
    sub->add_option("--short-policy", short_policy, "pad or skip sequences shorter than the window")
        ->capture_default_str();
    sub->add_option("--max-windows", c.max_windows, "Use only the first N windows (0 = all)");
  }
  CLI::Option* seed_opt = train->add_option("--seed", seed, "Seed for initialisation, split and shuffling (env PSSP_SEED)");
  train->add_option("--d-model", c.model.d_model)->capture_default_str();
  train->add_option("--num-heads", c.model.num_heads)->capture_default_str();
  train->add_option("--num-blocks", c.model.num_blocks)->capture_default_str();
  train->add_option("--ffn-dim", c.model.ffn_dim)->capture_default_str();
  train->add_option("--dropout", c.model.dropout)->capture_default_str();
  train->add_option("--batch-size", c.train.batch_size)->capture_default_str();
  train->add_option("--max-epochs", c.train.max_epochs)->capture_default_str();
  train->add_option("--lr", c.train.adam.lr)->capture_default_str();
  train->add_option("--split-fraction", c.train.split_fraction)->capture_default_str();
  train->add_option("--early-stop-patience", c.train.early_stop_patience)->capture_default_str();
  train->add_option("--early-stop-min-delta", c.train.early_stop_min_delta)->capture_default_str();
  train->add_option("--plateau-patience", c.train.plateau_patience)->capture_default_str();
  train->add_option("--plateau-factor", c.train.plateau_factor)->capture_default_str();
  train->add_option("--min-lr", c.train.min_lr)->capture_default_str();
  train->add_option("--split-mode", split_mode, "window or protein")->capture_default_str();
  train->add_option("--checkpoint", checkpoint, "Checkpoint path (default OUT/model.ckpt)");
  train->add_flag("--no-timing", no_timing, "Write zero wall times so reruns are byte-identical");
  train->add_flag("--serial", serial, "Run batches on the serial reference path");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required();
  evaluate->add_option("--protein", protein, "Record id for the alignment view (default: first validation protein)");
  predict->add_option("--checkpoint", checkpoint, "Checkpoint to use")->required();
  auto* seq_opt = predict->add_option("--sequence", sequence, "Amino-acid sequence");
  auto* in_opt = predict->add_option("--input", input, "Record file in cb3 format");
  seq_opt->excludes(in_opt);
  predict->add_option("--label-map", label_map, "JSON table mapping STRIDE characters to H/C/E");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  try {
    if (threads > 0) omp_set_num_threads(threads);
    c.dataset = dataset;
    c.out = out_path;
    c.checkpoint = checkpoint;
    c.label_map = label_map;
    c.augment.short_policy = short_policy_from_string(short_policy);
    c.train.split_mode = split_mode_from_string(split_mode);
    c.train.record_timing = !no_timing;
    c.train.exec = serial ? model::Exec::Serial : model::Exec::Parallel;
    c.model.max_len = c.augment.window;
    const bool explicit_seed = seed_opt->count() > 0;
    if (!explicit_seed && config_path.empty()) {
      if (const char* env = std::getenv("PSSP_SEED"); env != nullptr && *env != '\0') {
        try {
          seed = std::stoull(env);
        } catch (const std::exception&) {
          throw Error(ErrorKind::InvalidConfig, std::string("PSSP_SEED is not an integer: ") + env);
        }
      }
    }
    if (explicit_seed || config_path.empty()) {
      c.seed = seed;
      c.model.seed = seed;
      c.train.seed = seed;
    }

    auto* sub = app.get_subcommands().front();
    c.command = sub->get_name();
    out << "config: " << to_json(c).dump() << '\n';
    if (sub == eda) return cmd_eda(c, out);
    if (sub == augment) return cmd_augment(c, out);
    if (sub == train) {
      c.model.validate();
      c.train.validate();
      return cmd_train(c, out);
    }
    if (sub == evaluate) return cmd_eval(c, out, protein);
    if (sequence.empty() && input.empty()) throw Error(ErrorKind::InvalidConfig, "predict needs --sequence or --input");
    return cmd_predict(c, out, err, sequence, input);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pssp::cli
