#include "pssp/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pssp/error.hpp"

namespace pssp {
namespace {

constexpr char kMagic[8] = {'P', 'S', 'S', 'P', 'C', 'K', 'P', 'T'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

std::string checksum_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json history_json(const training::History& h) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : h.epochs) {
    // Wall time is left out so identical runs give identical files.
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_acc", e.train_acc},
                      {"val_loss", e.val_loss},
                      {"val_acc", e.val_acc},
                      {"lr", e.lr}});
  }
  return {{"epochs", epochs}, {"early_stopped", h.early_stopped}, {"best_epoch", h.best_epoch}};
}

training::History history_from_json(const nlohmann::json& j) {
  training::History h;
  for (const auto& e : j.at("epochs")) {
    training::EpochRecord r;
    r.epoch = e.at("epoch").get<std::size_t>();
    r.train_loss = e.at("train_loss").get<double>();
    r.train_acc = e.at("train_acc").get<double>();
    r.val_loss = e.at("val_loss").get<double>();
    r.val_acc = e.at("val_acc").get<double>();
    r.lr = e.at("lr").get<double>();
    h.epochs.push_back(r);
  }
  h.early_stopped = j.at("early_stopped").get<bool>();
  h.best_epoch = j.at("best_epoch").get<std::size_t>();
  return h;
}

}  // namespace

nlohmann::json to_json(const model::ModelConfig& c) {
  return {{"d_model", c.d_model},     {"num_heads", c.num_heads},     {"num_blocks", c.num_blocks},
          {"ffn_dim", c.ffn_dim},     {"vocab_size", c.vocab_size},   {"num_classes", c.num_classes},
          {"max_len", c.max_len},     {"dropout", c.dropout},         {"seed", c.seed}};
}

model::ModelConfig model_config_from_json(const nlohmann::json& j) {
  model::ModelConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.num_blocks = j.value("num_blocks", c.num_blocks);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.num_classes = j.value("num_classes", c.num_classes);
  c.max_len = j.value("max_len", c.max_len);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json to_json(const training::TrainConfig& c) {
  return {{"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"split_fraction", c.split_fraction},
          {"split_mode", to_string(c.split_mode)},
          {"early_stop_patience", c.early_stop_patience},
          {"early_stop_min_delta", c.early_stop_min_delta},
          {"plateau_patience", c.plateau_patience},
          {"plateau_factor", c.plateau_factor},
          {"min_lr", c.min_lr},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"seed", c.seed},
          {"restore_best", c.restore_best},
          {"record_timing", c.record_timing}};
}

training::TrainConfig train_config_from_json(const nlohmann::json& j) {
  training::TrainConfig c;
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.split_fraction = j.value("split_fraction", c.split_fraction);
  c.split_mode = split_mode_from_string(j.value("split_mode", to_string(c.split_mode)));
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.early_stop_min_delta = j.value("early_stop_min_delta", c.early_stop_min_delta);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
  c.min_lr = j.value("min_lr", c.min_lr);
  c.adam.lr = j.value("lr", c.adam.lr);
  c.adam.beta1 = j.value("beta1", c.adam.beta1);
  c.adam.beta2 = j.value("beta2", c.adam.beta2);
  c.adam.eps = j.value("adam_eps", c.adam.eps);
  c.seed = j.value("seed", c.seed);
  c.restore_best = j.value("restore_best", c.restore_best);
  c.record_timing = j.value("record_timing", c.record_timing);
  return c;
}

nlohmann::json to_json(const AugmentConfig& c) {
  return {{"window", c.window}, {"stride", c.stride}, {"short_policy", to_string(c.short_policy)}};
}

AugmentConfig augment_config_from_json(const nlohmann::json& j) {
  AugmentConfig c;
  c.window = j.value("window", c.window);
  c.stride = j.value("stride", c.stride);
  c.short_policy = short_policy_from_string(j.value("short_policy", to_string(c.short_policy)));
  return c;
}

void save_checkpoint(const model::Parameters& params, const CheckpointMeta& meta, const std::filesystem::path& path) {
  std::string payload;
  nlohmann::json manifest = nlohmann::json::array();
  params.for_each([&](const std::string& name, const nn::Tensor& t) {
    manifest.push_back({{"name", name}, {"shape", t.shape()}, {"offset", payload.size()}});
    for (double x : t.data()) put_u64(payload, std::bit_cast<std::uint64_t>(x));
  });

  nlohmann::json header = {{"format_version", kCheckpointVersion},
                           {"config", to_json(params.config)},
                           {"seed", params.config.seed},
                           {"train", to_json(meta.train)},
                           {"augment", to_json(meta.augment)},
                           {"max_windows", meta.max_windows},
                           {"history", history_json(meta.history)},
                           {"tensors", manifest},
                           {"data_bytes", payload.size()},
                           {"checksum", checksum_hex(payload)}};
  const std::string header_text = header.dump();

  std::string file(kMagic, sizeof kMagic);
  put_u64(file, header_text.size());
  file += header_text;
  file += payload;

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + tmp.string());
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoFailure, "cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open checkpoint " + path.string());
  const std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  auto corrupt = [&path](const std::string& why) {
    return Error(ErrorKind::CorruptCheckpoint, path.string() + ": " + why);
  };
  if (file.size() < 16 || file.compare(0, 8, kMagic, 8) != 0) throw corrupt("missing checkpoint magic");
  const auto header_len = get_u64(file, 8);
  if (header_len > file.size() - 16) throw corrupt("header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(file.begin() + 16, file.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception&) {
    throw corrupt("header is not valid JSON");
  }

  Checkpoint ck;
  std::vector<model::TensorSpec> expected;
  nlohmann::json tensors;
  std::size_t data_bytes = 0;
  std::string checksum;
  try {
    if (!header.contains("format_version")) throw corrupt("header has no format_version");
    const auto version = header.at("format_version").get<std::uint32_t>();
    if (version != kCheckpointVersion) {
      throw Error(ErrorKind::VersionMismatch, path.string() + ": format version " + std::to_string(version) +
                                                  ", expected " + std::to_string(kCheckpointVersion));
    }
    ck.meta.model = model_config_from_json(header.at("config"));
    ck.meta.train = train_config_from_json(header.at("train"));
    ck.meta.augment = augment_config_from_json(header.at("augment"));
    ck.meta.max_windows = header.at("max_windows").get<std::size_t>();
    ck.meta.history = history_from_json(header.at("history"));
    tensors = header.at("tensors");
    data_bytes = header.at("data_bytes").get<std::size_t>();
    checksum = header.at("checksum").get<std::string>();
    expected = model::parameter_manifest(ck.meta.model);
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::VersionMismatch || e.kind() == ErrorKind::CorruptCheckpoint) throw;
    throw corrupt(e.what());
  }

  if (!tensors.is_array() || tensors.size() != expected.size()) {
    throw Error(ErrorKind::VersionMismatch, path.string() + ": tensor manifest does not match the model config");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    std::string name;
    std::vector<std::size_t> shape;
    try {
      name = tensors[i].at("name").get<std::string>();
      shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
    } catch (const nlohmann::json::exception&) {
      throw corrupt("malformed tensor manifest entry");
    }
    if (name != expected[i].name || shape != expected[i].shape) {
      throw Error(ErrorKind::VersionMismatch, path.string() + ": manifest entry " + name + " " +
                                                  nn::shape_string(shape) + " does not match expected " +
                                                  expected[i].name + " " + nn::shape_string(expected[i].shape));
    }
  }

  const std::size_t data_start = 16 + header_len;
  if (file.size() - data_start != data_bytes) throw corrupt("tensor data truncated or padded");
  const std::string_view payload(file.data() + data_start, data_bytes);
  if (checksum_hex(payload) != checksum) throw corrupt("tensor data checksum mismatch");

  ck.params = model::zeros_like(model::init_params(ck.meta.model));
  std::size_t cursor = 0;
  std::size_t index = 0;
  bool layout_ok = true;
  ck.params.for_each([&](const std::string&, nn::Tensor& t) {
    if (tensors[index++].value("offset", std::size_t{0}) != cursor) layout_ok = false;
    for (auto& x : t.data()) {
      if (cursor + 8 > payload.size()) {
        layout_ok = false;
        return;
      }
      x = std::bit_cast<double>(get_u64(file, data_start + cursor));
      cursor += 8;
    }
  });
  if (!layout_ok || cursor != payload.size()) throw corrupt("tensor offsets do not match the manifest");
  return ck;
}

}  // namespace pssp
