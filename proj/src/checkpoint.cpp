#include "invlab/checkpoint.hpp"

#include <bit>
#include <fstream>

#include <nlohmann/json.hpp>

namespace invlab {

static_assert(std::endian::native == std::endian::little,
              "checkpoints are little-endian; big-endian hosts are unsupported");

using nlohmann::json;

namespace {

json arch_to_json(const ArchSpec& a) {
  return {{"n_channels", a.n_channels},
          {"n_samples", a.n_samples},
          {"temporal_filters", a.temporal_filters},
          {"temporal_kernel", a.temporal_kernel},
          {"depth_multiplier", a.depth_multiplier},
          {"separable_filters", a.separable_filters},
          {"separable_kernel", a.separable_kernel},
          {"pool1", a.pool1},
          {"pool2", a.pool2},
          {"latent_dim", a.latent_dim},
          {"n_classes", a.n_classes},
          {"n_nuisance", a.n_nuisance},
          {"dropout_p", a.dropout_p}};
}

ArchSpec arch_from_json(const json& j) {
  ArchSpec a;
  a.n_channels = j.at("n_channels").get<int>();
  a.n_samples = j.at("n_samples").get<int>();
  a.temporal_filters = j.at("temporal_filters").get<int>();
  a.temporal_kernel = j.at("temporal_kernel").get<int>();
  a.depth_multiplier = j.at("depth_multiplier").get<int>();
  a.separable_filters = j.at("separable_filters").get<int>();
  a.separable_kernel = j.at("separable_kernel").get<int>();
  a.pool1 = j.at("pool1").get<int>();
  a.pool2 = j.at("pool2").get<int>();
  a.latent_dim = j.at("latent_dim").get<int>();
  a.n_classes = j.at("n_classes").get<int>();
  a.n_nuisance = j.at("n_nuisance").get<int>();
  a.dropout_p = j.at("dropout_p").get<double>();
  return a;
}

json train_config_to_json(const TrainConfig& c) {
  return {{"lambda", c.lambda},
          {"batch_size", c.batch_size},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"adam",
           {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.adam.lr = j.at("adam").at("lr").get<double>();
  c.adam.beta1 = j.at("adam").at("beta1").get<double>();
  c.adam.beta2 = j.at("adam").at("beta2").get<double>();
  c.adam.eps = j.at("adam").at("eps").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  auto& params = const_cast<NetworkParams&>(ckpt.params);
  const auto named = named_params(params);

  json header;
  header["format"] = "invlab-checkpoint";
  header["version"] = 1;
  header["arch"] = arch_to_json(ckpt.params.spec);
  header["seed"] = ckpt.params.seed;
  header["epoch"] = ckpt.epoch;
  header["train_config"] = train_config_to_json(ckpt.config);

  std::size_t offset = 0;
  json layers = json::array();
  for (const auto& np : named) {
    layers.push_back({{"name", np.name},
                      {"shape", np.tensor->shape()},
                      {"offset", offset},
                      {"count", np.tensor->size()},
                      {"trainable", np.trainable}});
    offset += np.tensor->size() * sizeof(float);
  }
  header["layers"] = layers;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
  out << header.dump() << "\n";
  for (const auto& np : named)
    out.write(reinterpret_cast<const char*>(np.tensor->data()),
              static_cast<std::streamsize>(np.tensor->size() * sizeof(float)));
  if (!out) throw std::runtime_error("save_checkpoint: short write to " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line))
    throw std::runtime_error("load_checkpoint: missing header in " + path);
  json header;
  try {
    header = json::parse(header_line);
  } catch (const json::exception& e) {
    throw std::runtime_error("load_checkpoint: malformed header: " + std::string(e.what()));
  }
  if (header.value("format", "") != "invlab-checkpoint" || header.value("version", 0) != 1)
    throw std::runtime_error("load_checkpoint: unsupported format/version in " + path);

  Checkpoint ckpt;
  const ArchSpec arch = arch_from_json(header.at("arch"));
  ckpt.params = build_network<float>(arch, header.at("seed").get<std::uint64_t>());
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.config = train_config_from_json(header.at("train_config"));

  const std::streampos blob_start = in.tellg();
  auto named = named_params(ckpt.params);
  const auto& layers = header.at("layers");
  if (layers.size() != named.size())
    throw std::runtime_error("load_checkpoint: layer count mismatch in " + path);
  for (std::size_t i = 0; i < named.size(); ++i) {
    const auto& lj = layers[i];
    if (lj.at("name").get<std::string>() != named[i].name)
      throw std::runtime_error("load_checkpoint: unexpected layer '" +
                               lj.at("name").get<std::string>() + "', wanted '" + named[i].name + "'");
    const auto shape = lj.at("shape").get<std::vector<int>>();
    if (!named[i].tensor->same_shape(shape))
      throw std::runtime_error("load_checkpoint: shape mismatch for " + named[i].name);
    in.seekg(blob_start + static_cast<std::streamoff>(lj.at("offset").get<std::size_t>()));
    if (!in.read(reinterpret_cast<char*>(named[i].tensor->data()),
                 static_cast<std::streamsize>(named[i].tensor->size() * sizeof(float))))
      throw std::runtime_error("load_checkpoint: short read for " + named[i].name);
  }
  return ckpt;
}

}  // namespace invlab
