#include "invlab/archive.hpp"

#include <bit>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

namespace invlab {

static_assert(std::endian::native == std::endian::little,
              "trial archives are little-endian; big-endian hosts are unsupported");

namespace fs = std::filesystem;
using nlohmann::json;

void write_archive(const TrialSet& trials, const std::string& dir, const ArchiveMeta& meta) {
  trials.validate();
  fs::create_directories(dir);

  json m;
  m["version"] = 1;
  m["subject_id"] = meta.subject_id;
  m["n_trials"] = trials.n_trials();
  m["channel_names"] = trials.channel_names;
  m["fs_out"] = meta.fs_out;
  m["trial_samples"] = trials.n_samples();
  m["labels_texture"] = trials.l_s;
  m["labels_movement"] = trials.l_m;
  m["seed"] = meta.seed;
  if (meta.generator) {
    const auto& g = *meta.generator;
    m["generator"] = {{"n_channels", g.n_channels},
                      {"fs_raw", g.fs_raw},
                      {"fs_out", g.fs_out},
                      {"trial_samples", g.trial_samples},
                      {"snr_texture", g.snr_texture},
                      {"leak_movement", g.leak_movement},
                      {"noise_exponent", g.noise_exponent},
                      {"seed", g.seed}};
  }

  {
    std::ofstream js(fs::path(dir) / "manifest.json");
    if (!js) throw std::runtime_error("write_archive: cannot write manifest.json under " + dir);
    js << m.dump(2) << "\n";
  }
  {
    std::ofstream bin(fs::path(dir) / "trials.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("write_archive: cannot write trials.bin under " + dir);
    bin.write(reinterpret_cast<const char*>(trials.X.data()),
              static_cast<std::streamsize>(trials.X.size() * sizeof(float)));
  }
}

TrialSet read_archive(const std::string& dir, ArchiveMeta* meta_out) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream js(manifest_path);
  if (!js) throw std::runtime_error("read_archive: cannot open " + manifest_path.string());
  json m;
  try {
    js >> m;
  } catch (const json::exception& e) {
    throw std::runtime_error("read_archive: malformed manifest.json: " + std::string(e.what()));
  }

  const int version = m.at("version").get<int>();
  if (version != 1)
    throw std::runtime_error("read_archive: unknown manifest version " + std::to_string(version));
  const int n = m.at("n_trials").get<int>();
  if (n <= 0) throw std::runtime_error("read_archive: empty archive (n_trials = " +
                                       std::to_string(n) + ")");
  const auto channel_names = m.at("channel_names").get<std::vector<std::string>>();
  const int C = static_cast<int>(channel_names.size());
  const int T = m.at("trial_samples").get<int>();
  auto l_s = m.at("labels_texture").get<std::vector<int>>();
  auto l_m = m.at("labels_movement").get<std::vector<int>>();
  if (l_s.size() != static_cast<std::size_t>(n))
    throw std::runtime_error("read_archive: labels_texture length " + std::to_string(l_s.size()) +
                             " != n_trials " + std::to_string(n));
  if (l_m.size() != static_cast<std::size_t>(n))
    throw std::runtime_error("read_archive: labels_movement length " + std::to_string(l_m.size()) +
                             " != n_trials " + std::to_string(n));

  const fs::path bin_path = fs::path(dir) / "trials.bin";
  const std::uintmax_t expected = static_cast<std::uintmax_t>(n) * C * T * sizeof(float);
  std::error_code ec;
  const std::uintmax_t actual = fs::file_size(bin_path, ec);
  if (ec) throw std::runtime_error("read_archive: cannot stat " + bin_path.string());
  if (actual != expected)
    throw std::runtime_error("read_archive: trials.bin size " + std::to_string(actual) +
                             " != n_trials*channels*samples*4 = " + std::to_string(expected));

  TrialSet set;
  set.channel_names = channel_names;
  set.l_s = std::move(l_s);
  set.l_m = std::move(l_m);
  set.X = Tensor({n, C, T});
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin.read(reinterpret_cast<char*>(set.X.data()), static_cast<std::streamsize>(expected)))
    throw std::runtime_error("read_archive: short read from " + bin_path.string());
  set.validate();

  if (meta_out) {
    meta_out->subject_id = m.value("subject_id", std::string("unknown"));
    meta_out->fs_out = m.value("fs_out", 300);
    meta_out->seed = m.value("seed", std::uint64_t(0));
    if (m.contains("generator")) {
      GeneratorConfig g;
      const auto& jg = m["generator"];
      g.n_channels = jg.value("n_channels", 14);
      g.fs_raw = jg.value("fs_raw", 1200.0);
      g.fs_out = jg.value("fs_out", 300.0);
      g.trial_samples = jg.value("trial_samples", 100);
      g.snr_texture = jg.value("snr_texture", 0.8);
      g.leak_movement = jg.value("leak_movement", 0.8);
      g.noise_exponent = jg.value("noise_exponent", 1.0);
      g.seed = jg.value("seed", std::uint64_t(0));
      meta_out->generator = g;
    } else {
      meta_out->generator.reset();
    }
  }
  return set;
}

}  // namespace invlab
