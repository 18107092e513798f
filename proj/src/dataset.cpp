#include "ksfno/dataset.hpp"

#include <mutex>
#include <optional>
#include <string>

#include "ksfno/binary_io.hpp"
#include "ksfno/error.hpp"
#include "ksfno/parallel.hpp"
#include "ksfno/rng.hpp"

namespace ksfno {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Unused: return "unused";
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

std::vector<std::size_t> Dataset::indices(Split tag) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == tag) out.push_back(i);
  }
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  const SolverConfig& ca = a.solver_config;
  const SolverConfig& cb = b.solver_config;
  return ca.n == cb.n && ca.h == cb.h && ca.dt == cb.dt && ca.t_final == cb.t_final &&
         a.base_seed == b.base_seed && a.prng_id == b.prng_id && a.samples == b.samples && a.split == b.split;
}

ScalarField2D generate_initial(std::size_t n, std::uint64_t seed, double h) {
  CounterRng rng(seed);
  std::vector<double> values(n * n);
  for (double& v : values) v = rng.next_uniform();
  return ScalarField2D(n, h, std::move(values));
}

Dataset generate_dataset(std::size_t count, std::uint64_t base_seed, const SolverConfig& config,
                         std::size_t threads, const std::function<void(std::size_t)>& on_sample) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "data.count must be >= 1");
  config.validate();

  std::vector<std::optional<Sample>> slots(count);
  std::mutex report_mutex;
  parallel_for(count, threads, [&](std::size_t i) {
    const std::uint64_t seed = base_seed + i;
    ScalarField2D u0 = generate_initial(config.n, seed, config.h);
    try {
      Trajectory traj = evolve(u0, config);
      slots[i] = Sample{std::move(u0), traj.final_frame(), seed};
    } catch (const BlowUpError& e) {
      throw BlowUpError("sample " + std::to_string(i) + ": " + e.what(), e.step(), i);
    }
    if (on_sample) {
      std::lock_guard lock(report_mutex);
      on_sample(i);
    }
  });

  Dataset ds;
  ds.solver_config = config;
  ds.base_seed = base_seed;
  ds.prng_id = CounterRng::kAlgorithmId;
  ds.samples.reserve(count);
  for (auto& s : slots) ds.samples.push_back(std::move(*s));
  ds.split.assign(count, Split::Unused);
  return ds;
}

Dataset assign_split(Dataset ds, std::size_t n_train, std::size_t n_val, std::size_t n_test) {
  const std::size_t total = ds.samples.size();
  if (n_train + n_val + n_test > total) {
    throw Error(ErrorCode::SplitTooLarge, "requested " + std::to_string(n_train) + "+" + std::to_string(n_val) +
                                              "+" + std::to_string(n_test) + " samples but dataset has " +
                                              std::to_string(total));
  }
  ds.split.assign(total, Split::Unused);
  std::size_t i = 0;
  for (std::size_t k = 0; k < n_train; ++k) ds.split[i++] = Split::Train;
  for (std::size_t k = 0; k < n_val; ++k) ds.split[i++] = Split::Val;
  for (std::size_t k = 0; k < n_test; ++k) ds.split[i++] = Split::Test;
  return ds;
}

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  const std::size_t n = ds.solver_config.n;
  if (ds.split.size() != ds.samples.size()) {
    throw Error(ErrorCode::InvalidArgument, "split tag count does not match sample count");
  }
  binio::Writer w;
  w.magic("KSD1");
  w.u32(kDatasetFormatVersion);
  w.u32(ds.prng_id);
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(ds.samples.size()));
  w.f64(ds.solver_config.h);
  w.f64(ds.solver_config.dt);
  w.f64(ds.solver_config.t_final);
  w.u64(ds.base_seed);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const Sample& s = ds.samples[i];
    if (s.input.n() != n || s.target.n() != n) {
      throw Error(ErrorCode::ShapeMismatch, "sample " + std::to_string(i) + " does not match solver.n");
    }
    w.u64(s.seed);
    w.u8(static_cast<std::uint8_t>(ds.split[i]));
    w.f64s(s.input.values());
    w.f64s(s.target.values());
  }
  w.seal();
  return w.bytes();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  const auto magic = r.magic();
  if (std::string_view(magic.data(), 4) != "KSD1") throw Error(ErrorCode::BadMagic, "not a KSD1 dataset file");
  const std::uint32_t version = r.u32();
  if (version != kDatasetFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "dataset format version " + std::to_string(version) + " unsupported");
  }
  binio::verify_crc(bytes);

  Dataset ds;
  ds.prng_id = r.u32();
  const std::size_t n = r.u32();
  const std::size_t count = r.u32();
  ds.solver_config.n = n;
  ds.solver_config.h = r.f64();
  ds.solver_config.dt = r.f64();
  ds.solver_config.t_final = r.f64();
  ds.base_seed = r.u64();

  const std::size_t per_sample = 9 + 16 * n * n;
  if (r.remaining() != count * per_sample + 4) {
    throw Error(ErrorCode::ChecksumMismatch, "payload size does not match header");
  }
  ds.samples.reserve(count);
  ds.split.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t seed = r.u64();
    const std::uint8_t tag = r.u8();
    if (tag > static_cast<std::uint8_t>(Split::Test)) {
      throw Error(ErrorCode::VersionMismatch, "unknown split tag " + std::to_string(tag));
    }
    std::vector<double> input(n * n), target(n * n);
    r.f64s(input);
    r.f64s(target);
    ds.samples.push_back(Sample{ScalarField2D(n, ds.solver_config.h, std::move(input)),
                                ScalarField2D(n, ds.solver_config.h, std::move(target)), seed});
    ds.split.push_back(static_cast<Split>(tag));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  binio::write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(binio::read_file(path)); }

}  // namespace ksfno
