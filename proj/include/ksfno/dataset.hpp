#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string_view>
#include <vector>

#include "ksfno/field.hpp"
#include "ksfno/ks_solver.hpp"

namespace ksfno {

enum class Split : std::uint8_t { Unused = 0, Train = 1, Val = 2, Test = 3 };

std::string_view to_string(Split split);

struct Sample {
  ScalarField2D input;   // u at t = 0
  ScalarField2D target;  // u at t = t_final
  std::uint64_t seed = 0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  SolverConfig solver_config;
  std::uint64_t base_seed = 0;
  std::uint32_t prng_id = 0;
  std::vector<Sample> samples;
  std::vector<Split> split;  // one tag per sample

  /// Indices of samples carrying `tag`, in generation order.
  std::vector<std::size_t> indices(Split tag) const;

  /// snapshot_stride is not part of the persisted state and is ignored here.
  friend bool operator==(const Dataset& a, const Dataset& b);
};

/// n*n draws from Uniform[0, 1) using CounterRng(seed).
ScalarField2D generate_initial(std::size_t n, std::uint64_t seed, double h = 1.0);

/// Sample i is seeded with base_seed + i and carries (u0, evolve(u0).final).
/// Samples are computed on up to `threads` worker threads; results do not
/// depend on the thread count. All split tags start as Unused. `on_sample`
/// runs once per finished sample index; calls are serialized.
Dataset generate_dataset(std::size_t count, std::uint64_t base_seed, const SolverConfig& config,
                         std::size_t threads = 1, const std::function<void(std::size_t)>& on_sample = {});

/// First n_train tagged Train, next n_val Val, next n_test Test, rest Unused.
/// Throws SplitTooLarge when the counts exceed the sample count.
Dataset assign_split(Dataset ds, std::size_t n_train, std::size_t n_val, std::size_t n_test);

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

/// KSD1 layout, all little-endian:
///   "KSD1" | version u32 | prng id u32 | n u32 | count u32 | h f64 | dt f64 |
///   t_final f64 | base_seed u64 | per sample { seed u64, split u8,
///   input n*n f64, target n*n f64 } | CRC32 of all preceding bytes
std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ksfno
